#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "adams/geometry.hpp"

namespace adams {

enum class Split : std::uint8_t { train = 0, dev = 1, test = 2 };

// Synthetic word-discrimination data. Classes differ in intrinsic
// intra-variance: each class draws its own noise scale, log-uniformly,
// so some classes are genuinely harder than others.
struct GenConfig {
  int num_classes = 50;
  int samples_per_class = 20;
  double unseen_fraction = 0.2;
  int input_dim = 16;
  int text_dim = 16;
  double noise_scale_lo = 0.03;
  double noise_scale_hi = 0.15;
  int seq_len_lo = 3;
  int seq_len_hi = 10;
  double train_fraction = 0.7;
  double dev_fraction = 0.1;
  // Fraction of classes paired up to share a text-feature component,
  // so that proxies of "similar" words start out confusable.
  double confusability = 0.25;
  // Sanity mode: every sample's frames equal the class centroid
  // exactly. Overrides the noise range.
  bool zero_noise = false;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
};

struct ClassInfo {
  int id = 0;
  Vector text_features;
  Vector centroid;
  double noise_scale = 0.0;
  bool unseen = false;

  bool operator==(const ClassInfo&) const = default;
};

struct Sample {
  int id = 0;
  int class_id = 0;
  Split split = Split::train;
  std::vector<Vector> frames;

  bool operator==(const Sample&) const = default;
};

struct SyntheticDataset {
  int input_dim = 0;
  int text_dim = 0;
  std::vector<ClassInfo> classes;
  std::vector<Sample> samples;

  bool operator==(const SyntheticDataset&) const = default;

  std::vector<const Sample*> samples_in_split(Split split) const;
  int num_unseen_classes() const;
  bool has_unseen_classes() const { return num_unseen_classes() > 0; }
};

// Deterministic given config.seed. Unseen classes contribute samples
// only to the test split; every seen class keeps at least two samples
// in train.
SyntheticDataset generate(const GenConfig& config);

// Binary container: magic, version, dims/counts header, little-endian
// 64-bit floats. Round trip is bit-exact.
void save(const SyntheticDataset& dataset, const std::string& path);
SyntheticDataset load(const std::string& path);

// Human-readable summary (one row per sample); not the canonical store.
void export_csv(const SyntheticDataset& dataset, std::ostream& out);

const char* split_name(Split split);

}  // namespace adams
