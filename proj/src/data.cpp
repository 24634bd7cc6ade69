#include "adams/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "adams/errors.hpp"
#include "adams/rng.hpp"

namespace adams {

void GenConfig::validate() const {
  if (num_classes < 2) {
    throw ConfigError("need at least 2 classes");
  }
  if (samples_per_class < 1) {
    throw ConfigError("need at least 1 sample per class");
  }
  if (unseen_fraction < 0.0 || unseen_fraction >= 1.0) {
    throw ConfigError("unseen_fraction must lie in [0, 1)");
  }
  if (input_dim < 1 || text_dim < 1) {
    throw ConfigError("dims must be positive");
  }
  if (!zero_noise && !(noise_scale_lo > 0.0 && noise_scale_hi >= noise_scale_lo)) {
    throw ConfigError("noise scale range must satisfy 0 < lo <= hi");
  }
  if (seq_len_lo < 1 || seq_len_hi < seq_len_lo) {
    throw ConfigError("sequence length range must satisfy 1 <= lo <= hi");
  }
  if (train_fraction <= 0.0 || dev_fraction < 0.0 ||
      train_fraction + dev_fraction >= 1.0) {
    throw ConfigError("split fractions must satisfy train > 0, dev >= 0, "
                      "train + dev < 1");
  }
  if (confusability < 0.0 || confusability > 1.0) {
    throw ConfigError("confusability must lie in [0, 1]");
  }
}

std::vector<const Sample*> SyntheticDataset::samples_in_split(
    Split split) const {
  std::vector<const Sample*> out;
  for (const auto& s : samples) {
    if (s.split == split) out.push_back(&s);
  }
  return out;
}

int SyntheticDataset::num_unseen_classes() const {
  int n = 0;
  for (const auto& c : classes) n += c.unseen ? 1 : 0;
  return n;
}

const char* split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

SyntheticDataset generate(const GenConfig& config) {
  config.validate();
  const int num_unseen = static_cast<int>(
      std::llround(config.unseen_fraction * config.num_classes));
  if (config.num_classes - num_unseen < 2) {
    throw ConfigError("unseen_fraction leaves fewer than 2 seen classes");
  }
  const int m = config.samples_per_class;
  const int n_train = static_cast<int>(std::llround(config.train_fraction * m));
  const int n_dev = static_cast<int>(std::llround(config.dev_fraction * m));
  if (n_train < 2) {
    throw ConfigError("train split needs at least 2 samples per class; "
                      "raise samples_per_class or train_fraction");
  }
  if (n_train + n_dev >= m) {
    throw ConfigError("split fractions leave no test samples per class");
  }

  Rng rng(config.seed);
  SyntheticDataset ds;
  ds.input_dim = config.input_dim;
  ds.text_dim = config.text_dim;
  ds.classes.resize(static_cast<std::size_t>(config.num_classes));
  for (int c = 0; c < config.num_classes; ++c) {
    auto& info = ds.classes[static_cast<std::size_t>(c)];
    info.id = c;
    info.centroid = rng.unit_vector(config.input_dim);
    info.text_features = rng.unit_vector(config.text_dim);
    info.noise_scale = config.zero_noise
                           ? 0.0
                           : rng.log_uniform(config.noise_scale_lo,
                                             config.noise_scale_hi);
  }

  // Blend a shared component into confusable class pairs.
  std::vector<int> order(static_cast<std::size_t>(config.num_classes));
  for (int c = 0; c < config.num_classes; ++c) {
    order[static_cast<std::size_t>(c)] = c;
  }
  rng.shuffle(order);
  const int num_pairs = static_cast<int>(
      config.confusability * config.num_classes / 2.0);
  for (int p = 0; p < num_pairs; ++p) {
    const Vector shared = rng.unit_vector(config.text_dim);
    for (int member = 0; member < 2; ++member) {
      auto& info = ds.classes[static_cast<std::size_t>(
          order[static_cast<std::size_t>(2 * p + member)])];
      Vector blended(info.text_features.size());
      for (std::size_t i = 0; i < blended.size(); ++i) {
        blended[i] = info.text_features[i] + 0.6 * shared[i];
      }
      info.text_features = l2_normalize(blended);
    }
  }

  // Unseen flags on a random subset of classes.
  std::vector<int> unseen_order = order;
  rng.shuffle(unseen_order);
  for (int u = 0; u < num_unseen; ++u) {
    ds.classes[static_cast<std::size_t>(
                   unseen_order[static_cast<std::size_t>(u)])]
        .unseen = true;
  }

  int sample_id = 0;
  for (int c = 0; c < config.num_classes; ++c) {
    const auto& info = ds.classes[static_cast<std::size_t>(c)];
    for (int s = 0; s < m; ++s) {
      Sample sample;
      sample.id = sample_id++;
      sample.class_id = c;
      if (info.unseen) {
        sample.split = Split::test;
      } else if (s < n_train) {
        sample.split = Split::train;
      } else if (s < n_train + n_dev) {
        sample.split = Split::dev;
      } else {
        sample.split = Split::test;
      }
      const int seq_len = rng.uniform_int(config.seq_len_lo, config.seq_len_hi);
      sample.frames.resize(static_cast<std::size_t>(seq_len));
      for (auto& frame : sample.frames) {
        frame.resize(static_cast<std::size_t>(config.input_dim));
        for (std::size_t i = 0; i < frame.size(); ++i) {
          frame[i] = info.centroid[i] + info.noise_scale * rng.normal();
        }
      }
      ds.samples.push_back(std::move(sample));
    }
  }
  return ds;
}

namespace {

constexpr char kMagic[4] = {'A', 'W', 'D', 'B'};
constexpr std::uint32_t kDatasetVersion = 1;

// Explicit little-endian encoding, independent of host byte order.
void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(out, bits);
}

void put_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

std::uint32_t get_u32(std::istream& in) {
  char b[4];
  if (!in.read(b, 4)) throw FormatError("dataset file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  char b[8];
  if (!in.read(b, 8)) throw FormatError("dataset file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  }
  return v;
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == EOF) throw FormatError("dataset file truncated");
  return static_cast<std::uint8_t>(c);
}

void put_vector(std::ostream& out, const Vector& v) {
  for (double x : v) put_f64(out, x);
}

Vector get_vector(std::istream& in, std::size_t dim) {
  Vector v(dim);
  for (auto& x : v) x = get_f64(in);
  return v;
}

}  // namespace

void save(const SyntheticDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open dataset file for writing: " + path);
  }
  out.write(kMagic, 4);
  put_u32(out, kDatasetVersion);
  put_u32(out, static_cast<std::uint32_t>(dataset.classes.size()));
  put_u32(out, static_cast<std::uint32_t>(dataset.input_dim));
  put_u32(out, static_cast<std::uint32_t>(dataset.text_dim));
  put_u64(out, dataset.samples.size());
  for (const auto& c : dataset.classes) {
    put_u32(out, static_cast<std::uint32_t>(c.id));
    put_u8(out, c.unseen ? 1 : 0);
    put_f64(out, c.noise_scale);
    put_vector(out, c.text_features);
    put_vector(out, c.centroid);
  }
  for (const auto& s : dataset.samples) {
    put_u32(out, static_cast<std::uint32_t>(s.id));
    put_u32(out, static_cast<std::uint32_t>(s.class_id));
    put_u8(out, static_cast<std::uint8_t>(s.split));
    put_u32(out, static_cast<std::uint32_t>(s.frames.size()));
    for (const auto& f : s.frames) put_vector(out, f);
  }
  out.flush();
  if (!out) {
    throw IoError("failed to write dataset file: " + path);
  }
}

SyntheticDataset load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset file: " + path);
  }
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("not a dataset file (bad magic)");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " +
                      std::to_string(version));
  }
  const std::uint32_t num_classes = get_u32(in);
  SyntheticDataset ds;
  ds.input_dim = static_cast<int>(get_u32(in));
  ds.text_dim = static_cast<int>(get_u32(in));
  const std::uint64_t num_samples = get_u64(in);
  ds.classes.resize(num_classes);
  for (auto& c : ds.classes) {
    c.id = static_cast<int>(get_u32(in));
    c.unseen = get_u8(in) != 0;
    c.noise_scale = get_f64(in);
    c.text_features = get_vector(in, static_cast<std::size_t>(ds.text_dim));
    c.centroid = get_vector(in, static_cast<std::size_t>(ds.input_dim));
  }
  ds.samples.resize(num_samples);
  for (auto& s : ds.samples) {
    s.id = static_cast<int>(get_u32(in));
    s.class_id = static_cast<int>(get_u32(in));
    const std::uint8_t split = get_u8(in);
    if (split > 2) throw FormatError("dataset file has a bad split tag");
    s.split = static_cast<Split>(split);
    const std::uint32_t num_frames = get_u32(in);
    s.frames.resize(num_frames);
    for (auto& f : s.frames) {
      f = get_vector(in, static_cast<std::size_t>(ds.input_dim));
    }
  }
  return ds;
}

void export_csv(const SyntheticDataset& dataset, std::ostream& out) {
  out << "sample_id,class_id,split,unseen,num_frames,noise_scale\n";
  for (const auto& s : dataset.samples) {
    const auto& c = dataset.classes[static_cast<std::size_t>(s.class_id)];
    out << s.id << ',' << s.class_id << ',' << split_name(s.split) << ','
        << (c.unseen ? 1 : 0) << ',' << s.frames.size() << ','
        << c.noise_scale << '\n';
  }
  out.flush();
  if (!out) {
    throw IoError("failed to write dataset CSV");
  }
}

}  // namespace adams
