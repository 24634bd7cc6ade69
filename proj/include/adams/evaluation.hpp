#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "adams/data.hpp"
#include "adams/encoder.hpp"
#include "adams/geometry.hpp"

namespace adams {

// One candidate retrieval pair, in generation order. Ties in similarity
// are broken by that order, which keeps every run reproducible.
struct ScoredPair {
  double sim;
  bool relevant;
};

struct ApResult {
  double ap = 0.0;
  std::size_t num_pairs = 0;
  std::size_t num_relevant = 0;
};

// AP = (1/R) sum over relevant pairs of precision@rank, pairs ranked by
// similarity descending. Throws std::domain_error when no pair is
// relevant.
ApResult average_precision(const std::vector<ScoredPair>& pairs);

struct LabeledEmbedding {
  Vector embedding;
  int class_id = 0;
  bool unseen = false;
};

// Acoustic word discrimination: all unordered embedding pairs,
// relevant = same class.
ApResult acoustic_ap(const std::vector<LabeledEmbedding>& items);

// Cross-view word discrimination: all (acoustic sample, proxy)
// combinations, relevant = matching class. Every acoustic class must
// have a proxy (std::invalid_argument otherwise).
struct ClassProxy {
  int class_id = 0;
  Vector embedding;
};
ApResult crossview_ap(const std::vector<LabeledEmbedding>& items,
                      const std::vector<ClassProxy>& proxies);

// Acoustic AP restricted to pairs with at least one unseen-class member
// as the query; the retrieval set is the whole input. Throws
// std::domain_error when no unseen sample is present.
ApResult unseen_query_ap(const std::vector<LabeledEmbedding>& items);

struct EvalReport {
  ApResult acoustic;
  ApResult crossview;
  std::optional<ApResult> unseen;

  // Metrics in [0,1] and in percent; the unseen block is omitted (not
  // zeroed) when the dataset has no unseen classes.
  std::string to_json() const;
};

// Full protocol on one dataset split: encode the split's samples and
// the proxies of every class present, then compute the three APs.
EvalReport evaluate(TwoViewEncoder& encoder, const SyntheticDataset& dataset,
                    Split split = Split::test);

}  // namespace adams
