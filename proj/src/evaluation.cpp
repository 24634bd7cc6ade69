#include "adams/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace adams {

ApResult average_precision(const std::vector<ScoredPair>& pairs) {
  ApResult r;
  r.num_pairs = pairs.size();
  for (const auto& p : pairs) r.num_relevant += p.relevant ? 1 : 0;
  if (r.num_relevant == 0) {
    throw std::domain_error("average precision needs at least one relevant pair");
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&pairs](std::size_t a, std::size_t b) {
                     return pairs[a].sim > pairs[b].sim;
                   });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (pairs[order[rank]].relevant) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  r.ap = sum / static_cast<double>(r.num_relevant);
  return r;
}

ApResult acoustic_ap(const std::vector<LabeledEmbedding>& items) {
  if (items.size() < 2) {
    throw std::domain_error("acoustic AP needs at least two items");
  }
  std::vector<ScoredPair> pairs;
  pairs.reserve(items.size() * (items.size() - 1) / 2);
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      pairs.push_back({cosine_similarity(items[i].embedding, items[j].embedding),
                       items[i].class_id == items[j].class_id});
    }
  }
  return average_precision(pairs);
}

ApResult crossview_ap(const std::vector<LabeledEmbedding>& items,
                      const std::vector<ClassProxy>& proxies) {
  for (const auto& item : items) {
    const bool found = std::any_of(
        proxies.begin(), proxies.end(),
        [&item](const ClassProxy& p) { return p.class_id == item.class_id; });
    if (!found) {
      throw std::invalid_argument("missing proxy for class " +
                                  std::to_string(item.class_id));
    }
  }
  std::vector<ScoredPair> pairs;
  pairs.reserve(items.size() * proxies.size());
  for (const auto& item : items) {
    for (const auto& proxy : proxies) {
      pairs.push_back({cosine_similarity(item.embedding, proxy.embedding),
                       item.class_id == proxy.class_id});
    }
  }
  return average_precision(pairs);
}

ApResult unseen_query_ap(const std::vector<LabeledEmbedding>& items) {
  const bool any_unseen =
      std::any_of(items.begin(), items.end(),
                  [](const LabeledEmbedding& e) { return e.unseen; });
  if (!any_unseen) {
    throw std::domain_error("unseen-query AP needs at least one unseen sample");
  }
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      if (!items[i].unseen && !items[j].unseen) continue;
      pairs.push_back({cosine_similarity(items[i].embedding, items[j].embedding),
                       items[i].class_id == items[j].class_id});
    }
  }
  return average_precision(pairs);
}

namespace {

nlohmann::json ap_to_json(const ApResult& r) {
  return {
      {"ap", r.ap},
      {"percent", 100.0 * r.ap},
      {"num_pairs", r.num_pairs},
      {"num_relevant", r.num_relevant},
  };
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["acoustic"] = ap_to_json(acoustic);
  j["crossview"] = ap_to_json(crossview);
  if (unseen.has_value()) {
    j["unseen"] = ap_to_json(*unseen);
  }
  return j.dump(2) + "\n";
}

EvalReport evaluate(TwoViewEncoder& encoder, const SyntheticDataset& dataset,
                    Split split) {
  const auto samples = dataset.samples_in_split(split);
  encoder.clear_caches();

  std::vector<LabeledEmbedding> items;
  items.reserve(samples.size());
  std::vector<bool> class_present(dataset.classes.size(), false);
  for (const Sample* s : samples) {
    const auto& cls = dataset.classes[static_cast<std::size_t>(s->class_id)];
    items.push_back({encoder.encode_acoustic(s->frames), s->class_id,
                     cls.unseen});
    class_present[static_cast<std::size_t>(s->class_id)] = true;
  }

  std::vector<ClassProxy> proxies;
  for (const auto& cls : dataset.classes) {
    if (!class_present[static_cast<std::size_t>(cls.id)]) continue;
    proxies.push_back({cls.id, encoder.encode_text(cls.text_features)});
  }
  encoder.clear_caches();

  EvalReport report;
  report.acoustic = acoustic_ap(items);
  report.crossview = crossview_ap(items, proxies);
  const bool any_unseen = std::any_of(
      items.begin(), items.end(),
      [](const LabeledEmbedding& e) { return e.unseen; });
  if (any_unseen) {
    report.unseen = unseen_query_ap(items);
  }
  return report;
}

}  // namespace adams
