#include "adams/encoder.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "adams/errors.hpp"
#include "adams/rng.hpp"

namespace adams {

void EncoderConfig::validate() const {
  if (input_dim <= 0 || hidden_dim <= 0 || embed_dim <= 0 || text_dim <= 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
}

namespace {

// uniform(-s, s) with s = 1/sqrt(fan_in)
void init_uniform(std::vector<double>& w, int fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& x : w) x = rng.uniform(-s, s);
}

}  // namespace

ViewEncoder::ViewEncoder(int input_dim, int hidden_dim, int embed_dim,
                         std::uint64_t init_seed)
    : input_dim_(input_dim), hidden_dim_(hidden_dim), embed_dim_(embed_dim) {
  const std::size_t n1 = static_cast<std::size_t>(hidden_dim) *
                         static_cast<std::size_t>(input_dim);
  const std::size_t n2 = static_cast<std::size_t>(embed_dim) *
                         static_cast<std::size_t>(hidden_dim);
  w1_.resize(n1);
  b1_.assign(static_cast<std::size_t>(hidden_dim), 0.0);
  w2_.resize(n2);
  b2_.assign(static_cast<std::size_t>(embed_dim), 0.0);
  Rng rng(init_seed);
  init_uniform(w1_, input_dim, rng);
  init_uniform(w2_, hidden_dim, rng);
  gw1_.assign(n1, 0.0);
  gb1_.assign(b1_.size(), 0.0);
  gw2_.assign(n2, 0.0);
  gb2_.assign(b2_.size(), 0.0);
}

Vector ViewEncoder::forward(const Vector& input) {
  if (static_cast<int>(input.size()) != input_dim_) {
    throw std::invalid_argument("encoder input dimension mismatch");
  }
  Cache c;
  c.input = input;
  c.hidden.resize(static_cast<std::size_t>(hidden_dim_));
  for (int h = 0; h < hidden_dim_; ++h) {
    double s = b1_[static_cast<std::size_t>(h)];
    const double* row = &w1_[static_cast<std::size_t>(h) *
                             static_cast<std::size_t>(input_dim_)];
    for (int i = 0; i < input_dim_; ++i) s += row[i] * input[i];
    c.hidden[static_cast<std::size_t>(h)] = std::tanh(s);
  }
  c.pre_norm.resize(static_cast<std::size_t>(embed_dim_));
  for (int e = 0; e < embed_dim_; ++e) {
    double s = b2_[static_cast<std::size_t>(e)];
    const double* row = &w2_[static_cast<std::size_t>(e) *
                             static_cast<std::size_t>(hidden_dim_)];
    for (int h = 0; h < hidden_dim_; ++h) s += row[h] * c.hidden[h];
    c.pre_norm[static_cast<std::size_t>(e)] = s;
  }
  c.norm = norm(c.pre_norm);
  if (!(c.norm >= kZeroNormEps)) {  // also rejects NaN
    throw std::domain_error("encoder output has zero norm");
  }
  c.unit.resize(c.pre_norm.size());
  for (std::size_t e = 0; e < c.pre_norm.size(); ++e) {
    c.unit[e] = c.pre_norm[e] / c.norm;
  }
  Vector out = c.unit;
  cache_.push_back(std::move(c));
  return out;
}

void ViewEncoder::clear_cache() { cache_.clear(); }

Vector ViewEncoder::backward(std::size_t index, const Vector& d_embedding) {
  if (index >= cache_.size()) {
    throw std::logic_error("encoder backward without a cached forward pass");
  }
  const Cache& c = cache_[index];
  if (d_embedding.size() != c.unit.size()) {
    throw std::invalid_argument("upstream gradient dimension mismatch");
  }
  // d/dv of v/||v|| applied to g: (g - (u.g) u) / ||v||
  const double ug = dot(c.unit, d_embedding);
  Vector d_pre(c.pre_norm.size());
  for (std::size_t e = 0; e < d_pre.size(); ++e) {
    d_pre[e] = (d_embedding[e] - ug * c.unit[e]) / c.norm;
  }
  Vector d_hidden(static_cast<std::size_t>(hidden_dim_), 0.0);
  for (int e = 0; e < embed_dim_; ++e) {
    const std::size_t row = static_cast<std::size_t>(e) *
                            static_cast<std::size_t>(hidden_dim_);
    gb2_[static_cast<std::size_t>(e)] += d_pre[static_cast<std::size_t>(e)];
    for (int h = 0; h < hidden_dim_; ++h) {
      gw2_[row + static_cast<std::size_t>(h)] +=
          d_pre[static_cast<std::size_t>(e)] * c.hidden[static_cast<std::size_t>(h)];
      d_hidden[static_cast<std::size_t>(h)] +=
          w2_[row + static_cast<std::size_t>(h)] * d_pre[static_cast<std::size_t>(e)];
    }
  }
  Vector d_input(static_cast<std::size_t>(input_dim_), 0.0);
  for (int h = 0; h < hidden_dim_; ++h) {
    const std::size_t hh = static_cast<std::size_t>(h);
    const double t = c.hidden[hh];
    const double d_act = d_hidden[hh] * (1.0 - t * t);
    gb1_[hh] += d_act;
    const std::size_t row = hh * static_cast<std::size_t>(input_dim_);
    for (int i = 0; i < input_dim_; ++i) {
      gw1_[row + static_cast<std::size_t>(i)] +=
          d_act * c.input[static_cast<std::size_t>(i)];
      d_input[static_cast<std::size_t>(i)] +=
          w1_[row + static_cast<std::size_t>(i)] * d_act;
    }
  }
  return d_input;
}

void ViewEncoder::zero_grads() {
  gw1_.assign(gw1_.size(), 0.0);
  gb1_.assign(gb1_.size(), 0.0);
  gw2_.assign(gw2_.size(), 0.0);
  gb2_.assign(gb2_.size(), 0.0);
}

std::vector<ViewEncoder::TensorRef> ViewEncoder::tensors() {
  return {
      {"w1", &w1_, &gw1_},
      {"b1", &b1_, &gb1_},
      {"w2", &w2_, &gw2_},
      {"b2", &b2_, &gb2_},
  };
}

Vector mean_pool(const std::vector<Vector>& frames) {
  if (frames.empty()) {
    throw std::domain_error("cannot pool an empty frame sequence");
  }
  Vector pooled(frames.front().size(), 0.0);
  for (const auto& f : frames) {
    if (f.size() != pooled.size()) {
      throw std::invalid_argument("ragged frame dimensions");
    }
    for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += f[i];
  }
  const double inv = 1.0 / static_cast<double>(frames.size());
  for (auto& x : pooled) x *= inv;
  return pooled;
}

TwoViewEncoder::TwoViewEncoder(const EncoderConfig& config)
    : config_(config),
      acoustic_(config.input_dim, config.hidden_dim, config.embed_dim,
                config.init_seed),
      text_(config.text_dim, config.hidden_dim, config.embed_dim,
            config.init_seed + 0x9e3779b97f4a7c15ULL) {
  config_.validate();
}

Vector TwoViewEncoder::encode_acoustic(const std::vector<Vector>& frames) {
  return acoustic_.forward(mean_pool(frames));
}

Vector TwoViewEncoder::encode_text(const Vector& class_features) {
  return text_.forward(class_features);
}

void TwoViewEncoder::clear_caches() {
  acoustic_.clear_cache();
  text_.clear_cache();
}

std::size_t TwoViewEncoder::acoustic_cache_size() const {
  return acoustic_.cache_size();
}
std::size_t TwoViewEncoder::text_cache_size() const {
  return text_.cache_size();
}

Vector TwoViewEncoder::acoustic_backward(std::size_t index,
                                         const Vector& d_embedding) {
  return acoustic_.backward(index, d_embedding);
}

Vector TwoViewEncoder::text_backward(std::size_t index,
                                     const Vector& d_embedding) {
  return text_.backward(index, d_embedding);
}

void TwoViewEncoder::zero_grads() {
  acoustic_.zero_grads();
  text_.zero_grads();
}

std::vector<ViewEncoder::TensorRef> TwoViewEncoder::tensors() {
  std::vector<ViewEncoder::TensorRef> all;
  for (auto& t : acoustic_.tensors()) {
    all.push_back({"acoustic." + t.name, t.value, t.grad});
  }
  for (auto& t : text_.tensors()) {
    all.push_back({"text." + t.name, t.value, t.grad});
  }
  return all;
}

namespace {

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "adams-checkpoint";

nlohmann::json view_to_json(ViewEncoder& view) {
  nlohmann::json j;
  for (const auto& t : view.tensors()) {
    j[t.name] = *t.value;
  }
  return j;
}

void view_from_json(const nlohmann::json& j, ViewEncoder& view) {
  for (auto& t : view.tensors()) {
    if (!j.contains(t.name)) {
      throw FormatError("checkpoint missing tensor " + t.name);
    }
    const auto arr = j.at(t.name).get<std::vector<double>>();
    if (arr.size() != t.value->size()) {
      throw FormatError("checkpoint tensor " + t.name + " has wrong size");
    }
    for (double v : arr) {
      if (!std::isfinite(v)) {
        throw FormatError("checkpoint tensor " + t.name +
                          " has non-finite entries");
      }
    }
    *t.value = arr;
  }
}

}  // namespace

std::string TwoViewEncoder::checkpoint_json() const {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = {
      {"input_dim", config_.input_dim},   {"hidden_dim", config_.hidden_dim},
      {"embed_dim", config_.embed_dim},   {"text_dim", config_.text_dim},
      {"init_seed", config_.init_seed},
  };
  auto* self = const_cast<TwoViewEncoder*>(this);
  j["acoustic"] = view_to_json(self->acoustic_);
  j["text"] = view_to_json(self->text_);
  return j.dump(2) + "\n";
}

TwoViewEncoder TwoViewEncoder::from_checkpoint_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") +
                      e.what());
  }
  if (!j.contains("format") || j.at("format") != kCheckpointFormat) {
    throw FormatError("not an encoder checkpoint");
  }
  const int version = j.value("version", -1);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  const auto& jc = j.at("config");
  EncoderConfig config;
  config.input_dim = jc.at("input_dim").get<int>();
  config.hidden_dim = jc.at("hidden_dim").get<int>();
  config.embed_dim = jc.at("embed_dim").get<int>();
  config.text_dim = jc.at("text_dim").get<int>();
  config.init_seed = jc.at("init_seed").get<std::uint64_t>();
  TwoViewEncoder enc(config);
  view_from_json(j.at("acoustic"), enc.acoustic_);
  view_from_json(j.at("text"), enc.text_);
  return enc;
}

void TwoViewEncoder::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open checkpoint for writing: " + path);
  }
  out << checkpoint_json();
  if (!out) {
    throw IoError("failed to write checkpoint: " + path);
  }
}

TwoViewEncoder TwoViewEncoder::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint: " + path);
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_checkpoint_json(text);
}

}  // namespace adams
