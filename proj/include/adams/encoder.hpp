#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adams/geometry.hpp"

namespace adams {

// Desk-scale dimensions; small enough that a full finite-difference
// sweep over every weight runs in well under a second.
struct EncoderConfig {
  int input_dim = 16;
  int hidden_dim = 32;
  int embed_dim = 24;
  int text_dim = 16;
  std::uint64_t init_seed = 1;

  void validate() const;  // throws ConfigError
};

// One embedding network: affine - tanh - affine - L2 normalize.
// Forward passes cache their intermediates in call order; backward
// consumes a cache entry by index and accumulates into the gradient
// buffers.
class ViewEncoder {
 public:
  ViewEncoder(int input_dim, int hidden_dim, int embed_dim,
              std::uint64_t init_seed);

  int input_dim() const { return input_dim_; }
  int embed_dim() const { return embed_dim_; }

  // Returns the unit-norm embedding. Throws std::domain_error when the
  // pre-normalization output has (near-)zero norm.
  Vector forward(const Vector& input);

  void clear_cache();
  std::size_t cache_size() const { return cache_.size(); }

  // Chain rule through normalization ((I - uu^T)/||v||), the affine
  // layers, and tanh. Accumulates parameter gradients and returns the
  // gradient w.r.t. the input. Throws std::logic_error when no forward
  // pass is cached at `index`.
  Vector backward(std::size_t index, const Vector& d_embedding);

  void zero_grads();

  struct TensorRef {
    std::string name;
    std::vector<double>* value;
    std::vector<double>* grad;
  };
  std::vector<TensorRef> tensors();

 private:
  struct Cache {
    Vector input;
    Vector hidden;    // tanh(W1 x + b1)
    Vector pre_norm;  // W2 hidden + b2
    Vector unit;      // pre_norm / ||pre_norm||
    double norm;
  };

  int input_dim_, hidden_dim_, embed_dim_;
  std::vector<double> w1_, b1_, w2_, b2_;      // w row-major (out x in)
  std::vector<double> gw1_, gb1_, gw2_, gb2_;
  std::vector<Cache> cache_;
};

// The acoustic view maps mean-pooled frame sequences to embeddings x;
// the text view maps per-class features to the proxies t. Independent
// parameters, shared embedding dimension.
class TwoViewEncoder {
 public:
  explicit TwoViewEncoder(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }

  // Mean-pools the frames, then runs the acoustic view. Throws
  // std::domain_error on an empty sequence.
  Vector encode_acoustic(const std::vector<Vector>& frames);
  Vector encode_text(const Vector& class_features);

  void clear_caches();
  std::size_t acoustic_cache_size() const;
  std::size_t text_cache_size() const;

  // Gradient w.r.t. the mean-pooled acoustic input (divide by the frame
  // count to get per-frame gradients) / the text features.
  Vector acoustic_backward(std::size_t index, const Vector& d_embedding);
  Vector text_backward(std::size_t index, const Vector& d_embedding);

  void zero_grads();
  std::vector<ViewEncoder::TensorRef> tensors();  // both views

  ViewEncoder& acoustic_view() { return acoustic_; }
  ViewEncoder& text_view() { return text_; }

  // Versioned JSON container with dims, seed, and flat weight arrays;
  // the round trip is bit-exact.
  void save_checkpoint(const std::string& path) const;
  static TwoViewEncoder load_checkpoint(const std::string& path);
  std::string checkpoint_json() const;
  static TwoViewEncoder from_checkpoint_json(const std::string& text);

 private:
  EncoderConfig config_;
  ViewEncoder acoustic_;
  ViewEncoder text_;
};

// Mean of a non-empty frame sequence; throws std::domain_error on empty.
Vector mean_pool(const std::vector<Vector>& frames);

}  // namespace adams
