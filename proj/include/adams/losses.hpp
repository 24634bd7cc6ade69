#pragma once

#include <string>
#include <vector>

#include "adams/adaptive_params.hpp"

namespace adams {

enum class LossKind { adams, asyp_fixed, proxy_ms, proxy_bd };

LossKind loss_kind_from_string(const std::string& s);  // throws ConfigError
std::string to_string(LossKind kind);

// Similarities of one training batch, already split per anchor.
// positives[i] holds S(t_i, x_j) for every j with c_j == c_i (the
// anchor's own index included), negatives[i] holds S(x_i, t_k) for
// every k with c_k != c_i. Proxies act as anchors on the positive side
// and as negatives on the negative side.
struct SimilarityBatch {
  struct Pair {
    int index;   // batch sample index j or k
    double sim;  // cosine similarity in [-1, 1]
  };

  std::vector<std::vector<Pair>> positives;
  std::vector<std::vector<Pair>> negatives;
  std::vector<int> class_of;

  int size() const { return static_cast<int>(class_of.size()); }
  void validate() const;  // shape / range checks, throws
};

// Gradients of the batch loss. d_s_* mirror the SimilarityBatch shape;
// the per-class entries are w.r.t. the CONSTRAINED margin/scale values
// (the tanh chain factor is applied separately). All entries include
// the 1/N batch factor.
struct LossGradients {
  std::vector<std::vector<double>> d_s_pos;
  std::vector<std::vector<double>> d_s_neg;
  std::vector<double> d_lambda_p;
  std::vector<double> d_lambda_n;
  std::vector<double> d_alpha;
  std::vector<double> d_beta;

  static LossGradients zeros_like(const SimilarityBatch& batch,
                                  int num_classes);
};

// Anchor-positive term:
//   (1 / sg[alpha]) log(1 + sum_{j in P_i} e^{alpha (lambda_p - S_ij)})
//     - omega lambda_p
// The prefactor is a frozen constant for all differentiation purposes;
// `alpha_prefactor` exists so a finite-difference probe can vary the
// exponent alpha while honoring the stop-gradient. Empty P_i is legal
// and contributes only the regularizer.
double adams_positive_term(const SimilarityBatch& batch, int anchor,
                           double lambda_p, double alpha,
                           double alpha_prefactor, double omega);
double adams_positive_term(const SimilarityBatch& batch, int anchor,
                           double lambda_p, double alpha, double omega);

// Anchor-negative term:
//   (1/|N_i|) sum_{k in N_i} log(1 + e^{beta (S_ik - lambda_n)})
//     + omega lambda_n
// Empty N_i is a domain error (the 1/|N_i| is undefined).
double adams_negative_term(const SimilarityBatch& batch, int anchor,
                           double lambda_n, double beta, double omega);

struct BatchLossParts {
  double total = 0.0;
  double positive = 0.0;  // (1/N) sum_i L^P_i
  double negative = 0.0;  // (1/N) sum_i L^N_i
};

// (1/N) sum_i (L^P_i + L^N_i) with each anchor's class-specific
// constrained parameters. When `frozen_alpha_prefactor` is non-null it
// supplies the per-class 1/alpha prefactor (stop-gradient probe);
// otherwise the prefactor is the constrained alpha itself.
BatchLossParts batch_loss_parts(
    const SimilarityBatch& batch, const AdaptiveParamTable& table,
    const std::vector<double>* frozen_alpha_prefactor = nullptr);
double batch_loss(const SimilarityBatch& batch,
                  const AdaptiveParamTable& table);

// d L / d S. Positive side is softmax-like (relative hardness):
//   d/dS_ij = -h_ij / (1 + sum_j' h_ij'),
// negative side is sigmoidal (self hardness):
//   d/dS_ik = (beta_i / |N_i|) h_ik / (1 + h_ik),
// both times 1/N.
void grad_similarity(const SimilarityBatch& batch,
                     const AdaptiveParamTable& table, LossGradients& out);

// d L / d lambda: per anchor,
//   d/dlambda_p = sum h^P / (1 + sum h^P) - omega
//   d/dlambda_n = -(beta_i/|N_i|) sum h^N/(1+h^N) + omega
// accumulated over anchors sharing the class, times 1/N.
void grad_margins(const SimilarityBatch& batch,
                  const AdaptiveParamTable& table, LossGradients& out);

// d L / d scale: per anchor,
//   d/dalpha = (1/alpha) [sum (lambda_p - S) h^P] / (1 + sum h^P)
//   d/dbeta  = (1/|N_i|) sum (S - lambda_n) h^N / (1 + h^N)
// accumulated per class, times 1/N. The stop-gradient on the 1/alpha
// prefactor means there is no -(1/alpha^2) log(...) term.
void grad_scales(const SimilarityBatch& batch,
                 const AdaptiveParamTable& table, LossGradients& out);

// Convenience: all of the above in one pass.
LossGradients adams_gradients(const SimilarityBatch& batch,
                              const AdaptiveParamTable& table);

// Fixed-hyper-parameter baselines. asyp_fixed pairs the MS positive
// term with the BD negative term; proxy_ms and proxy_bd use the same
// family for both sides. Gradients fill only d_s_pos / d_s_neg.
struct BaselineResult {
  BatchLossParts loss;
  LossGradients grads;
};
BaselineResult baseline_loss(LossKind kind, const SimilarityBatch& batch,
                             double lambda, double alpha, double beta);

}  // namespace adams
