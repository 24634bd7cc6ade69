#include "adams/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "adams/errors.hpp"
#include "adams/mathutil.hpp"

namespace adams {

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "adams") return LossKind::adams;
  if (s == "asyp") return LossKind::asyp_fixed;
  if (s == "proxy-ms") return LossKind::proxy_ms;
  if (s == "proxy-bd") return LossKind::proxy_bd;
  throw ConfigError("unknown loss kind: " + s);
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::adams: return "adams";
    case LossKind::asyp_fixed: return "asyp";
    case LossKind::proxy_ms: return "proxy-ms";
    case LossKind::proxy_bd: return "proxy-bd";
  }
  return "?";
}

void SimilarityBatch::validate() const {
  const std::size_t n = class_of.size();
  if (n == 0) {
    throw std::invalid_argument("empty similarity batch");
  }
  if (positives.size() != n || negatives.size() != n) {
    throw std::invalid_argument("similarity batch shape mismatch");
  }
  for (const auto& side : {&positives, &negatives}) {
    for (const auto& anchor : *side) {
      for (const auto& p : anchor) {
        if (p.index < 0 || p.index >= static_cast<int>(n)) {
          throw std::invalid_argument("similarity pair index out of range");
        }
        if (!(p.sim >= -1.0 && p.sim <= 1.0)) {
          throw std::invalid_argument("similarity outside [-1, 1]");
        }
      }
    }
  }
}

LossGradients LossGradients::zeros_like(const SimilarityBatch& batch,
                                        int num_classes) {
  LossGradients g;
  g.d_s_pos.resize(batch.positives.size());
  g.d_s_neg.resize(batch.negatives.size());
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    g.d_s_pos[i].assign(batch.positives[i].size(), 0.0);
  }
  for (std::size_t i = 0; i < batch.negatives.size(); ++i) {
    g.d_s_neg[i].assign(batch.negatives[i].size(), 0.0);
  }
  g.d_lambda_p.assign(static_cast<std::size_t>(num_classes), 0.0);
  g.d_lambda_n.assign(static_cast<std::size_t>(num_classes), 0.0);
  g.d_alpha.assign(static_cast<std::size_t>(num_classes), 0.0);
  g.d_beta.assign(static_cast<std::size_t>(num_classes), 0.0);
  return g;
}

namespace {

// Shift-stabilized pieces of log(1 + sum_j e^{z_j}) with
// z_j = alpha (lambda - S_j). softmax[j] = h_j / (1 + sum h), the
// weighted deviation is sum_j (lambda - S_j) h_j / (1 + sum h).
struct PositiveStats {
  double lse = 0.0;
  double softmax_sum = 0.0;
  double weighted_dev = 0.0;
  std::vector<double> softmax;
};

PositiveStats positive_stats(const std::vector<SimilarityBatch::Pair>& pos,
                             double lambda, double alpha) {
  PositiveStats st;
  st.softmax.resize(pos.size());
  double m = 0.0;  // the implicit "1 +" term has exponent 0
  for (const auto& p : pos) {
    m = std::max(m, alpha * (lambda - p.sim));
  }
  double denom = std::exp(-m);
  std::vector<double> e(pos.size());
  for (std::size_t j = 0; j < pos.size(); ++j) {
    e[j] = std::exp(alpha * (lambda - pos[j].sim) - m);
    denom += e[j];
  }
  st.lse = m + std::log(denom);
  for (std::size_t j = 0; j < pos.size(); ++j) {
    st.softmax[j] = e[j] / denom;
    st.softmax_sum += st.softmax[j];
    st.weighted_dev += (lambda - pos[j].sim) * st.softmax[j];
  }
  return st;
}

// Per-pair softplus/sigmoid pieces of the negative side with
// w_k = beta (S_k - lambda).
struct NegativeStats {
  double softplus_sum = 0.0;
  double sigmoid_sum = 0.0;
  double weighted_dev = 0.0;  // sum_k (S_k - lambda) h_k/(1+h_k)
  std::vector<double> sigmoid;
};

NegativeStats negative_stats(const std::vector<SimilarityBatch::Pair>& neg,
                             double lambda, double beta) {
  NegativeStats st;
  st.sigmoid.resize(neg.size());
  for (std::size_t k = 0; k < neg.size(); ++k) {
    const double w = beta * (neg[k].sim - lambda);
    st.softplus_sum += softplus(w);
    st.sigmoid[k] = sigmoid(w);
    st.sigmoid_sum += st.sigmoid[k];
    st.weighted_dev += (neg[k].sim - lambda) * st.sigmoid[k];
  }
  return st;
}

void require_nonempty_negatives(const SimilarityBatch& batch, int anchor) {
  if (batch.negatives[static_cast<std::size_t>(anchor)].empty()) {
    throw std::domain_error("anchor " + std::to_string(anchor) +
                            " has no negatives; 1/|N_i| is undefined");
  }
}

}  // namespace

double adams_positive_term(const SimilarityBatch& batch, int anchor,
                           double lambda_p, double alpha,
                           double alpha_prefactor, double omega) {
  const auto& pos = batch.positives[static_cast<std::size_t>(anchor)];
  const PositiveStats st = positive_stats(pos, lambda_p, alpha);
  return st.lse / alpha_prefactor - omega * lambda_p;
}

double adams_positive_term(const SimilarityBatch& batch, int anchor,
                           double lambda_p, double alpha, double omega) {
  return adams_positive_term(batch, anchor, lambda_p, alpha, alpha, omega);
}

double adams_negative_term(const SimilarityBatch& batch, int anchor,
                           double lambda_n, double beta, double omega) {
  require_nonempty_negatives(batch, anchor);
  const auto& neg = batch.negatives[static_cast<std::size_t>(anchor)];
  const NegativeStats st = negative_stats(neg, lambda_n, beta);
  return st.softplus_sum / static_cast<double>(neg.size()) + omega * lambda_n;
}

BatchLossParts batch_loss_parts(
    const SimilarityBatch& batch, const AdaptiveParamTable& table,
    const std::vector<double>* frozen_alpha_prefactor) {
  batch.validate();
  const double omega = table.config().omega;
  BatchLossParts parts;
  for (int i = 0; i < batch.size(); ++i) {
    const int c = batch.class_of[static_cast<std::size_t>(i)];
    const ConstrainedParams p = table.constrain(c);
    const double prefactor =
        frozen_alpha_prefactor
            ? (*frozen_alpha_prefactor)[static_cast<std::size_t>(c)]
            : p.alpha;
    parts.positive +=
        adams_positive_term(batch, i, p.lambda_p, p.alpha, prefactor, omega);
    parts.negative += adams_negative_term(batch, i, p.lambda_n, p.beta, omega);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  parts.positive *= inv_n;
  parts.negative *= inv_n;
  parts.total = parts.positive + parts.negative;
  return parts;
}

double batch_loss(const SimilarityBatch& batch,
                  const AdaptiveParamTable& table) {
  return batch_loss_parts(batch, table).total;
}

void grad_similarity(const SimilarityBatch& batch,
                     const AdaptiveParamTable& table, LossGradients& out) {
  batch.validate();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    const ConstrainedParams p =
        table.constrain(batch.class_of[ii]);
    const auto& pos = batch.positives[ii];
    const PositiveStats ps = positive_stats(pos, p.lambda_p, p.alpha);
    for (std::size_t j = 0; j < pos.size(); ++j) {
      out.d_s_pos[ii][j] = -ps.softmax[j] * inv_n;
    }
    require_nonempty_negatives(batch, i);
    const auto& neg = batch.negatives[ii];
    const NegativeStats ns = negative_stats(neg, p.lambda_n, p.beta);
    const double scale = p.beta / static_cast<double>(neg.size());
    for (std::size_t k = 0; k < neg.size(); ++k) {
      out.d_s_neg[ii][k] = scale * ns.sigmoid[k] * inv_n;
    }
  }
}

void grad_margins(const SimilarityBatch& batch,
                  const AdaptiveParamTable& table, LossGradients& out) {
  batch.validate();
  const double omega = table.config().omega;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    const int c = batch.class_of[ii];
    const std::size_t cc = static_cast<std::size_t>(c);
    const ConstrainedParams p = table.constrain(c);
    const PositiveStats ps =
        positive_stats(batch.positives[ii], p.lambda_p, p.alpha);
    out.d_lambda_p[cc] += (ps.softmax_sum - omega) * inv_n;
    require_nonempty_negatives(batch, i);
    const auto& neg = batch.negatives[ii];
    const NegativeStats ns = negative_stats(neg, p.lambda_n, p.beta);
    out.d_lambda_n[cc] +=
        (-(p.beta / static_cast<double>(neg.size())) * ns.sigmoid_sum +
         omega) *
        inv_n;
  }
}

void grad_scales(const SimilarityBatch& batch,
                 const AdaptiveParamTable& table, LossGradients& out) {
  batch.validate();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    const int c = batch.class_of[ii];
    const std::size_t cc = static_cast<std::size_t>(c);
    const ConstrainedParams p = table.constrain(c);
    const PositiveStats ps =
        positive_stats(batch.positives[ii], p.lambda_p, p.alpha);
    out.d_alpha[cc] += (ps.weighted_dev / p.alpha) * inv_n;
    require_nonempty_negatives(batch, i);
    const auto& neg = batch.negatives[ii];
    const NegativeStats ns = negative_stats(neg, p.lambda_n, p.beta);
    out.d_beta[cc] +=
        (ns.weighted_dev / static_cast<double>(neg.size())) * inv_n;
  }
}

LossGradients adams_gradients(const SimilarityBatch& batch,
                              const AdaptiveParamTable& table) {
  LossGradients g = LossGradients::zeros_like(batch, table.num_classes());
  grad_similarity(batch, table, g);
  grad_margins(batch, table, g);
  grad_scales(batch, table, g);
  return g;
}

namespace {

// MS positive term (1/alpha) log(1 + sum e^{alpha(lambda - S)}) and its
// gradient; shared by asyp_fixed and proxy_ms.
void ms_positive(const std::vector<SimilarityBatch::Pair>& pos, double lambda,
                 double alpha, double inv_n, double& loss,
                 std::vector<double>& d_s) {
  const PositiveStats st = positive_stats(pos, lambda, alpha);
  loss += st.lse / alpha;
  for (std::size_t j = 0; j < pos.size(); ++j) {
    d_s[j] = -st.softmax[j] * inv_n;
  }
}

// BD negative term (1/|N|) sum log(1 + e^{beta(S - lambda)}) and its
// gradient; shared by asyp_fixed and proxy_bd.
void bd_negative(const std::vector<SimilarityBatch::Pair>& neg, double lambda,
                 double beta, double inv_n, double& loss,
                 std::vector<double>& d_s) {
  const NegativeStats st = negative_stats(neg, lambda, beta);
  loss += st.softplus_sum / static_cast<double>(neg.size());
  const double scale = beta / static_cast<double>(neg.size());
  for (std::size_t k = 0; k < neg.size(); ++k) {
    d_s[k] = scale * st.sigmoid[k] * inv_n;
  }
}

// BD positive term (1/|P|) sum log(1 + e^{-alpha(S - lambda)}); an empty
// positive set contributes nothing.
void bd_positive(const std::vector<SimilarityBatch::Pair>& pos, double lambda,
                 double alpha, double inv_n, double& loss,
                 std::vector<double>& d_s) {
  if (pos.empty()) return;
  const double inv_count = 1.0 / static_cast<double>(pos.size());
  for (std::size_t j = 0; j < pos.size(); ++j) {
    const double z = alpha * (lambda - pos[j].sim);
    loss += softplus(z) * inv_count;
    d_s[j] = -alpha * inv_count * sigmoid(z) * inv_n;
  }
}

// MS negative term (1/beta) log(1 + sum e^{beta(S - lambda)}).
void ms_negative(const std::vector<SimilarityBatch::Pair>& neg, double lambda,
                 double beta, double inv_n, double& loss,
                 std::vector<double>& d_s) {
  std::vector<double> z(neg.size());
  for (std::size_t k = 0; k < neg.size(); ++k) {
    z[k] = beta * (neg[k].sim - lambda);
  }
  double m = 0.0;
  for (double zk : z) m = std::max(m, zk);
  double denom = std::exp(-m);
  std::vector<double> e(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    e[k] = std::exp(z[k] - m);
    denom += e[k];
  }
  loss += (m + std::log(denom)) / beta;
  for (std::size_t k = 0; k < z.size(); ++k) {
    d_s[k] = (e[k] / denom) * inv_n;
  }
}

}  // namespace

BaselineResult baseline_loss(LossKind kind, const SimilarityBatch& batch,
                             double lambda, double alpha, double beta) {
  batch.validate();
  if (kind == LossKind::adams) {
    throw std::invalid_argument(
        "baseline_loss handles fixed-parameter losses only");
  }
  if (alpha <= 0.0 || beta <= 0.0) {
    throw std::domain_error("scales alpha and beta must be positive");
  }
  BaselineResult r;
  r.grads = LossGradients::zeros_like(batch, 1);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (int i = 0; i < batch.size(); ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    const auto& pos = batch.positives[ii];
    const auto& neg = batch.negatives[ii];
    if (kind == LossKind::proxy_bd) {
      bd_positive(pos, lambda, alpha, inv_n, r.loss.positive,
                  r.grads.d_s_pos[ii]);
    } else {
      ms_positive(pos, lambda, alpha, inv_n, r.loss.positive,
                  r.grads.d_s_pos[ii]);
    }
    if (kind == LossKind::proxy_ms) {
      ms_negative(neg, lambda, beta, inv_n, r.loss.negative,
                  r.grads.d_s_neg[ii]);
    } else {
      require_nonempty_negatives(batch, i);
      bd_negative(neg, lambda, beta, inv_n, r.loss.negative,
                  r.grads.d_s_neg[ii]);
    }
  }
  r.loss.positive *= inv_n;
  r.loss.negative *= inv_n;
  r.loss.total = r.loss.positive + r.loss.negative;
  return r;
}

}  // namespace adams
