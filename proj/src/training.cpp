#include "adams/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "adams/errors.hpp"
#include "adams/geometry.hpp"

namespace adams {

void TrainConfig::validate() const {
  if (classes_per_batch < 2) {
    throw ConfigError("classes_per_batch must be >= 2 (anchors need negatives)");
  }
  if (samples_per_class < 2) {
    throw ConfigError("samples_per_class must be >= 2 (anchors need positives)");
  }
  if (epochs < 1) {
    throw ConfigError("epochs must be >= 1");
  }
  if (!(lr_encoder > 0.0)) {
    throw ConfigError("lr_encoder must be positive");
  }
  if (!(lr_adaptive >= 0.0)) {
    throw ConfigError("lr_adaptive must be non-negative");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0 && adam_eps > 0.0)) {
    throw ConfigError("bad Adam settings");
  }
  constraints.validate();
  encoder.validate();
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: state size mismatch");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

Batch sample_batch(const SyntheticDataset& dataset, const TrainConfig& config,
                   Rng& rng) {
  const int C = config.classes_per_batch;
  const int M = config.samples_per_class;

  // Train-split samples grouped by class, in id order.
  std::vector<std::vector<const Sample*>> by_class(dataset.classes.size());
  for (const auto& s : dataset.samples) {
    if (s.split == Split::train) {
      by_class[static_cast<std::size_t>(s.class_id)].push_back(&s);
    }
  }
  std::vector<int> eligible;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (static_cast<int>(by_class[c].size()) >= M) {
      eligible.push_back(static_cast<int>(c));
    }
  }
  if (static_cast<int>(eligible.size()) < C) {
    throw ConfigError("not enough classes with >= " + std::to_string(M) +
                      " train samples (" + std::to_string(eligible.size()) +
                      " available, " + std::to_string(C) + " required)");
  }
  rng.shuffle(eligible);

  Batch batch;
  batch.batch_classes.assign(eligible.begin(), eligible.begin() + C);
  for (int c : batch.batch_classes) {
    batch.text_features.push_back(
        &dataset.classes[static_cast<std::size_t>(c)].text_features);
    auto pool = by_class[static_cast<std::size_t>(c)];
    rng.shuffle(pool);
    for (int s = 0; s < M; ++s) {
      batch.samples.push_back(pool[static_cast<std::size_t>(s)]);
      batch.class_of.push_back(c);
    }
  }
  return batch;
}

namespace {

struct EncodedBatch {
  std::vector<Vector> proxies;     // aligned with batch.batch_classes
  std::vector<Vector> embeddings;  // aligned with batch.samples
  std::vector<int> proxy_slot;     // class id -> index into proxies
  SimilarityBatch sims;
};

// Encode proxies (one per batch class, text cache slot = position) and
// sample embeddings (acoustic cache slot = position), then assemble the
// per-anchor similarity lists. Proxies act as anchors on the positive
// side, S(t_i, x_j), and as negatives on the negative side, S(x_i, t_k).
EncodedBatch encode_and_score(TwoViewEncoder& encoder, const Batch& batch,
                              int num_classes) {
  if (batch.text_features.size() != batch.batch_classes.size()) {
    throw std::invalid_argument("batch text features misaligned");
  }
  EncodedBatch eb;
  encoder.clear_caches();
  eb.proxy_slot.assign(static_cast<std::size_t>(num_classes), -1);
  eb.proxies.reserve(batch.batch_classes.size());
  for (std::size_t p = 0; p < batch.batch_classes.size(); ++p) {
    const int c = batch.batch_classes[p];
    eb.proxy_slot[static_cast<std::size_t>(c)] = static_cast<int>(p);
    eb.proxies.push_back(encoder.encode_text(*batch.text_features[p]));
  }
  eb.embeddings.reserve(batch.samples.size());
  for (const Sample* s : batch.samples) {
    eb.embeddings.push_back(encoder.encode_acoustic(s->frames));
  }

  const int n = static_cast<int>(batch.samples.size());
  eb.sims.class_of = batch.class_of;
  eb.sims.positives.resize(static_cast<std::size_t>(n));
  eb.sims.negatives.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    const int ci = batch.class_of[ii];
    const Vector& anchor_proxy = eb.proxies[static_cast<std::size_t>(
        eb.proxy_slot[static_cast<std::size_t>(ci)])];
    for (int j = 0; j < n; ++j) {
      const std::size_t jj = static_cast<std::size_t>(j);
      if (batch.class_of[jj] == ci) {
        eb.sims.positives[ii].push_back(
            {j, cosine_similarity(anchor_proxy, eb.embeddings[jj])});
      } else {
        const Vector& neg_proxy = eb.proxies[static_cast<std::size_t>(
            eb.proxy_slot[static_cast<std::size_t>(batch.class_of[jj])])];
        eb.sims.negatives[ii].push_back(
            {j, cosine_similarity(eb.embeddings[ii], neg_proxy)});
      }
    }
  }
  return eb;
}

}  // namespace

StepResult compute_step(TwoViewEncoder& encoder, AdaptiveParamTable& table,
                        const TrainConfig& config, const Batch& batch,
                        bool want_input_grads) {
  EncodedBatch eb = encode_and_score(encoder, batch, table.num_classes());
  const int n = static_cast<int>(batch.samples.size());

  StepResult result;
  LossGradients loss_grads;
  if (config.loss == LossKind::adams) {
    result.loss = batch_loss_parts(eb.sims, table);
    loss_grads = adams_gradients(eb.sims, table);
  } else {
    BaselineResult base =
        baseline_loss(config.loss, eb.sims, config.constraints.lambda0,
                      config.constraints.alpha0, config.constraints.beta0);
    result.loss = base.loss;
    loss_grads = std::move(base.grads);
  }

  // Chain dL/dS into embedding and proxy gradients. A proxy picks up
  // contributions from every anchor of its class (positive side) and
  // from every anchor of other classes (negative side).
  const std::size_t embed_dim = static_cast<std::size_t>(encoder.config().embed_dim);
  std::vector<Vector> d_embed(static_cast<std::size_t>(n),
                              Vector(embed_dim, 0.0));
  std::vector<Vector> d_proxy(batch.batch_classes.size(),
                              Vector(embed_dim, 0.0));
  for (int i = 0; i < n; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    const int ci = batch.class_of[ii];
    const std::size_t pi = static_cast<std::size_t>(
        eb.proxy_slot[static_cast<std::size_t>(ci)]);
    const auto& pos = eb.sims.positives[ii];
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const double g = loss_grads.d_s_pos[ii][j];
      const auto [dt, dx] = cosine_similarity_grad(
          eb.proxies[pi],
          eb.embeddings[static_cast<std::size_t>(pos[j].index)]);
      for (std::size_t e = 0; e < embed_dim; ++e) {
        d_proxy[pi][e] += g * dt[e];
        d_embed[static_cast<std::size_t>(pos[j].index)][e] += g * dx[e];
      }
    }
    const auto& neg = eb.sims.negatives[ii];
    for (std::size_t k = 0; k < neg.size(); ++k) {
      const double g = loss_grads.d_s_neg[ii][k];
      const std::size_t pk = static_cast<std::size_t>(eb.proxy_slot[
          static_cast<std::size_t>(batch.class_of[
              static_cast<std::size_t>(neg[k].index)])]);
      const auto [dxi, dtk] =
          cosine_similarity_grad(eb.embeddings[ii], eb.proxies[pk]);
      for (std::size_t e = 0; e < embed_dim; ++e) {
        d_embed[ii][e] += g * dxi[e];
        d_proxy[pk][e] += g * dtk[e];
      }
    }
  }

  // Backward through the encoders; text caches were filled first, in
  // batch-class order, acoustic caches in sample order.
  encoder.zero_grads();
  if (want_input_grads) {
    result.d_pooled.resize(static_cast<std::size_t>(n));
    result.d_text_features.resize(batch.batch_classes.size());
  }
  for (std::size_t p = 0; p < batch.batch_classes.size(); ++p) {
    Vector d_feat = encoder.text_backward(p, d_proxy[p]);
    if (want_input_grads) result.d_text_features[p] = std::move(d_feat);
  }
  for (int i = 0; i < n; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    Vector d_pool = encoder.acoustic_backward(ii, d_embed[ii]);
    if (want_input_grads) result.d_pooled[ii] = std::move(d_pool);
  }

  // Raw adaptive gradients = constrained gradients times the tanh chain
  // factor (identity when constraints are disabled).
  table.zero_grads();
  if (config.loss == LossKind::adams) {
    for (int c : batch.batch_classes) {
      const std::size_t cc = static_cast<std::size_t>(c);
      const ChainFactors f = table.constrain_chain_factor(c);
      table.grad_lambda_p()[cc] = loss_grads.d_lambda_p[cc] * f.lambda_p;
      table.grad_lambda_n()[cc] = loss_grads.d_lambda_n[cc] * f.lambda_n;
      table.grad_alpha()[cc] = loss_grads.d_alpha[cc] * f.alpha;
      table.grad_beta()[cc] = loss_grads.d_beta[cc] * f.beta;
    }
  }

  result.similarities = std::move(eb.sims);
  return result;
}

namespace {

void write_log_row(std::ostream& out, const StepLogRow& row) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%ld,%d,%.17g,%.17g,%.17g\n", row.step,
                row.epoch, row.loss, row.loss_pos, row.loss_neg);
  out << buf;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainResult train(const SyntheticDataset& dataset, const TrainConfig& config,
                  const TrainSinks& sinks) {
  config.validate();

  Rng master(config.seed);
  EncoderConfig enc_config = config.encoder;
  enc_config.init_seed = master.next_u64();
  Rng sampler(master.next_u64());

  ConstraintConfig constraints = config.constraints;
  constraints.enabled = config.range_constraints;

  TrainResult result{
      TwoViewEncoder(enc_config),
      AdaptiveParamTable(static_cast<int>(dataset.classes.size()), constraints),
      {},
      {}};

  const bool is_adams = (config.loss == LossKind::adams);
  const bool update_margins = is_adams && config.adaptive_margin;
  const bool update_scales = is_adams && config.adaptive_scale;

  const std::size_t train_count = dataset.samples_in_split(Split::train).size();
  if (train_count == 0) {
    throw ConfigError("dataset has no train samples");
  }
  const long batches_per_epoch = static_cast<long>(
      (train_count + static_cast<std::size_t>(config.batch_size()) - 1) /
      static_cast<std::size_t>(config.batch_size()));

  if (sinks.train_log) {
    *sinks.train_log << "step,epoch,loss,loss_pos,loss_neg\n";
    sinks.train_log->flush();
  }
  if (sinks.trajectory_log) {
    TrajectoryLog::write_csv_header(*sinks.trajectory_log);
    sinks.trajectory_log->flush();
  }

  std::size_t streamed_rows = 0;
  auto stream_new_trajectory_rows = [&]() {
    if (!sinks.trajectory_log) return;
    const auto& rows = result.trajectories.rows();
    for (; streamed_rows < rows.size(); ++streamed_rows) {
      TrajectoryLog::write_csv_row(*sinks.trajectory_log,
                                   rows[streamed_rows]);
    }
    sinks.trajectory_log->flush();
  };

  if (is_adams) {
    result.table.record_trajectory(0, result.trajectories);
    stream_new_trajectory_rows();
  }

  auto tensors = result.encoder.tensors();
  std::vector<AdamState> encoder_states(tensors.size());
  AdamState state_lambda_p, state_lambda_n, state_alpha, state_beta;

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (long b = 0; b < batches_per_epoch; ++b) {
      ++step;
      const Batch batch = sample_batch(dataset, config, sampler);
      StepResult sr;
      try {
        sr = compute_step(result.encoder, result.table, config, batch);
      } catch (const std::domain_error& e) {
        throw TrainingDiverged("step " + std::to_string(step) +
                               ": numeric failure: " + e.what());
      }
      if (!std::isfinite(sr.loss.total)) {
        throw TrainingDiverged("step " + std::to_string(step) +
                               ": loss is non-finite");
      }
      for (const auto& t : tensors) {
        if (!all_finite(*t.grad)) {
          throw TrainingDiverged("step " + std::to_string(step) +
                                 ": gradient of " + t.name +
                                 " is non-finite");
        }
      }
      if (is_adams &&
          !(all_finite(result.table.grad_lambda_p()) &&
            all_finite(result.table.grad_lambda_n()) &&
            all_finite(result.table.grad_alpha()) &&
            all_finite(result.table.grad_beta()))) {
        throw TrainingDiverged("step " + std::to_string(step) +
                               ": adaptive gradient is non-finite");
      }

      for (std::size_t t = 0; t < tensors.size(); ++t) {
        adam_step(*tensors[t].value, *tensors[t].grad, encoder_states[t],
                  config.lr_encoder, config.adam_beta1, config.adam_beta2,
                  config.adam_eps);
      }
      if (update_margins) {
        adam_step(result.table.raw_lambda_p(), result.table.grad_lambda_p(),
                  state_lambda_p, config.lr_adaptive, config.adam_beta1,
                  config.adam_beta2, config.adam_eps);
        adam_step(result.table.raw_lambda_n(), result.table.grad_lambda_n(),
                  state_lambda_n, config.lr_adaptive, config.adam_beta1,
                  config.adam_beta2, config.adam_eps);
      }
      if (update_scales) {
        adam_step(result.table.raw_alpha(), result.table.grad_alpha(),
                  state_alpha, config.lr_adaptive, config.adam_beta1,
                  config.adam_beta2, config.adam_eps);
        adam_step(result.table.raw_beta(), result.table.grad_beta(),
                  state_beta, config.lr_adaptive, config.adam_beta1,
                  config.adam_beta2, config.adam_eps);
      }

      const StepLogRow row{step, epoch, sr.loss.total, sr.loss.positive,
                           sr.loss.negative};
      result.log.push_back(row);
      if (sinks.train_log) {
        write_log_row(*sinks.train_log, row);
        sinks.train_log->flush();
      }
      if (is_adams) {
        result.table.record_trajectory_for(step, batch.batch_classes,
                                           result.trajectories);
        stream_new_trajectory_rows();
      }
    }
    if (is_adams) {
      result.table.record_trajectory(step, result.trajectories);
      stream_new_trajectory_rows();
    }
  }
  return result;
}

namespace {

double hybrid_err(double analytic, double fd) {
  const double denom =
      std::max({1.0, std::abs(analytic), std::abs(fd)});
  return std::abs(analytic - fd) / denom;
}

}  // namespace

std::string GradCheckReport::summary() const {
  std::ostringstream out;
  for (const auto& g : groups) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "  %-16s max rel err %.3e  (%d params)\n",
                  g.name.c_str(), g.max_err, g.count);
    out << buf;
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%s: max rel err %.3e (tolerance %.3e)\n",
                pass ? "PASS" : "FAIL", max_err, tolerance);
  out << buf;
  return out.str();
}

GradCheckReport grad_check(const GradCheckConfig& config) {
  // Small synthetic dataset; batch dims stay tiny so the sweep is fast.
  GenConfig gen;
  gen.num_classes = config.classes_per_batch;
  gen.samples_per_class = std::max(6, 3 * config.samples_per_class);
  gen.unseen_fraction = 0.0;
  gen.input_dim = config.input_dim;
  gen.text_dim = config.input_dim;
  gen.seq_len_lo = 2;
  gen.seq_len_hi = 4;
  gen.seed = config.seed;
  SyntheticDataset dataset = generate(gen);

  TrainConfig tc;
  tc.classes_per_batch = config.classes_per_batch;
  tc.samples_per_class = config.samples_per_class;
  tc.loss = LossKind::adams;
  tc.range_constraints = config.constraints_enabled;
  tc.constraints.enabled = config.constraints_enabled;
  tc.constraints.omega = config.omega;
  tc.encoder.input_dim = config.input_dim;
  tc.encoder.text_dim = config.input_dim;
  tc.encoder.hidden_dim = config.hidden_dim;
  tc.encoder.embed_dim = config.embed_dim;

  Rng rng(config.seed ^ 0xada5ada5ada5ada5ULL);
  tc.encoder.init_seed = rng.next_u64();
  TwoViewEncoder encoder(tc.encoder);
  AdaptiveParamTable table(static_cast<int>(dataset.classes.size()),
                           tc.constraints);
  // Move the raw parameters off their symmetric initialization so the
  // chain factors are exercised away from tanh(0).
  for (int c = 0; c < table.num_classes(); ++c) {
    const std::size_t cc = static_cast<std::size_t>(c);
    if (config.constraints_enabled) {
      table.raw_lambda_p()[cc] += rng.uniform(-0.5, 0.5);
      table.raw_lambda_n()[cc] += rng.uniform(-0.5, 0.5);
      table.raw_alpha()[cc] += rng.uniform(-0.5, 0.5);
      table.raw_beta()[cc] += rng.uniform(-0.5, 0.5);
    } else {
      table.raw_lambda_p()[cc] += rng.uniform(-0.2, 0.2);
      table.raw_lambda_n()[cc] += rng.uniform(-0.2, 0.2);
      table.raw_alpha()[cc] += rng.uniform(-0.5, 0.5);
      table.raw_beta()[cc] += rng.uniform(-4.0, 4.0);
    }
  }

  Rng sampler(rng.next_u64());
  const Batch batch = sample_batch(dataset, tc, sampler);

  // Analytic gradients at the base point.
  const StepResult sr = compute_step(encoder, table, tc, batch, true);

  // The FD probe freezes the 1/alpha prefactor at its base value so a
  // perturbation of raw alpha only reaches the exponent (stop-gradient).
  std::vector<double> frozen_prefactor(
      static_cast<std::size_t>(table.num_classes()));
  for (int c = 0; c < table.num_classes(); ++c) {
    frozen_prefactor[static_cast<std::size_t>(c)] = table.constrain(c).alpha;
  }

  auto eval_loss = [&]() -> double {
    EncodedBatch eb = encode_and_score(encoder, batch, table.num_classes());
    return batch_loss_parts(eb.sims, table, &frozen_prefactor).total;
  };

  GradCheckReport report;
  report.tolerance = config.tolerance;
  const double h = config.fd_step;

  auto check_span = [&](const std::string& name, std::span<double> values,
                        std::span<const double> analytic) {
    GradCheckGroup group{name, 0.0, static_cast<int>(values.size())};
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double lp = eval_loss();
      values[i] = saved - h;
      const double lm = eval_loss();
      values[i] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      group.max_err = std::max(group.max_err, hybrid_err(analytic[i], fd));
    }
    report.groups.push_back(group);
    report.max_err = std::max(report.max_err, group.max_err);
  };

  // Encoder parameters (analytic values come from the accumulated grad
  // buffers; copy them first since eval_loss does not touch them).
  for (auto& t : encoder.tensors()) {
    const std::vector<double> analytic = *t.grad;
    check_span(t.name, *t.value, analytic);
  }

  // Inputs: frames (per-frame gradient = pooled gradient / frame count)
  // and text features. Samples are perturbed through the dataset the
  // batch points into.
  {
    GradCheckGroup group{"frames", 0.0, 0};
    for (std::size_t i = 0; i < batch.samples.size(); ++i) {
      Sample& sample =
          dataset.samples[static_cast<std::size_t>(batch.samples[i]->id)];
      const double inv_len = 1.0 / static_cast<double>(sample.frames.size());
      for (auto& frame : sample.frames) {
        for (std::size_t d = 0; d < frame.size(); ++d) {
          const double saved = frame[d];
          frame[d] = saved + h;
          const double lp = eval_loss();
          frame[d] = saved - h;
          const double lm = eval_loss();
          frame[d] = saved;
          const double fd = (lp - lm) / (2.0 * h);
          const double analytic = sr.d_pooled[i][d] * inv_len;
          group.max_err = std::max(group.max_err, hybrid_err(analytic, fd));
          ++group.count;
        }
      }
    }
    report.groups.push_back(group);
    report.max_err = std::max(report.max_err, group.max_err);
  }
  {
    GradCheckGroup group{"text_features", 0.0, 0};
    for (std::size_t p = 0; p < batch.batch_classes.size(); ++p) {
      Vector& features =
          dataset.classes[static_cast<std::size_t>(batch.batch_classes[p])]
              .text_features;
      for (std::size_t d = 0; d < features.size(); ++d) {
        const double saved = features[d];
        features[d] = saved + h;
        const double lp = eval_loss();
        features[d] = saved - h;
        const double lm = eval_loss();
        features[d] = saved;
        const double fd = (lp - lm) / (2.0 * h);
        group.max_err =
            std::max(group.max_err, hybrid_err(sr.d_text_features[p][d], fd));
        ++group.count;
      }
    }
    report.groups.push_back(group);
    report.max_err = std::max(report.max_err, group.max_err);
  }

  // Raw adaptive parameters.
  check_span("raw_lambda_p", table.raw_lambda_p(), table.grad_lambda_p());
  check_span("raw_lambda_n", table.raw_lambda_n(), table.grad_lambda_n());
  check_span("raw_alpha", table.raw_alpha(), table.grad_alpha());
  check_span("raw_beta", table.raw_beta(), table.grad_beta());

  report.pass = report.max_err <= report.tolerance;
  return report;
}

}  // namespace adams
