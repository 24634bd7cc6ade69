#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adams/adaptive_params.hpp"
#include "adams/data.hpp"
#include "adams/encoder.hpp"
#include "adams/losses.hpp"
#include "adams/rng.hpp"

namespace adams {

// Desk-scale defaults: N = 64 via 16 classes x 4 samples. Learning
// rates follow the reference setting (1e-4 for the networks, 1e-5 for
// the adaptive parameters). omega = 0.01 was tuned against N = 256 and
// in general has to move with the batch size; it is a plain config
// knob here.
struct TrainConfig {
  int classes_per_batch = 16;
  int samples_per_class = 4;
  int epochs = 50;
  double lr_encoder = 1e-4;
  double lr_adaptive = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  LossKind loss = LossKind::adams;
  // Ablation toggles (meaningful for the adams loss only): a disabled
  // part stays frozen at its initial value.
  bool adaptive_margin = true;
  bool adaptive_scale = true;
  bool range_constraints = true;
  ConstraintConfig constraints;  // lambda0/alpha0/beta0 double as the
                                 // fixed baseline hyper-parameters
  EncoderConfig encoder;         // init_seed is derived from `seed`

  int batch_size() const { return classes_per_batch * samples_per_class; }
  void validate() const;  // throws ConfigError
};

// Standard Adam with bias correction. One state per parameter tensor.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Class-balanced batch: C distinct classes, M samples each, drawn
// without replacement within the batch. Guarantees every anchor a
// non-empty positive and negative set.
struct Batch {
  std::vector<const Sample*> samples;  // size C*M, grouped by class
  std::vector<int> class_of;
  std::vector<int> batch_classes;  // distinct classes in selection order
  std::vector<const Vector*> text_features;  // aligned with batch_classes
};

Batch sample_batch(const SyntheticDataset& dataset, const TrainConfig& config,
                   Rng& rng);

// One forward/backward pass over a batch: encode both views, build the
// similarity batch, evaluate the configured loss, and chain gradients
// into the encoder buffers and (for the adams loss) the table's raw
// gradient buffers. Input gradients are filled only on request.
struct StepResult {
  BatchLossParts loss;
  SimilarityBatch similarities;
  std::vector<Vector> d_pooled;         // per sample, w.r.t. pooled frames
  std::vector<Vector> d_text_features;  // per batch class
};

StepResult compute_step(TwoViewEncoder& encoder, AdaptiveParamTable& table,
                        const TrainConfig& config, const Batch& batch,
                        bool want_input_grads = false);

struct StepLogRow {
  long step;
  int epoch;
  double loss;
  double loss_pos;
  double loss_neg;
};

// Optional streaming sinks; rows are flushed as they are produced so an
// interrupted run leaves usable partial logs.
struct TrainSinks {
  std::ostream* train_log = nullptr;
  std::ostream* trajectory_log = nullptr;
};

struct TrainResult {
  TwoViewEncoder encoder;
  AdaptiveParamTable table;
  std::vector<StepLogRow> log;
  TrajectoryLog trajectories;
};

// Full loop: sample -> encode -> loss -> gradients -> Adam updates,
// with per-step trajectory records for the classes in the batch and a
// full-table snapshot per epoch (step 0 snapshot included). Aborts with
// TrainingDiverged if the loss or any gradient becomes non-finite.
TrainResult train(const SyntheticDataset& dataset, const TrainConfig& config,
                  const TrainSinks& sinks = {});

// Finite-difference verification of the whole pipeline at small dims.
struct GradCheckConfig {
  std::uint64_t seed = 1;
  double tolerance = 1e-6;
  double fd_step = 1e-6;
  int classes_per_batch = 3;
  int samples_per_class = 2;
  int input_dim = 6;
  int hidden_dim = 8;
  int embed_dim = 5;
  bool constraints_enabled = true;
  double omega = 0.01;
};

struct GradCheckGroup {
  std::string name;
  double max_err = 0.0;
  int count = 0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  std::string summary() const;
};

// Central differences of the full batch loss w.r.t. every encoder
// parameter, every input (frames and text features), and every raw
// adaptive parameter. The probe honors the stop-gradient: the 1/alpha
// prefactor stays frozen at its base value while raw alpha varies.
// Error metric per parameter: |analytic - fd| / max(1, |analytic|, |fd|).
GradCheckReport grad_check(const GradCheckConfig& config);

}  // namespace adams
