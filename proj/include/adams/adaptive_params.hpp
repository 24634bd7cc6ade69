#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace adams {

// Range-constraint constants and the margin-regularization weight.
// The defaults are also used as the fixed hyper-parameters of the
// baseline losses: lambda = 0.5, alpha = 2, beta = 50, delta_alpha = 0.5,
// delta_beta = 0.1, omega = 0.01.
struct ConstraintConfig {
  double lambda0 = 0.5;
  double alpha0 = 2.0;
  double beta0 = 50.0;
  double delta_alpha = 0.5;
  double delta_beta = 0.1;
  double omega = 0.01;
  bool enabled = true;

  void validate() const;  // throws ConfigError
};

// Constrained (lambda_p, lambda_n, alpha, beta) for one class.
struct ConstrainedParams {
  double lambda_p;
  double lambda_n;
  double alpha;
  double beta;
};

// d(constrained)/d(raw) for one class; all ones when constraints are
// disabled.
struct ChainFactors {
  double lambda_p;
  double lambda_n;
  double alpha;
  double beta;
};

struct TrajectoryRow {
  long step;
  int class_id;
  double lambda_p;
  double lambda_n;
  double alpha;
  double beta;
};

// In-memory trajectory log with CSV serialization
// (header step,class,lambda_p,lambda_n,alpha,beta).
class TrajectoryLog {
 public:
  void append(const TrajectoryRow& row) { rows_.push_back(row); }
  const std::vector<TrajectoryRow>& rows() const { return rows_; }

  // Throws IoError when the sink stream fails.
  void write_csv(std::ostream& out) const;
  static void write_csv_header(std::ostream& out);
  static void write_csv_row(std::ostream& out, const TrajectoryRow& row);

 private:
  std::vector<TrajectoryRow> rows_;
};

// Per-class learnable margin/scale parameters in their raw
// (unconstrained) form, plus matching gradient buffers. With
// constraints enabled raw values start at 0 so the constrained values
// start at (lambda0, lambda0, alpha0, beta0); with constraints disabled
// the raw values ARE the parameters and start at those constants
// directly.
class AdaptiveParamTable {
 public:
  AdaptiveParamTable(int num_classes, const ConstraintConfig& config);

  int num_classes() const { return num_classes_; }
  const ConstraintConfig& config() const { return config_; }

  // Eq.-style tanh mapping:
  //   lambda = lambda0 (1 + tanh raw)
  //   alpha  = alpha0  (1 + delta_alpha tanh raw)
  //   beta   = beta0   (1 + delta_beta  tanh raw)
  // Identity when constraints are disabled.
  ConstrainedParams constrain(int class_id) const;
  ChainFactors constrain_chain_factor(int class_id) const;

  // Appends the constrained values of every class at `step`.
  void record_trajectory(long step, TrajectoryLog& sink) const;
  // Same, restricted to the given classes (per-step logging).
  void record_trajectory_for(long step, const std::vector<int>& class_ids,
                             TrajectoryLog& sink) const;

  // Raw parameter / gradient storage, indexed by class.
  std::vector<double>& raw_lambda_p() { return raw_lambda_p_; }
  std::vector<double>& raw_lambda_n() { return raw_lambda_n_; }
  std::vector<double>& raw_alpha() { return raw_alpha_; }
  std::vector<double>& raw_beta() { return raw_beta_; }
  const std::vector<double>& raw_lambda_p() const { return raw_lambda_p_; }
  const std::vector<double>& raw_lambda_n() const { return raw_lambda_n_; }
  const std::vector<double>& raw_alpha() const { return raw_alpha_; }
  const std::vector<double>& raw_beta() const { return raw_beta_; }

  std::vector<double>& grad_lambda_p() { return grad_lambda_p_; }
  std::vector<double>& grad_lambda_n() { return grad_lambda_n_; }
  std::vector<double>& grad_alpha() { return grad_alpha_; }
  std::vector<double>& grad_beta() { return grad_beta_; }

  void zero_grads();

  // CSV with the raw values, one row per class, full precision.
  void save_csv(std::ostream& out) const;
  static AdaptiveParamTable load_csv(std::istream& in,
                                     const ConstraintConfig& config);

 private:
  void check_class(int class_id) const;

  int num_classes_;
  ConstraintConfig config_;
  std::vector<double> raw_lambda_p_, raw_lambda_n_, raw_alpha_, raw_beta_;
  std::vector<double> grad_lambda_p_, grad_lambda_n_, grad_alpha_, grad_beta_;
};

}  // namespace adams
