#include "adams/adaptive_params.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "adams/errors.hpp"

namespace adams {

void ConstraintConfig::validate() const {
  if (lambda0 <= 0.0 || alpha0 <= 0.0 || beta0 <= 0.0) {
    throw ConfigError("lambda0, alpha0, beta0 must be positive");
  }
  if (delta_alpha < 0.0 || delta_alpha >= 1.0 || delta_beta < 0.0 ||
      delta_beta >= 1.0) {
    throw ConfigError("delta_alpha and delta_beta must lie in [0, 1)");
  }
  if (omega < 0.0) {
    throw ConfigError("omega must be non-negative");
  }
}

AdaptiveParamTable::AdaptiveParamTable(int num_classes,
                                       const ConstraintConfig& config)
    : num_classes_(num_classes), config_(config) {
  config_.validate();
  if (num_classes <= 0) {
    throw ConfigError("adaptive table needs at least one class");
  }
  const std::size_t n = static_cast<std::size_t>(num_classes);
  if (config_.enabled) {
    raw_lambda_p_.assign(n, 0.0);
    raw_lambda_n_.assign(n, 0.0);
    raw_alpha_.assign(n, 0.0);
    raw_beta_.assign(n, 0.0);
  } else {
    raw_lambda_p_.assign(n, config_.lambda0);
    raw_lambda_n_.assign(n, config_.lambda0);
    raw_alpha_.assign(n, config_.alpha0);
    raw_beta_.assign(n, config_.beta0);
  }
  grad_lambda_p_.assign(n, 0.0);
  grad_lambda_n_.assign(n, 0.0);
  grad_alpha_.assign(n, 0.0);
  grad_beta_.assign(n, 0.0);
}

void AdaptiveParamTable::check_class(int class_id) const {
  if (class_id < 0 || class_id >= num_classes_) {
    throw std::invalid_argument("class index out of range: " +
                                std::to_string(class_id));
  }
}

ConstrainedParams AdaptiveParamTable::constrain(int class_id) const {
  check_class(class_id);
  const std::size_t c = static_cast<std::size_t>(class_id);
  if (!config_.enabled) {
    return {raw_lambda_p_[c], raw_lambda_n_[c], raw_alpha_[c], raw_beta_[c]};
  }
  return {
      config_.lambda0 * (1.0 + std::tanh(raw_lambda_p_[c])),
      config_.lambda0 * (1.0 + std::tanh(raw_lambda_n_[c])),
      config_.alpha0 * (1.0 + config_.delta_alpha * std::tanh(raw_alpha_[c])),
      config_.beta0 * (1.0 + config_.delta_beta * std::tanh(raw_beta_[c])),
  };
}

namespace {
// sech^2(x) = 1 - tanh^2(x)
double sech_sq(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
}  // namespace

ChainFactors AdaptiveParamTable::constrain_chain_factor(int class_id) const {
  check_class(class_id);
  const std::size_t c = static_cast<std::size_t>(class_id);
  if (!config_.enabled) {
    return {1.0, 1.0, 1.0, 1.0};
  }
  return {
      config_.lambda0 * sech_sq(raw_lambda_p_[c]),
      config_.lambda0 * sech_sq(raw_lambda_n_[c]),
      config_.alpha0 * config_.delta_alpha * sech_sq(raw_alpha_[c]),
      config_.beta0 * config_.delta_beta * sech_sq(raw_beta_[c]),
  };
}

void AdaptiveParamTable::record_trajectory(long step,
                                           TrajectoryLog& sink) const {
  for (int c = 0; c < num_classes_; ++c) {
    const ConstrainedParams p = constrain(c);
    sink.append({step, c, p.lambda_p, p.lambda_n, p.alpha, p.beta});
  }
}

void AdaptiveParamTable::record_trajectory_for(
    long step, const std::vector<int>& class_ids, TrajectoryLog& sink) const {
  for (int c : class_ids) {
    const ConstrainedParams p = constrain(c);
    sink.append({step, c, p.lambda_p, p.lambda_n, p.alpha, p.beta});
  }
}

void AdaptiveParamTable::zero_grads() {
  grad_lambda_p_.assign(grad_lambda_p_.size(), 0.0);
  grad_lambda_n_.assign(grad_lambda_n_.size(), 0.0);
  grad_alpha_.assign(grad_alpha_.size(), 0.0);
  grad_beta_.assign(grad_beta_.size(), 0.0);
}

namespace {
// 12 significant digits satisfies the >= 9 the trajectory CSV promises.
void write_double(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  out << buf;
}

// Full 17 digits so a load round-trips bit-exactly.
void write_double_exact(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}
}  // namespace

void TrajectoryLog::write_csv_header(std::ostream& out) {
  out << "step,class,lambda_p,lambda_n,alpha,beta\n";
}

void TrajectoryLog::write_csv_row(std::ostream& out, const TrajectoryRow& r) {
  out << r.step << ',' << r.class_id << ',';
  write_double(out, r.lambda_p);
  out << ',';
  write_double(out, r.lambda_n);
  out << ',';
  write_double(out, r.alpha);
  out << ',';
  write_double(out, r.beta);
  out << '\n';
}

void TrajectoryLog::write_csv(std::ostream& out) const {
  write_csv_header(out);
  for (const auto& r : rows_) write_csv_row(out, r);
  out.flush();
  if (!out) {
    throw IoError("failed to write trajectory CSV");
  }
}

void AdaptiveParamTable::save_csv(std::ostream& out) const {
  out << "class,raw_lambda_p,raw_lambda_n,raw_alpha,raw_beta\n";
  for (int c = 0; c < num_classes_; ++c) {
    const std::size_t i = static_cast<std::size_t>(c);
    out << c << ',';
    write_double_exact(out, raw_lambda_p_[i]);
    out << ',';
    write_double_exact(out, raw_lambda_n_[i]);
    out << ',';
    write_double_exact(out, raw_alpha_[i]);
    out << ',';
    write_double_exact(out, raw_beta_[i]);
    out << '\n';
  }
  out.flush();
  if (!out) {
    throw IoError("failed to write adaptive-table CSV");
  }
}

AdaptiveParamTable AdaptiveParamTable::load_csv(
    std::istream& in, const ConstraintConfig& config) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "class,raw_lambda_p,raw_lambda_n,raw_alpha,raw_beta") {
    throw FormatError("adaptive-table CSV: bad header");
  }
  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::array<double, 4> vals{};
    if (!std::getline(ss, field, ',')) {
      throw FormatError("adaptive-table CSV: short row");
    }
    const int c = std::stoi(field);
    if (c != static_cast<int>(rows.size())) {
      throw FormatError("adaptive-table CSV: classes must be dense");
    }
    for (auto& v : vals) {
      if (!std::getline(ss, field, ',')) {
        throw FormatError("adaptive-table CSV: short row");
      }
      v = std::stod(field);
    }
    rows.push_back(vals);
  }
  if (rows.empty()) {
    throw FormatError("adaptive-table CSV: no rows");
  }
  AdaptiveParamTable table(static_cast<int>(rows.size()), config);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    table.raw_lambda_p_[c] = rows[c][0];
    table.raw_lambda_n_[c] = rows[c][1];
    table.raw_alpha_[c] = rows[c][2];
    table.raw_beta_[c] = rows[c][3];
  }
  return table;
}

}  // namespace adams
