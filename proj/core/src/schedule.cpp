#include "c2f/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace c2f {

NoiseSchedule::NoiseSchedule(int n_steps, Eigen::VectorXd betas)
    : n_steps_(n_steps), betas_(std::move(betas)) {
  alpha_bars_.resize(n_steps_);
  double prod = 1.0;
  for (int i = 0; i < n_steps_; ++i) {
    prod *= 1.0 - betas_[i];
    alpha_bars_[i] = prod;
  }
}

NoiseSchedule NoiseSchedule::linear(int n_steps, double beta_start, double beta_end) {
  if (n_steps < 1) throw std::invalid_argument("NoiseSchedule: n_steps must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument("NoiseSchedule: need 0 < beta_start <= beta_end < 1");
  Eigen::VectorXd betas(n_steps);
  if (n_steps == 1) {
    betas[0] = beta_start;
  } else {
    for (int i = 0; i < n_steps; ++i)
      betas[i] = beta_start + (beta_end - beta_start) * i / (n_steps - 1);
  }
  return NoiseSchedule(n_steps, std::move(betas));
}

int NoiseSchedule::check(int i) const {
  if (i < 1 || i > n_steps_)
    throw std::invalid_argument("NoiseSchedule: step index out of range");
  return i - 1;
}

std::string to_string(BlurType t) {
  switch (t) {
    case BlurType::zero: return "zero";
    case BlurType::log: return "log";
    case BlurType::quartic: return "quartic";
  }
  throw std::logic_error("unknown BlurType");
}

BlurType blur_type_from_string(const std::string& s) {
  if (s == "zero") return BlurType::zero;
  if (s == "log") return BlurType::log;
  if (s == "quartic") return BlurType::quartic;
  throw std::invalid_argument("unknown blur schedule type: " + s);
}

BlurSchedule::BlurSchedule(BlurType type, double f_end, int n_steps,
                           Eigen::VectorXd values)
    : type_(type), f_end_(f_end), n_steps_(n_steps), values_(std::move(values)) {
  cumsum_.resize(n_steps_ + 1);
  cumsum_[0] = 0.0;
  for (int i = 1; i <= n_steps_; ++i) cumsum_[i] = cumsum_[i - 1] + values_[i];
}

BlurSchedule BlurSchedule::make(BlurType type, double f_end, int n_steps) {
  if (f_end < 0.0) throw std::invalid_argument("BlurSchedule: f_end must be >= 0");
  if (n_steps < 1) throw std::invalid_argument("BlurSchedule: n_steps must be >= 1");
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n_steps + 1);
  for (int i = 1; i <= n_steps; ++i) {
    switch (type) {
      case BlurType::zero:
        values[i] = 0.0;
        break;
      case BlurType::quartic: {
        double r = static_cast<double>(i) / n_steps;
        values[i] = f_end * r * r * r * r;
        break;
      }
      case BlurType::log:
        // log(1) = 0, so i = 1 needs no special handling; f(0) stays 0.
        values[i] = n_steps == 1 ? f_end
                                 : f_end * std::log(static_cast<double>(i)) /
                                       std::log(static_cast<double>(n_steps));
        break;
    }
  }
  return BlurSchedule(type, f_end, n_steps, std::move(values));
}

double BlurSchedule::f(int i) const {
  if (i < 0 || i > n_steps_)
    throw std::invalid_argument("BlurSchedule: index out of range");
  return values_[i];
}

double BlurSchedule::cumulative(int i) const {
  if (i < 0 || i > n_steps_)
    throw std::invalid_argument("BlurSchedule: index out of range");
  return cumsum_[i];
}

DiffusionSchedule::DiffusionSchedule(NoiseSchedule noise, BlurSchedule blur,
                                     std::shared_ptr<const BlurOperator> op,
                                     bool fine_to_coarse, bool paper_exponent)
    : noise_(std::move(noise)),
      blur_(std::move(blur)),
      op_(std::move(op)),
      fine_to_coarse_(fine_to_coarse),
      paper_exponent_(paper_exponent) {
  if (noise_.n_steps() != blur_.n_steps())
    throw std::invalid_argument("DiffusionSchedule: noise and blur step counts differ");
  if (!op_) throw std::invalid_argument("DiffusionSchedule: missing blur operator");
}

void DiffusionSchedule::check_step(int i) const {
  if (i < 1 || i > n_steps())
    throw std::invalid_argument("DiffusionSchedule: step index out of range");
}

Eigen::ArrayXXd DiffusionSchedule::base(FieldShape shape) const {
  Eigen::ArrayXXd d = op_->freq_eigenvalues(shape);
  return fine_to_coarse_ ? (1.0 - d).eval() : d;
}

Eigen::ArrayXXd DiffusionSchedule::diag_a(int i, FieldShape shape) const {
  check_step(i);
  return (1.0 - noise_.beta(i)) * base(shape).pow(2.0 * blur_.f(i));
}

Eigen::ArrayXXd DiffusionSchedule::diag_b(int i, FieldShape shape) const {
  return 1.0 - diag_a(i, shape);
}

Eigen::ArrayXXd DiffusionSchedule::diag_abar(int i, FieldShape shape) const {
  check_step(i);
  return noise_.alpha_bar(i) * base(shape).pow(2.0 * blur_.cumulative(i));
}

double DiffusionSchedule::abar_terminal_max(FieldShape shape) const {
  return diag_abar(n_steps(), shape).maxCoeff();
}

}  // namespace c2f
