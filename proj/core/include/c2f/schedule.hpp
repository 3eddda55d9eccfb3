#pragma once

#include "c2f/spectral.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>

namespace c2f {

// Per-step noise levels beta_i with the usual alpha / alpha-bar products.
// Steps are 1-based: i in 1..N.
class NoiseSchedule {
 public:
  static NoiseSchedule linear(int n_steps, double beta_start, double beta_end);

  int n_steps() const { return n_steps_; }
  double beta(int i) const { return betas_[check(i)]; }
  double alpha(int i) const { return 1.0 - betas_[check(i)]; }
  double alpha_bar(int i) const { return alpha_bars_[check(i)]; }

 private:
  NoiseSchedule(int n_steps, Eigen::VectorXd betas);
  int check(int i) const;

  int n_steps_;
  Eigen::VectorXd betas_;
  Eigen::VectorXd alpha_bars_;
};

enum class BlurType { zero, log, quartic };

std::string to_string(BlurType t);
BlurType blur_type_from_string(const std::string& s);

// Monotone blur exponent f(i) with f(0) = 0, plus its running sum F(i).
class BlurSchedule {
 public:
  static BlurSchedule make(BlurType type, double f_end, int n_steps);

  BlurType type() const { return type_; }
  double f_end() const { return f_end_; }
  int n_steps() const { return n_steps_; }
  double f(int i) const;           // i in 0..N
  double cumulative(int i) const;  // F(i) = sum_{j<=i} f(j)

 private:
  BlurSchedule(BlurType type, double f_end, int n_steps, Eigen::VectorXd values);

  BlurType type_;
  double f_end_;
  int n_steps_;
  Eigen::VectorXd values_;  // f(0..N)
  Eigen::VectorXd cumsum_;  // F(0..N)
};

// Noise schedule, blur schedule and blur operator combined. All process
// matrices are diagonal in the operator's eigenbasis; accessors return the
// per-coefficient diagonals laid out like the spectral coefficients:
//   diag_a(i)    = (1 - beta_i) * d^(2 f(i))
//   diag_b(i)    = 1 - diag_a(i)
//   diag_abar(i) = alpha_bar_i * d^(2 F(i))       (closed form)
// With fine_to_coarse set, d is replaced by 1 - d so low frequencies are
// destroyed first. paper_exponent switches the score/eps conversion (and the
// matching loss targets) from the consistent exponent -1/2 to the printed -1.
class DiffusionSchedule {
 public:
  DiffusionSchedule(NoiseSchedule noise, BlurSchedule blur,
                    std::shared_ptr<const BlurOperator> op,
                    bool fine_to_coarse = false, bool paper_exponent = false);

  int n_steps() const { return noise_.n_steps(); }
  const NoiseSchedule& noise() const { return noise_; }
  const BlurSchedule& blur() const { return blur_; }
  const std::shared_ptr<const BlurOperator>& op() const { return op_; }
  bool fine_to_coarse() const { return fine_to_coarse_; }
  bool paper_exponent() const { return paper_exponent_; }

  // Per-coefficient base eigenvalues (d, or 1-d when fine_to_coarse).
  Eigen::ArrayXXd base(FieldShape shape) const;

  Eigen::ArrayXXd diag_a(int i, FieldShape shape) const;
  Eigen::ArrayXXd diag_b(int i, FieldShape shape) const;
  Eigen::ArrayXXd diag_abar(int i, FieldShape shape) const;

  // Largest surviving signal coefficient at the terminal step; reported at
  // configuration time to justify the N(0, I) initialization.
  double abar_terminal_max(FieldShape shape) const;

 private:
  void check_step(int i) const;

  NoiseSchedule noise_;
  BlurSchedule blur_;
  std::shared_ptr<const BlurOperator> op_;
  bool fine_to_coarse_;
  bool paper_exponent_;
};

}  // namespace c2f
