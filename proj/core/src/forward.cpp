#include "c2f/forward.hpp"

#include "c2f/evalx.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace c2f {

namespace {

// W^p x in pixel coordinates. The coarse-to-fine operator is a per-axis power
// and goes through the dense 1D matrix; the fine-to-coarse variant (I - D is
// not separable across axes) multiplies in the eigenbasis instead.
Eigen::MatrixXd blur_power_pixel(const DiffusionSchedule& s, const Eigen::MatrixXd& x,
                                 FieldShape shape, double p) {
  if (!s.fine_to_coarse()) {
    Eigen::MatrixXd w = s.op()->dense_power(p);
    if (shape.rank == 1) return w * x;
    return w * x * w.transpose();
  }
  Eigen::ArrayXXd scale = s.base(shape).pow(p);
  Eigen::MatrixXd sp = s.op()->to_spectral(x, shape);
  return s.op()->to_pixel((sp.array() * scale).matrix(), shape);
}

}  // namespace

SpectralField markov_step_blur_with(const DiffusionSchedule& s, const SpectralField& x_prev,
                                    int i, const Eigen::MatrixXd& z_pixel) {
  const FieldShape shape = x_prev.shape();
  s.op()->check_shape(z_pixel, shape);
  double beta = s.noise().beta(i);
  Eigen::MatrixXd signal =
      std::sqrt(1.0 - beta) * blur_power_pixel(s, x_prev.pixel(), shape, s.blur().f(i));
  Eigen::ArrayXXd b = s.diag_b(i, shape);
  Eigen::MatrixXd z_spec = s.op()->to_spectral(z_pixel, shape);
  Eigen::MatrixXd colored = s.op()->to_pixel((z_spec.array() * b.sqrt()).matrix(), shape);
  return SpectralField::from_pixel(x_prev.basis(), shape, signal + colored);
}

SpectralField markov_step_blur(const DiffusionSchedule& s, const SpectralField& x_prev,
                               int i, RngStream& rng) {
  const FieldShape shape = x_prev.shape();
  return markov_step_blur_with(s, x_prev, i, rng.gauss_matrix(shape.rows(), shape.cols()));
}

SpectralField markov_step_generalized_with(const DiffusionSchedule& s,
                                           const SpectralField& x_prev, int i,
                                           const Eigen::MatrixXd& z_spectral) {
  const FieldShape shape = x_prev.shape();
  s.op()->check_shape(z_spectral, shape);
  Eigen::ArrayXXd a = s.diag_a(i, shape);
  Eigen::ArrayXXd b = 1.0 - a;
  Eigen::MatrixXd out =
      (x_prev.spectral().array() * a.sqrt() + z_spectral.array() * b.sqrt()).matrix();
  return SpectralField::from_spectral(x_prev.basis(), shape, std::move(out));
}

SpectralField markov_step_generalized(const DiffusionSchedule& s,
                                      const SpectralField& x_prev, int i, RngStream& rng) {
  const FieldShape shape = x_prev.shape();
  return markov_step_generalized_with(s, x_prev, i,
                                      rng.gauss_matrix(shape.rows(), shape.cols()));
}

ForwardSample marginal_sample_with(const DiffusionSchedule& s, const SpectralField& x0,
                                   int i, const Eigen::MatrixXd& eps_pixel,
                                   std::string x0_ref) {
  const FieldShape shape = x0.shape();
  s.op()->check_shape(eps_pixel, shape);
  Eigen::ArrayXXd abar = s.diag_abar(i, shape);
  Eigen::MatrixXd eps_spec = s.op()->to_spectral(eps_pixel, shape);
  Eigen::MatrixXd state = (x0.spectral().array() * abar.sqrt() +
                           eps_spec.array() * (1.0 - abar).sqrt())
                              .matrix();
  ForwardSample sample{i,
                       SpectralField::from_spectral(x0.basis(), shape, std::move(state)),
                       SpectralField::from_pixel(x0.basis(), shape, eps_pixel),
                       std::move(x0_ref)};
  return sample;
}

ForwardSample marginal_sample(const DiffusionSchedule& s, const SpectralField& x0, int i,
                              RngStream& rng, std::string x0_ref) {
  const FieldShape shape = x0.shape();
  return marginal_sample_with(s, x0, i, rng.gauss_matrix(shape.rows(), shape.cols()),
                              std::move(x0_ref));
}

SpectralField high_pass(const DiffusionSchedule& s, const SpectralField& x, int i) {
  if (i < 0 || i > s.n_steps() - 1)
    throw std::invalid_argument("high_pass: index out of range");
  const FieldShape shape = x.shape();
  double beta_next = s.noise().beta(i + 1);
  Eigen::MatrixXd low =
      std::sqrt(1.0 - beta_next) * blur_power_pixel(s, x.pixel(), shape, s.blur().f(i + 1));
  return SpectralField::from_pixel(x.basis(), shape, x.pixel() - low);
}

Trajectory forward_trajectory(const DiffusionSchedule& s, const SpectralField& x0,
                              RngStream& rng, int stride, int n_bands) {
  if (stride < 1) throw std::invalid_argument("forward_trajectory: stride must be >= 1");
  const FieldShape shape = x0.shape();
  BandPartition bands(*s.op(), shape, n_bands);
  Eigen::ArrayXXd x0_weights = x0.spectral().array().square();

  Trajectory traj;
  traj.direction = Trajectory::Direction::forward;

  auto record = [&](int step, const SpectralField& state) {
    TrajectoryFrame frame{step, state, bands.energies(state), Eigen::VectorXd()};
    if (step == 0)
      frame.signal_retention = Eigen::VectorXd::Ones(n_bands);
    else
      frame.signal_retention = bands.average(s.diag_abar(step, shape), &x0_weights);
    traj.frames.push_back(std::move(frame));
  };

  record(0, x0);
  SpectralField state = x0;
  for (int i = 1; i <= s.n_steps(); ++i) {
    state = markov_step_blur(s, state, i, rng);
    if (i % stride == 0 || i == s.n_steps()) record(i, state);
  }
  return traj;
}

}  // namespace c2f
