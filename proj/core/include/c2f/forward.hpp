#pragma once

#include "c2f/rng.hpp"
#include "c2f/schedule.hpp"
#include "c2f/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace c2f {

// One closed-form draw from q(x_i | x_0). The standard-normal eps used in the
// construction is retained; it is the regression target of the eps losses.
// States produced by other routes (e.g. Markov stepping) carry no eps.
struct ForwardSample {
  int step = 0;
  SpectralField state;
  std::optional<SpectralField> eps;
  std::string x0_ref;
};

struct TrajectoryFrame {
  int step = 0;
  SpectralField state;
  Eigen::VectorXd band_energy;        // |x-bar|^2 per band of the recorded state
  Eigen::VectorXd signal_retention;   // band average of diag_abar (noiseless share)
};

struct Trajectory {
  enum class Direction { forward, reverse };
  Direction direction = Direction::forward;
  std::vector<TrajectoryFrame> frames;
};

// One blur-diffusion Markov step in pixel coordinates:
//   x_i = sqrt(1 - beta_i) W^(f(i)) x_{i-1} + C_i^(1/2) z,  C_i = I - (1-beta_i) W^(2 f(i))
// The signal part goes through the dense per-axis matrix W^(f(i)); the noise
// coloring is applied in the eigenbasis.
SpectralField markov_step_blur(const DiffusionSchedule& s, const SpectralField& x_prev,
                               int i, RngStream& rng);
SpectralField markov_step_blur_with(const DiffusionSchedule& s, const SpectralField& x_prev,
                                    int i, const Eigen::MatrixXd& z_pixel);

// The same step in rotated coordinates, operating purely on diagonals:
//   x-bar_i = A_i^(1/2) x-bar_{i-1} + B_i^(1/2) z-bar
SpectralField markov_step_generalized(const DiffusionSchedule& s,
                                      const SpectralField& x_prev, int i, RngStream& rng);
SpectralField markov_step_generalized_with(const DiffusionSchedule& s,
                                           const SpectralField& x_prev, int i,
                                           const Eigen::MatrixXd& z_spectral);

// Closed-form marginal x_i = U Abar^(1/2) U^T x_0 + U (I - Abar)^(1/2) U^T eps.
ForwardSample marginal_sample(const DiffusionSchedule& s, const SpectralField& x0, int i,
                              RngStream& rng, std::string x0_ref = {});
ForwardSample marginal_sample_with(const DiffusionSchedule& s, const SpectralField& x0,
                                   int i, const Eigen::MatrixXd& eps_pixel,
                                   std::string x0_ref = {});

// Unnormalized Gaussian high-pass H(x, i) = x - sqrt(1 - beta_{i+1}) W^(f(i+1)) x,
// valid for i in 0..N-1. The forward step from x_{i-1} to x_i subtracts
// H(x_{i-1}, i-1).
SpectralField high_pass(const DiffusionSchedule& s, const SpectralField& x, int i);

// Runs the Markov chain x_0 -> x_N, recording every stride-th state (plus the
// endpoints) with band diagnostics.
Trajectory forward_trajectory(const DiffusionSchedule& s, const SpectralField& x0,
                              RngStream& rng, int stride, int n_bands = 2);

}  // namespace c2f
