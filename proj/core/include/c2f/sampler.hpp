#pragma once

#include "c2f/evalx.hpp"
#include "c2f/forward.hpp"
#include "c2f/rng.hpp"
#include "c2f/score.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace c2f {

enum class FinalStepNoise { noise, suppress };

// Reverse (deblurring) sampler configuration. n_steps must equal the model
// schedule's N; there is no step skipping. The reverse step that inverts
// forward step i uses schedule index i, so sampling starts at i = N with
// beta_N. literal_paper_indexing switches to the i+1 convention (clamped at N,
// where index N+1 does not exist) for side-by-side comparison.
struct SamplerConfig {
  int n_steps = 0;
  FieldShape shape;
  std::shared_ptr<const ScoreModel> model;
  FinalStepNoise final_noise = FinalStepNoise::suppress;
  bool literal_paper_indexing = false;
  std::uint64_t seed = 0;
};

void validate(const SamplerConfig& cfg);

// One reverse step in score form:
//   x_{i-1} = x_i + H(x_i) + U B U^T s(x_i, i) + U B^(1/2) U^T z
// Unsharp masking (identity plus high-pass) plus the denoising term.
SpectralField reverse_step_score(const SamplerConfig& cfg, const SpectralField& x, int i,
                                 RngStream& rng);
SpectralField reverse_step_score_with(const SamplerConfig& cfg, const SpectralField& x,
                                      int i, const Eigen::MatrixXd& z_pixel,
                                      bool add_noise);

// The same step in eps form, with the model's eps prediction rescaled through
// the score conversion inside the update formula. Pathwise identical to the
// score form under shared randomness.
SpectralField reverse_step_eps(const SamplerConfig& cfg, const SpectralField& x, int i,
                               RngStream& rng);
SpectralField reverse_step_eps_with(const SamplerConfig& cfg, const SpectralField& x,
                                    int i, const Eigen::MatrixXd& z_pixel, bool add_noise);

// Standard variance-preserving reverse diffusion step (the f = 0 special
// case), written as plain scalar arithmetic in pixel space:
//   x_{i-1} = x_i - (sqrt(1 - beta_i) - 1) x_i + beta_i s + sqrt(beta_i) z
Eigen::MatrixXd vp_reverse_step(const NoiseSchedule& noise, const Eigen::MatrixXd& x,
                                int i, const Eigen::MatrixXd& score,
                                const Eigen::MatrixXd& z, bool add_noise);

struct SampleRun {
  std::vector<SpectralField> terminal;       // one per chain
  std::vector<Trajectory> trajectories;      // first filmstrip_chains chains
  std::vector<int> recorded_steps;           // descending, N .. 0
  Eigen::MatrixXd band_energy_mean;          // recorded step x band, chain average
  Eigen::MatrixXd signal_retention;          // recorded step x band, schedule-derived
};

// Batch sampling from x_N ~ N(0, I). Chains are independent with per-chain
// streams derived from (seed, chain index) and may execute concurrently;
// results are ordered by chain index. signal_weights, when given, holds the
// dataset's per-coefficient spectral second moments E|x0-bar|^2 used for the
// retention diagnostic.
SampleRun sample(const SamplerConfig& cfg, int batch_size, int stride, int n_bands = 2,
                 int filmstrip_chains = 1, const Eigen::ArrayXXd* signal_weights = nullptr);

// Single chain with its trajectory, for determinism checks.
Trajectory sample_chain(const SamplerConfig& cfg, std::uint64_t chain_index, int stride,
                        int n_bands = 2);

// Verifies the stochastic-difference-equation template behind both processes:
// the forward step must match x + f_i + G_i z with f_i = -H and G_i = C^(1/2),
// and the reverse step must match x - f_i + G_i G_i^T s + G_i z under the
// implemented index convention. Also reports the gap to the literal i+1
// indexing and the terminal signal leakage |Abar_N|_max.
struct ContractReport {
  double max_forward_deviation = 0.0;
  double max_reverse_deviation = 0.0;
  double max_literal_gap = 0.0;
  double abar_terminal_max = 0.0;
};

ContractReport discretization_contract_check(const ScoreModel& model, FieldShape shape,
                                             RngStream& rng, int n_probes = 32);

}  // namespace c2f
