#include "c2f/sampler.hpp"

#include "c2f/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace c2f {

void validate(const SamplerConfig& cfg) {
  if (!cfg.model) throw std::invalid_argument("SamplerConfig: missing score model");
  if (cfg.n_steps != cfg.model->schedule().n_steps())
    throw std::invalid_argument("SamplerConfig: n_steps must equal the schedule's N");
  if (cfg.shape.n != cfg.model->schedule().op()->axis_len())
    throw std::invalid_argument("SamplerConfig: shape does not match the blur operator");
}

namespace {

void check_step(const SamplerConfig& cfg, int i) {
  if (i < 1 || i > cfg.n_steps)
    throw std::invalid_argument("reverse step: index out of range");
}

// Schedule index used by the reverse step inverting forward step i.
int coeff_index(const SamplerConfig& cfg, int i) {
  return cfg.literal_paper_indexing ? std::min(i + 1, cfg.n_steps) : i;
}

struct StepCoeffs {
  Eigen::ArrayXXd filter;     // sqrt(1 - beta_j) * base^(f(j)) per coefficient
  Eigen::ArrayXXd b;          // diag_b(j)
};

StepCoeffs step_coeffs(const SamplerConfig& cfg, int i) {
  const DiffusionSchedule& s = cfg.model->schedule();
  int j = coeff_index(cfg, i);
  StepCoeffs c;
  c.filter = std::sqrt(1.0 - s.noise().beta(j)) * s.base(cfg.shape).pow(s.blur().f(j));
  c.b = s.diag_b(j, cfg.shape);
  return c;
}

SpectralField assemble_reverse(const SamplerConfig& cfg, const SpectralField& x,
                               const StepCoeffs& c, const Eigen::ArrayXXd& score_spec,
                               const Eigen::MatrixXd* z_pixel) {
  const DiffusionSchedule& s = cfg.model->schedule();
  Eigen::ArrayXXd xs = x.spectral().array();
  // x + H(x) = (2 - filter) x in the eigenbasis.
  Eigen::ArrayXXd out = (2.0 - c.filter) * xs + c.b * score_spec;
  if (z_pixel) {
    Eigen::ArrayXXd z_spec = s.op()->to_spectral(*z_pixel, cfg.shape).array();
    out += c.b.sqrt() * z_spec;
  }
  return SpectralField::from_spectral(x.basis(), cfg.shape, out.matrix());
}

}  // namespace

SpectralField reverse_step_score_with(const SamplerConfig& cfg, const SpectralField& x,
                                      int i, const Eigen::MatrixXd& z_pixel,
                                      bool add_noise) {
  check_step(cfg, i);
  StepCoeffs c = step_coeffs(cfg, i);
  Eigen::ArrayXXd score = cfg.model->predict_score(x, i).spectral().array();
  return assemble_reverse(cfg, x, c, score, add_noise ? &z_pixel : nullptr);
}

SpectralField reverse_step_score(const SamplerConfig& cfg, const SpectralField& x, int i,
                                 RngStream& rng) {
  check_step(cfg, i);
  bool add_noise = i > 1 || cfg.final_noise == FinalStepNoise::noise;
  Eigen::MatrixXd z = rng.gauss_matrix(cfg.shape.rows(), cfg.shape.cols());
  return reverse_step_score_with(cfg, x, i, z, add_noise);
}

SpectralField reverse_step_eps_with(const SamplerConfig& cfg, const SpectralField& x,
                                    int i, const Eigen::MatrixXd& z_pixel,
                                    bool add_noise) {
  check_step(cfg, i);
  const DiffusionSchedule& s = cfg.model->schedule();
  StepCoeffs c = step_coeffs(cfg, i);
  // x + H(x) - U B w U^T eps-hat + U B^(1/2) U^T z, with w the eps-to-score
  // diagonal at the state's step i.
  Eigen::ArrayXXd eps_hat = cfg.model->predict_eps(x, i).spectral().array();
  Eigen::ArrayXXd w = score_conversion_weight(s, i, cfg.shape);
  Eigen::ArrayXXd xs = x.spectral().array();
  Eigen::ArrayXXd out = (2.0 - c.filter) * xs - c.b * w * eps_hat;
  if (add_noise) {
    Eigen::ArrayXXd z_spec = s.op()->to_spectral(z_pixel, cfg.shape).array();
    out += c.b.sqrt() * z_spec;
  }
  return SpectralField::from_spectral(x.basis(), cfg.shape, out.matrix());
}

SpectralField reverse_step_eps(const SamplerConfig& cfg, const SpectralField& x, int i,
                               RngStream& rng) {
  check_step(cfg, i);
  bool add_noise = i > 1 || cfg.final_noise == FinalStepNoise::noise;
  Eigen::MatrixXd z = rng.gauss_matrix(cfg.shape.rows(), cfg.shape.cols());
  return reverse_step_eps_with(cfg, x, i, z, add_noise);
}

Eigen::MatrixXd vp_reverse_step(const NoiseSchedule& noise, const Eigen::MatrixXd& x,
                                int i, const Eigen::MatrixXd& score,
                                const Eigen::MatrixXd& z, bool add_noise) {
  double beta = noise.beta(i);
  Eigen::MatrixXd out = x - (std::sqrt(1.0 - beta) - 1.0) * x + beta * score;
  if (add_noise) out += std::sqrt(beta) * z;
  return out;
}

namespace {

std::vector<int> recorded_steps(int n_steps, int stride) {
  std::vector<int> steps;
  for (int s = n_steps; s >= 0; --s)
    if (s % stride == 0 || s == 0 || s == n_steps) steps.push_back(s);
  return steps;
}

}  // namespace

SampleRun sample(const SamplerConfig& cfg, int batch_size, int stride, int n_bands,
                 int filmstrip_chains, const Eigen::ArrayXXd* signal_weights) {
  validate(cfg);
  if (batch_size < 1) throw std::invalid_argument("sample: batch_size must be >= 1");
  if (stride < 1) throw std::invalid_argument("sample: stride must be >= 1");
  const DiffusionSchedule& s = cfg.model->schedule();
  BandPartition bands(*s.op(), cfg.shape, n_bands);
  std::vector<int> steps = recorded_steps(cfg.n_steps, stride);
  const int n_rec = static_cast<int>(steps.size());
  filmstrip_chains = std::min(filmstrip_chains, batch_size);

  std::vector<SpectralField> terminal;
  terminal.reserve(batch_size);
  for (int c = 0; c < batch_size; ++c)
    terminal.push_back(SpectralField::zero(s.op(), cfg.shape));
  std::vector<Trajectory> strips(filmstrip_chains);
  Eigen::MatrixXd energy_acc = Eigen::MatrixXd::Zero(n_rec, n_bands);
  std::vector<Eigen::MatrixXd> chain_energy(batch_size);

  parallel_for(batch_size, [&](int chain) {
    RngStream rng = RngStream::derive(cfg.seed, static_cast<std::uint64_t>(chain));
    SpectralField state = SpectralField::from_pixel(
        s.op(), cfg.shape, rng.gauss_matrix(cfg.shape.rows(), cfg.shape.cols()));
    Eigen::MatrixXd energies(n_rec, n_bands);
    int rec = 0;
    auto record = [&](int step, const SpectralField& st) {
      energies.row(rec) = bands.energies(st).transpose();
      if (chain < filmstrip_chains)
        strips[chain].frames.push_back(TrajectoryFrame{step, st, bands.energies(st),
                                                       Eigen::VectorXd()});
      ++rec;
    };
    record(steps[0], state);
    for (int i = cfg.n_steps; i >= 1; --i) {
      state = reverse_step_score(cfg, state, i, rng);
      if (!state.spectral().allFinite())
        throw std::runtime_error("sample: non-finite state at step " + std::to_string(i));
      if ((i - 1) % stride == 0 || i - 1 == 0) record(i - 1, state);
    }
    terminal[chain] = state;
    chain_energy[chain] = std::move(energies);
  });

  for (int c = 0; c < batch_size; ++c) energy_acc += chain_energy[c];
  energy_acc /= static_cast<double>(batch_size);

  SampleRun run;
  run.terminal = std::move(terminal);
  run.recorded_steps = steps;
  run.band_energy_mean = std::move(energy_acc);
  run.signal_retention.resize(n_rec, n_bands);
  for (int r = 0; r < n_rec; ++r) {
    if (steps[r] == 0)
      run.signal_retention.row(r).setOnes();
    else
      run.signal_retention.row(r) =
          bands.average(s.diag_abar(steps[r], cfg.shape), signal_weights).transpose();
  }
  for (auto& strip : strips) strip.direction = Trajectory::Direction::reverse;
  run.trajectories = std::move(strips);
  return run;
}

Trajectory sample_chain(const SamplerConfig& cfg, std::uint64_t chain_index, int stride,
                        int n_bands) {
  validate(cfg);
  const DiffusionSchedule& s = cfg.model->schedule();
  BandPartition bands(*s.op(), cfg.shape, n_bands);
  RngStream rng = RngStream::derive(cfg.seed, chain_index);
  SpectralField state = SpectralField::from_pixel(
      s.op(), cfg.shape, rng.gauss_matrix(cfg.shape.rows(), cfg.shape.cols()));
  Trajectory traj;
  traj.direction = Trajectory::Direction::reverse;
  traj.frames.push_back(
      TrajectoryFrame{cfg.n_steps, state, bands.energies(state), Eigen::VectorXd()});
  for (int i = cfg.n_steps; i >= 1; --i) {
    state = reverse_step_score(cfg, state, i, rng);
    if ((i - 1) % stride == 0 || i - 1 == 0)
      traj.frames.push_back(
          TrajectoryFrame{i - 1, state, bands.energies(state), Eigen::VectorXd()});
  }
  return traj;
}

ContractReport discretization_contract_check(const ScoreModel& model, FieldShape shape,
                                             RngStream& rng, int n_probes) {
  const DiffusionSchedule& s = model.schedule();
  ContractReport report;
  report.abar_terminal_max = s.abar_terminal_max(shape);

  SamplerConfig ours{s.n_steps(), shape,
                     std::shared_ptr<const ScoreModel>(&model, [](const ScoreModel*) {}),
                     FinalStepNoise::noise, false, 0};
  SamplerConfig literal = ours;
  literal.literal_paper_indexing = true;

  for (int p = 0; p < n_probes; ++p) {
    int i = rng.uniform_int(1, s.n_steps());
    SpectralField x = SpectralField::from_pixel(
        s.op(), shape, rng.gauss_matrix(shape.rows(), shape.cols()));
    Eigen::MatrixXd z = rng.gauss_matrix(shape.rows(), shape.cols());

    // Forward template: x_i = x_{i-1} + f(x_{i-1}) + G z with f = -H and
    // G = C^(1/2), assembled from the public pieces.
    SpectralField direct = markov_step_blur_with(s, x, i, z);
    Eigen::ArrayXXd b = s.diag_b(i, shape);
    Eigen::MatrixXd colored =
        s.op()->to_pixel((s.op()->to_spectral(z, shape).array() * b.sqrt()).matrix(),
                         shape);
    Eigen::MatrixXd templ = x.pixel() - high_pass(s, x, i - 1).pixel() + colored;
    report.max_forward_deviation = std::max(
        report.max_forward_deviation, (direct.pixel() - templ).cwiseAbs().maxCoeff());

    // Reverse template: x_{i-1} = x_i - f + G G^T s + G z.
    SpectralField stepped = reverse_step_score_with(ours, x, i, z, true);
    Eigen::MatrixXd score_pix = model.predict_score(x, i).pixel();
    Eigen::MatrixXd ggt_s = s.op()->to_pixel(
        (s.op()->to_spectral(score_pix, shape).array() * b).matrix(), shape);
    Eigen::MatrixXd rtempl =
        x.pixel() + high_pass(s, x, i - 1).pixel() + ggt_s + colored;
    report.max_reverse_deviation = std::max(
        report.max_reverse_deviation, (stepped.pixel() - rtempl).cwiseAbs().maxCoeff());

    if (i < s.n_steps()) {
      SpectralField lit = reverse_step_score_with(literal, x, i, z, true);
      report.max_literal_gap = std::max(
          report.max_literal_gap, (stepped.pixel() - lit.pixel()).cwiseAbs().maxCoeff());
    }
  }
  return report;
}

}  // namespace c2f
