#include "c2f/commands.hpp"

#include "c2f/checkpoint.hpp"
#include "c2f/dataset.hpp"
#include "c2f/evalx.hpp"
#include "c2f/forward.hpp"
#include "c2f/image_io.hpp"
#include "c2f/sampler.hpp"
#include "c2f/schedule.hpp"
#include "c2f/score.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <vector>

namespace c2f {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kForwardStream = 0xf02a4dULL;
constexpr std::uint64_t kTrainStream = 0x7a41ULL;
constexpr std::uint64_t kInitStream = 0x1417ULL;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Rank-1 fields render as a single row; rank-2 as the image itself.
Eigen::MatrixXd render(const SpectralField& f, bool clamp) {
  Eigen::MatrixXd img = f.shape().rank == 1
                            ? Eigen::MatrixXd(f.pixel().transpose())
                            : f.pixel();
  if (clamp) img = img.cwiseMax(-1.0).cwiseMin(1.0);
  return img;
}

Eigen::ArrayXXd quantiles_of(const Eigen::ArrayXXd& values,
                             const std::vector<double>& qs) {
  std::vector<double> flat(values.data(), values.data() + values.size());
  std::sort(flat.begin(), flat.end());
  Eigen::ArrayXXd out(1, static_cast<Eigen::Index>(qs.size()));
  for (std::size_t k = 0; k < qs.size(); ++k) {
    double pos = qs[k] * (flat.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, flat.size() - 1);
    double w = pos - lo;
    out(0, static_cast<Eigen::Index>(k)) = (1 - w) * flat[lo] + w * flat[hi];
  }
  return out;
}

std::shared_ptr<const ScoreModel> resolve_model(const ExperimentConfig& cfg,
                                                const DiffusionSchedule& schedule,
                                                const std::vector<SpectralField>& dataset,
                                                const std::string& checkpoint_path) {
  if (cfg.model == "oracle")
    return std::make_shared<MixtureScoreOracle>(schedule, dataset);
  std::string path = checkpoint_path.empty() ? join(cfg.out_dir, "checkpoint.txt")
                                             : checkpoint_path;
  return load_checkpoint(path, cfg, schedule);
}

}  // namespace

int run_schedule(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  DiffusionSchedule s = cfg.make_schedule();
  const FieldShape shape = cfg.shape();

  std::ostringstream sched;
  sched << "i,f,beta,alpha_bar\n";
  for (int i = 1; i <= cfg.n_steps; ++i)
    sched << i << "," << format_double(s.blur().f(i)) << ","
          << format_double(s.noise().beta(i)) << ","
          << format_double(s.noise().alpha_bar(i)) << "\n";
  atomic_write_text(join(out_dir, "schedule.csv"), sched.str());

  const std::vector<double> qs = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::ostringstream quant;
  quant << "i,q00,q25,q50,q75,q100\n";
  for (int i = 1; i <= cfg.n_steps; ++i) {
    Eigen::ArrayXXd row = quantiles_of(s.diag_abar(i, shape), qs);
    quant << i;
    for (Eigen::Index k = 0; k < row.size(); ++k)
      quant << "," << format_double(row(0, k));
    quant << "\n";
  }
  atomic_write_text(join(out_dir, "abar_quantiles.csv"), quant.str());
  return 0;
}

int run_forward(const ExperimentConfig& cfg, const std::string& image_path,
                const std::string& out_dir) {
  cfg.validate();
  if (cfg.rank != 2)
    throw std::invalid_argument("forward: trajectory rendering requires rank = 2");
  ensure_dir(out_dir);
  Eigen::MatrixXd img = read_image(image_path);
  if (img.rows() != cfg.n || img.cols() != cfg.n) {
    std::ostringstream msg;
    msg << "forward: image shape " << img.rows() << "x" << img.cols()
        << " does not match configured " << cfg.n << "x" << cfg.n;
    throw std::invalid_argument(msg.str());
  }

  auto op = cfg.make_operator();
  DiffusionSchedule s = cfg.make_schedule(op);
  SpectralField x0 = SpectralField::from_pixel(op, cfg.shape(), std::move(img));
  RngStream rng = RngStream::derive(cfg.seed, kForwardStream);
  Trajectory traj = forward_trajectory(s, x0, rng, cfg.sample_stride, cfg.eval_bands);

  std::vector<Eigen::MatrixXd> frames;
  frames.reserve(traj.frames.size());
  for (const auto& frame : traj.frames) frames.push_back(render(frame.state, true));
  write_pgm(join(out_dir, "forward_strip.pgm"), tile_grid(frames, static_cast<int>(frames.size())));

  std::ostringstream bands;
  bands << "step";
  for (int b = 0; b < cfg.eval_bands; ++b) bands << ",band" << b << "_energy";
  for (int b = 0; b < cfg.eval_bands; ++b) bands << ",band" << b << "_retention";
  bands << "\n";
  for (const auto& frame : traj.frames) {
    bands << frame.step;
    for (int b = 0; b < cfg.eval_bands; ++b)
      bands << "," << format_double(frame.band_energy[b]);
    for (int b = 0; b < cfg.eval_bands; ++b)
      bands << "," << format_double(frame.signal_retention[b]);
    bands << "\n";
  }
  atomic_write_text(join(out_dir, "forward_bands.csv"), bands.str());
  return 0;
}

int run_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (cfg.model == "oracle")
    throw std::invalid_argument("train: the oracle needs no training");
  ensure_dir(out_dir);
  auto op = cfg.make_operator();
  DiffusionSchedule s = cfg.make_schedule(op);
  std::vector<SpectralField> dataset = make_dataset(cfg, op);
  RngStream rng = RngStream::derive(cfg.seed, kTrainStream);

  std::ostringstream loss;
  if (cfg.model == "linear") {
    LinearScoreModel model(s, cfg.shape());
    Eigen::VectorXd residuals =
        fit_linear(model, dataset, cfg.linear_samples_per_step, rng);
    loss << "i,mse\n";
    for (int i = 1; i <= cfg.n_steps; ++i)
      loss << i << "," << format_double(residuals[i - 1]) << "\n";
    save_checkpoint(join(out_dir, "checkpoint.txt"), model, cfg);
  } else {
    RngStream init = RngStream::derive(cfg.seed, kInitStream);
    MlpScoreModel model(s, cfg.shape(), MlpConfig{cfg.mlp_hidden, cfg.mlp_time_embed},
                        init);
    MlpTrainConfig train_cfg;
    train_cfg.steps = cfg.mlp_steps;
    train_cfg.batch = cfg.mlp_batch;
    train_cfg.lr = cfg.mlp_lr;
    train_cfg.lr_final = cfg.mlp_lr_final;
    auto log = train_mlp(model, dataset, train_cfg, rng);
    loss << "step,loss,loss_moving_avg\n";
    for (const auto& entry : log)
      loss << entry.step << "," << format_double(entry.loss) << ","
           << format_double(entry.loss_moving_avg) << "\n";
    save_checkpoint(join(out_dir, "checkpoint.txt"), model, cfg);
  }
  atomic_write_text(join(out_dir, "loss.csv"), loss.str());
  return 0;
}

int run_sample(const ExperimentConfig& cfg, const std::string& checkpoint_path,
               const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  ensure_dir(join(out_dir, "samples"));
  auto op = cfg.make_operator();
  DiffusionSchedule s = cfg.make_schedule(op);
  std::vector<SpectralField> dataset = make_dataset(cfg, op);
  auto model = resolve_model(cfg, s, dataset, checkpoint_path);

  SamplerConfig sampler_cfg;
  sampler_cfg.n_steps = cfg.n_steps;
  sampler_cfg.shape = cfg.shape();
  sampler_cfg.model = model;
  sampler_cfg.final_noise = cfg.final_step_noise == "noise" ? FinalStepNoise::noise
                                                            : FinalStepNoise::suppress;
  sampler_cfg.literal_paper_indexing = cfg.literal_indexing;
  sampler_cfg.seed = cfg.seed;

  Eigen::ArrayXXd weights = dataset_spectral_moment(dataset);
  int strips_wanted = std::min(4, cfg.sample_batch);
  SampleRun run = sample(sampler_cfg, cfg.sample_batch, cfg.sample_stride, cfg.eval_bands,
                         strips_wanted, &weights);

  std::vector<Eigen::MatrixXd> tiles;
  tiles.reserve(run.terminal.size());
  for (const auto& f : run.terminal) tiles.push_back(render(f, cfg.clamp_output));
  int grid_cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(tiles.size()))));
  Eigen::MatrixXd grid = tile_grid(tiles, grid_cols);
  write_pgm(join(out_dir, "grid.pgm"), grid);
  write_png(join(out_dir, "grid.png"), grid);
  for (std::size_t k = 0; k < run.terminal.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "sample_%05zu.pgm", k);
    write_pgm(join(join(out_dir, "samples"), name), tiles[k]);
  }

  std::vector<Eigen::MatrixXd> strip_tiles;
  int frames_per_chain = 0;
  for (const auto& traj : run.trajectories) {
    frames_per_chain = static_cast<int>(traj.frames.size());
    for (const auto& frame : traj.frames)
      strip_tiles.push_back(render(frame.state, cfg.clamp_output));
  }
  if (!strip_tiles.empty())
    write_pgm(join(out_dir, "strips.pgm"), tile_grid(strip_tiles, frames_per_chain));

  std::ostringstream bands;
  bands << "step";
  for (int b = 0; b < cfg.eval_bands; ++b) bands << ",band" << b << "_energy";
  for (int b = 0; b < cfg.eval_bands; ++b) bands << ",band" << b << "_retention";
  bands << "\n";
  for (int r = 0; r < static_cast<int>(run.recorded_steps.size()); ++r) {
    bands << run.recorded_steps[r];
    for (int b = 0; b < cfg.eval_bands; ++b)
      bands << "," << format_double(run.band_energy_mean(r, b));
    for (int b = 0; b < cfg.eval_bands; ++b)
      bands << "," << format_double(run.signal_retention(r, b));
    bands << "\n";
  }
  atomic_write_text(join(out_dir, "reverse_bands.csv"), bands.str());

  if (cfg.dataset == "two-point") {
    const Eigen::VectorXd plus = dataset[0].pixel_vec();
    const Eigen::VectorXd minus = dataset[1].pixel_vec();
    double tol = 0.1 * plus.norm();
    int within = 0;
    std::ostringstream cl;
    cl << "sample,dist_plus,dist_minus,assigned,within_10pct\n";
    for (std::size_t k = 0; k < run.terminal.size(); ++k) {
      Eigen::VectorXd v = run.terminal[k].pixel_vec();
      double dp = (v - plus).norm(), dm = (v - minus).norm();
      int assigned = dp <= dm ? 1 : -1;
      bool in_tol = std::min(dp, dm) < tol;
      within += in_tol ? 1 : 0;
      cl << k << "," << format_double(dp) << "," << format_double(dm) << "," << assigned
         << "," << (in_tol ? 1 : 0) << "\n";
    }
    atomic_write_text(join(out_dir, "cluster.csv"), cl.str());
    std::ostringstream summary;
    summary << "within_10pct_rate\n"
            << format_double(static_cast<double>(within) / run.terminal.size()) << "\n";
    atomic_write_text(join(out_dir, "cluster_summary.csv"), summary.str());
  }
  return 0;
}

int run_eval(const ExperimentConfig& cfg, const std::string& samples_dir,
             const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  auto op = cfg.make_operator();
  const FieldShape shape = cfg.shape();

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(samples_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".png") names.push_back(entry.path().string());
  }
  std::sort(names.begin(), names.end());
  if (names.size() < 2)
    throw std::invalid_argument("eval: need at least 2 sample images in " + samples_dir);

  std::vector<SpectralField> samples;
  for (const std::string& name : names) {
    Eigen::MatrixXd img = read_image(name);
    if (shape.rank == 1 && img.rows() == 1 && img.cols() == cfg.n)
      img = img.transpose().eval();
    if (img.rows() != shape.rows() || img.cols() != shape.cols()) {
      std::ostringstream msg;
      msg << "eval: sample " << name << " has shape " << img.rows() << "x" << img.cols()
          << ", expected " << shape.rows() << "x" << shape.cols();
      throw std::invalid_argument(msg.str());
    }
    samples.push_back(SpectralField::from_pixel(op, shape, std::move(img)));
  }

  std::vector<SpectralField> refs = make_dataset(cfg, op);
  if (refs.size() < 2) throw std::invalid_argument("eval: need at least 2 reference points");

  const bool diagonal = shape.size() > 1024;
  auto collect = [&](const std::vector<SpectralField>& fields) {
    std::vector<Eigen::VectorXd> vecs;
    vecs.reserve(fields.size());
    for (const auto& f : fields)
      vecs.push_back(diagonal ? f.spectral_vec() : f.pixel_vec());
    return vecs;
  };
  GaussianFit sample_fit = diagonal ? fit_gaussian_diagonal(collect(samples))
                                    : fit_gaussian(collect(samples));
  GaussianFit ref_fit = diagonal ? fit_gaussian_diagonal(collect(refs))
                                 : fit_gaussian(collect(refs));

  double dist = frechet_distance(sample_fit, ref_fit);
  double mean_rel = (sample_fit.mean - ref_fit.mean).norm() /
                    std::max(ref_fit.mean.norm(), 1e-12);
  double cov_rel;
  if (diagonal)
    cov_rel = (sample_fit.var - ref_fit.var).norm() / std::max(ref_fit.var.norm(), 1e-12);
  else
    cov_rel = (sample_fit.cov - ref_fit.cov).norm() / std::max(ref_fit.cov.norm(), 1e-12);

  BandPartition bands(*op, shape, cfg.eval_bands);
  Eigen::VectorXd sample_bands = Eigen::VectorXd::Zero(cfg.eval_bands);
  for (const auto& f : samples) sample_bands += bands.energies(f);
  sample_bands /= static_cast<double>(samples.size());
  Eigen::VectorXd ref_bands = Eigen::VectorXd::Zero(cfg.eval_bands);
  for (const auto& f : refs) ref_bands += bands.energies(f);
  ref_bands /= static_cast<double>(refs.size());

  std::ostringstream out;
  out << "metric,value\n";
  out << "frechet," << format_double(dist) << "\n";
  out << "mean_rel_err," << format_double(mean_rel) << "\n";
  out << "cov_rel_err," << format_double(cov_rel) << "\n";
  out << "n_samples," << samples.size() << "\n";
  out << "n_references," << refs.size() << "\n";
  for (int b = 0; b < cfg.eval_bands; ++b)
    out << "sample_band" << b << "_energy," << format_double(sample_bands[b]) << "\n";
  for (int b = 0; b < cfg.eval_bands; ++b)
    out << "ref_band" << b << "_energy," << format_double(ref_bands[b]) << "\n";
  atomic_write_text(join(out_dir, "metrics.csv"), out.str());

  bool failed = false;
  if (cfg.eval_threshold_frechet >= 0.0 && dist > cfg.eval_threshold_frechet) failed = true;
  if (cfg.eval_threshold_cov_rel >= 0.0 && cov_rel > cfg.eval_threshold_cov_rel)
    failed = true;
  return failed ? 2 : 0;
}

int run_check(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  auto op = cfg.make_operator();
  DiffusionSchedule s = cfg.make_schedule(op);
  const FieldShape shape = cfg.shape();

  // Any model works here; the contract is an algebraic identity in its output.
  auto probe_model = std::make_shared<CallableScoreModel>(
      s, [](const SpectralField& x, int) {
        return SpectralField::from_spectral(x.basis(), x.shape(),
                                            (0.3 * x.spectral()).eval());
      });
  RngStream rng = RngStream::derive(cfg.seed, 0xc0de);
  ContractReport report = discretization_contract_check(*probe_model, shape, rng, 48);

  std::ostringstream out;
  out << "metric,value\n";
  out << "max_forward_deviation," << format_double(report.max_forward_deviation) << "\n";
  out << "max_reverse_deviation," << format_double(report.max_reverse_deviation) << "\n";
  out << "max_literal_gap," << format_double(report.max_literal_gap) << "\n";
  out << "abar_terminal_max," << format_double(report.abar_terminal_max) << "\n";
  out << "eigenvalue_min," << format_double(op->eigvals_1d().minCoeff()) << "\n";
  out << "kernel_support," << op->kernel().support() << "\n";
  atomic_write_text(join(out_dir, "check.csv"), out.str());

  std::cout << "forward template deviation: " << report.max_forward_deviation << "\n"
            << "reverse template deviation: " << report.max_reverse_deviation << "\n"
            << "literal i+1 indexing gap:   " << report.max_literal_gap << "\n"
            << "terminal |Abar_N|_max:      " << report.abar_terminal_max << "\n";

  bool ok = report.max_forward_deviation < 1e-9 && report.max_reverse_deviation < 1e-9;
  return ok ? 0 : 1;
}

}  // namespace c2f
