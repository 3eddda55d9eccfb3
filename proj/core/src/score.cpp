#include "c2f/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace c2f {

Eigen::ArrayXXd score_conversion_weight(const DiffusionSchedule& s, int i,
                                        FieldShape shape) {
  Eigen::ArrayXXd one_minus = 1.0 - s.diag_abar(i, shape);
  return s.paper_exponent() ? one_minus.inverse().eval() : one_minus.rsqrt().eval();
}

namespace {

double lambda_at(const LambdaWeight& lambda, int i) { return lambda ? lambda(i) : 1.0; }

const SpectralField& require_eps(const ForwardSample& sample) {
  if (!sample.eps)
    throw std::invalid_argument("loss: forward sample lacks the stored eps draw");
  return *sample.eps;
}

}  // namespace

SpectralField eps_to_score(const DiffusionSchedule& s, const SpectralField& eps_hat, int i) {
  Eigen::ArrayXXd w = score_conversion_weight(s, i, eps_hat.shape());
  return SpectralField::from_spectral(eps_hat.basis(), eps_hat.shape(),
                                      (-(eps_hat.spectral().array()) * w).matrix());
}

SpectralField score_to_eps(const DiffusionSchedule& s, const SpectralField& score, int i) {
  Eigen::ArrayXXd w = score_conversion_weight(s, i, score.shape());
  return SpectralField::from_spectral(score.basis(), score.shape(),
                                      (-(score.spectral().array()) / w).matrix());
}

ScoreModel::ScoreModel(DiffusionSchedule schedule) : schedule_(std::move(schedule)) {}

SpectralField ScoreModel::predict_score(const SpectralField& x, int i) const {
  return eps_to_score(schedule_, predict_eps(x, i), i);
}

CallableScoreModel::CallableScoreModel(DiffusionSchedule schedule, EpsFn eps_fn)
    : ScoreModel(std::move(schedule)), eps_fn_(std::move(eps_fn)) {}

SpectralField CallableScoreModel::predict_eps(const SpectralField& x, int i) const {
  return eps_fn_(x, i);
}

MixtureScoreOracle::MixtureScoreOracle(DiffusionSchedule schedule,
                                       std::vector<SpectralField> dataset)
    : ScoreModel(std::move(schedule)), dataset_(std::move(dataset)) {
  if (dataset_.empty())
    throw std::logic_error("MixtureScoreOracle: empty dataset");
  shape_ = dataset_.front().shape();
  spectral_points_.reserve(dataset_.size());
  for (const auto& p : dataset_) {
    if (!(p.shape() == shape_))
      throw std::invalid_argument("MixtureScoreOracle: mixed dataset shapes");
    spectral_points_.push_back(p.spectral().array());
  }
}

SpectralField MixtureScoreOracle::score(const SpectralField& x, int i) const {
  Eigen::ArrayXXd abar = schedule_.diag_abar(i, shape_);
  Eigen::ArrayXXd var = 1.0 - abar;
  Eigen::ArrayXXd root = abar.sqrt();
  const Eigen::ArrayXXd& xs = x.spectral().array();

  // Flat loops: this sits on the sampler's per-step hot path.
  const int count = static_cast<int>(xs.size());
  const int m_count = static_cast<int>(spectral_points_.size());
  const double* xp = xs.data();
  const double* vp = var.data();
  const double* rp = root.data();

  thread_local std::vector<double> logw;
  logw.resize(m_count);
  double top = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < m_count; ++m) {
    const double* pm = spectral_points_[m].data();
    double quad = 0.0;
    for (int k = 0; k < count; ++k) {
      double d = xp[k] - rp[k] * pm[k];
      quad += d * d / vp[k];
    }
    logw[m] = -0.5 * quad;
    top = std::max(top, logw[m]);
  }
  double norm = 0.0;
  for (int m = 0; m < m_count; ++m) {
    logw[m] = std::exp(logw[m] - top);
    norm += logw[m];
  }

  Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(xs.rows(), xs.cols());
  double* op = out.data();
  for (int m = 0; m < m_count; ++m) {
    double w = logw[m] / norm;
    const double* pm = spectral_points_[m].data();
    for (int k = 0; k < count; ++k) op[k] += w * (rp[k] * pm[k] - xp[k]);
  }
  for (int k = 0; k < count; ++k) op[k] /= vp[k];
  return SpectralField::from_spectral(x.basis(), shape_, out.matrix());
}

double MixtureScoreOracle::log_density(const SpectralField& x, int i) const {
  Eigen::ArrayXXd abar = schedule_.diag_abar(i, shape_);
  Eigen::ArrayXXd var = 1.0 - abar;
  Eigen::ArrayXXd root = abar.sqrt();
  const Eigen::ArrayXXd xs = x.spectral().array();

  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> quad(spectral_points_.size());
  for (std::size_t m = 0; m < spectral_points_.size(); ++m) {
    Eigen::ArrayXXd diff = xs - root * spectral_points_[m];
    quad[m] = -0.5 * (diff.square() / var).sum();
    top = std::max(top, quad[m]);
  }
  double sum = 0.0;
  for (double q : quad) sum += std::exp(q - top);
  double log_norm = -0.5 * (2.0 * std::numbers::pi * var).log().sum();
  return top + std::log(sum) - std::log(static_cast<double>(spectral_points_.size())) +
         log_norm;
}

SpectralField MixtureScoreOracle::predict_eps(const SpectralField& x, int i) const {
  return score_to_eps(schedule_, score(x, i), i);
}

std::shared_ptr<CallableScoreModel> make_gaussian_score_model(
    const DiffusionSchedule& schedule, const SpectralField& mean, double scale,
    double shape_power) {
  FieldShape shape = mean.shape();
  Eigen::ArrayXXd data_var =
      scale * scale * schedule.op()->freq_eigenvalues(shape).pow(2.0 * shape_power);
  Eigen::ArrayXXd mean_spec = mean.spectral().array();
  DiffusionSchedule sched = schedule;
  auto eps_fn = [sched, shape, data_var, mean_spec](const SpectralField& x,
                                                    int i) -> SpectralField {
    Eigen::ArrayXXd abar = sched.diag_abar(i, shape);
    Eigen::ArrayXXd var_i = abar * data_var + (1.0 - abar);
    Eigen::ArrayXXd score =
        (abar.sqrt() * mean_spec - x.spectral().array()) / var_i;
    SpectralField s = SpectralField::from_spectral(x.basis(), shape, score.matrix());
    return score_to_eps(sched, s, i);
  };
  return std::make_shared<CallableScoreModel>(schedule, std::move(eps_fn));
}

LinearScoreModel::LinearScoreModel(DiffusionSchedule schedule, FieldShape shape)
    : ScoreModel(std::move(schedule)), shape_(shape) {
  gains_.assign(schedule_.n_steps(),
                Eigen::ArrayXXd::Zero(shape.rows(), shape.cols()));
  biases_.assign(schedule_.n_steps(),
                 Eigen::ArrayXXd::Zero(shape.rows(), shape.cols()));
}

int LinearScoreModel::check(int i) const {
  if (i < 1 || i > schedule_.n_steps())
    throw std::invalid_argument("LinearScoreModel: step index out of range");
  return i - 1;
}

Eigen::ArrayXXd& LinearScoreModel::gain(int i) { return gains_[check(i)]; }
Eigen::ArrayXXd& LinearScoreModel::bias(int i) { return biases_[check(i)]; }
const Eigen::ArrayXXd& LinearScoreModel::gain(int i) const { return gains_[check(i)]; }
const Eigen::ArrayXXd& LinearScoreModel::bias(int i) const { return biases_[check(i)]; }

SpectralField LinearScoreModel::predict_eps(const SpectralField& x, int i) const {
  if (!(x.shape() == shape_))
    throw std::invalid_argument("LinearScoreModel: field shape mismatch");
  int k = check(i);
  return SpectralField::from_spectral(
      x.basis(), shape_, (gains_[k] * x.spectral().array() + biases_[k]).matrix());
}

Eigen::VectorXd fit_linear(LinearScoreModel& model,
                           const std::vector<SpectralField>& dataset,
                           int samples_per_step, RngStream& rng) {
  if (samples_per_step < 2)
    throw std::invalid_argument("fit_linear: need at least 2 samples per step");
  if (dataset.empty()) throw std::invalid_argument("fit_linear: empty dataset");
  const DiffusionSchedule& s = model.schedule();
  const FieldShape shape = model.shape();
  const int n = samples_per_step;
  const int last = static_cast<int>(dataset.size()) - 1;

  Eigen::VectorXd residuals(s.n_steps());
  Eigen::ArrayXXd sxx(shape.rows(), shape.cols());
  Eigen::ArrayXXd sx(shape.rows(), shape.cols());
  Eigen::ArrayXXd sxy(shape.rows(), shape.cols());
  Eigen::ArrayXXd sy(shape.rows(), shape.cols());
  Eigen::ArrayXXd syy(shape.rows(), shape.cols());
  std::vector<std::pair<Eigen::ArrayXXd, Eigen::ArrayXXd>> draws(n);

  for (int i = 1; i <= s.n_steps(); ++i) {
    sxx.setZero();
    sx.setZero();
    sxy.setZero();
    sy.setZero();
    syy.setZero();
    for (int t = 0; t < n; ++t) {
      const SpectralField& x0 = dataset[rng.uniform_int(0, last)];
      ForwardSample fs = marginal_sample(s, x0, i, rng);
      Eigen::ArrayXXd x = fs.state.spectral().array();
      Eigen::ArrayXXd y = fs.eps->spectral().array();
      draws[t] = {x, y};
      sxx += x.square();
      sx += x;
      sxy += x * y;
      sy += y;
      syy += y.square();
    }
    // Per-coefficient 2x2 normal equations [sxx sx; sx n][m b]' = [sxy sy]'.
    Eigen::ArrayXXd det = sxx * n - sx.square();
    Eigen::ArrayXXd scale = (sxx * n).max(1.0);
    Eigen::ArrayXXd degenerate = (det.abs() <= 1e-12 * scale).cast<double>();
    Eigen::ArrayXXd sxx_r = sxx + degenerate * 1e-6;
    Eigen::ArrayXXd n_r = degenerate * 1e-6 + static_cast<double>(n);
    Eigen::ArrayXXd det_r = sxx_r * n_r - sx.square();
    model.gain(i) = (sxy * n_r - sx * sy) / det_r;
    model.bias(i) = (sxx_r * sy - sx * sxy) / det_r;

    double res = 0.0;
    for (int t = 0; t < n; ++t) {
      Eigen::ArrayXXd pred = model.gain(i) * draws[t].first + model.bias(i);
      res += (pred - draws[t].second).square().sum();
    }
    residuals[i - 1] = res / n;
  }
  return residuals;
}

namespace {

// Parameter layout: W1 (hidden x in), b1, W2 (out x hidden), b2.
struct MlpView {
  Eigen::Map<const Eigen::MatrixXd> w1, w2;
  Eigen::Map<const Eigen::VectorXd> b1, b2;
};

MlpView map_params(const Eigen::VectorXd& p, int in, int hid, int out) {
  const double* base = p.data();
  return MlpView{{base, hid, in},
                 {base + hid * in + hid, out, hid},
                 {base + hid * in, hid},
                 {base + hid * in + hid + out * hid, out}};
}

}  // namespace

MlpScoreModel::MlpScoreModel(DiffusionSchedule schedule, FieldShape shape,
                             MlpConfig config, RngStream& init_rng)
    : ScoreModel(std::move(schedule)), shape_(shape), config_(config) {
  if (config_.time_embed < 2 || config_.time_embed % 2 != 0)
    throw std::invalid_argument("MlpScoreModel: time_embed must be even and >= 2");
  if (config_.hidden < 1) throw std::invalid_argument("MlpScoreModel: hidden must be >= 1");
  in_dim_ = shape.size() + config_.time_embed;
  out_dim_ = shape.size();
  int count = config_.hidden * in_dim_ + config_.hidden +
              out_dim_ * config_.hidden + out_dim_;
  params_.resize(count);
  // Xavier-uniform per layer; the output layer starts near zero.
  double lim1 = std::sqrt(6.0 / (in_dim_ + config_.hidden));
  double lim2 = std::sqrt(6.0 / (config_.hidden + out_dim_)) * 0.1;
  int w1_end = config_.hidden * in_dim_;
  int b1_end = w1_end + config_.hidden;
  int w2_end = b1_end + out_dim_ * config_.hidden;
  for (int k = 0; k < w1_end; ++k) params_[k] = lim1 * (2.0 * init_rng.uniform() - 1.0);
  for (int k = w1_end; k < b1_end; ++k) params_[k] = 0.0;
  for (int k = b1_end; k < w2_end; ++k)
    params_[k] = lim2 * (2.0 * init_rng.uniform() - 1.0);
  for (int k = w2_end; k < count; ++k) params_[k] = 0.0;
}

Eigen::VectorXd MlpScoreModel::time_embedding(int i) const {
  double t = static_cast<double>(i) / schedule_.n_steps();
  Eigen::VectorXd emb(config_.time_embed);
  for (int j = 0; j < config_.time_embed / 2; ++j) {
    double freq = std::numbers::pi * std::pow(2.0, j);
    emb[2 * j] = std::sin(freq * t);
    emb[2 * j + 1] = std::cos(freq * t);
  }
  return emb;
}

SpectralField MlpScoreModel::predict_eps(const SpectralField& x, int i) const {
  if (!(x.shape() == shape_))
    throw std::invalid_argument("MlpScoreModel: field shape mismatch");
  MlpView v = map_params(params_, in_dim_, config_.hidden, out_dim_);
  Eigen::VectorXd z(in_dim_);
  z << x.spectral_vec(), time_embedding(i);
  Eigen::VectorXd h = (v.w1 * z + v.b1).array().tanh();
  Eigen::VectorXd y = v.w2 * h + v.b2;
  Eigen::MatrixXd out =
      Eigen::Map<const Eigen::MatrixXd>(y.data(), shape_.rows(), shape_.cols());
  return SpectralField::from_spectral(x.basis(), shape_, std::move(out));
}

double MlpScoreModel::loss_and_grad(std::span<const ForwardSample> batch,
                                    const LambdaWeight& lambda,
                                    Eigen::VectorXd& grad) const {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  MlpView v = map_params(params_, in_dim_, config_.hidden, out_dim_);
  grad.setZero(params_.size());
  double* gbase = grad.data();
  Eigen::Map<Eigen::MatrixXd> gw1(gbase, config_.hidden, in_dim_);
  Eigen::Map<Eigen::VectorXd> gb1(gbase + config_.hidden * in_dim_, config_.hidden);
  Eigen::Map<Eigen::MatrixXd> gw2(gbase + config_.hidden * in_dim_ + config_.hidden,
                                  out_dim_, config_.hidden);
  Eigen::Map<Eigen::VectorXd> gb2(
      gbase + config_.hidden * in_dim_ + config_.hidden + out_dim_ * config_.hidden,
      out_dim_);

  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const ForwardSample& sample : batch) {
    const SpectralField& eps = require_eps(sample);
    double lam = lambda_at(lambda, sample.step);
    Eigen::VectorXd z(in_dim_);
    z << sample.state.spectral_vec(), time_embedding(sample.step);
    Eigen::VectorXd h = (v.w1 * z + v.b1).array().tanh();
    Eigen::VectorXd y = v.w2 * h + v.b2;
    Eigen::VectorXd r = y - eps.spectral_vec();
    loss += lam * r.squaredNorm() * inv_b;

    Eigen::VectorXd dy = (2.0 * lam * inv_b) * r;
    gw2.noalias() += dy * h.transpose();
    gb2 += dy;
    Eigen::VectorXd dh = v.w2.transpose() * dy;
    Eigen::VectorXd dpre = dh.array() * (1.0 - h.array().square());
    gw1.noalias() += dpre * z.transpose();
    gb1 += dpre;
  }
  return loss;
}

std::vector<TrainLogEntry> train_mlp(MlpScoreModel& model,
                                     const std::vector<SpectralField>& dataset,
                                     const MlpTrainConfig& cfg, RngStream& rng) {
  if (cfg.steps < 0) throw std::invalid_argument("train_mlp: steps must be >= 0");
  if (cfg.batch < 1) throw std::invalid_argument("train_mlp: batch must be >= 1");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("train_mlp: learning rate must be > 0");
  if (dataset.empty()) throw std::invalid_argument("train_mlp: empty dataset");

  const DiffusionSchedule& s = model.schedule();
  const int last = static_cast<int>(dataset.size()) - 1;
  auto draw_batch = [&](int count) {
    std::vector<ForwardSample> batch;
    batch.reserve(count);
    for (int k = 0; k < count; ++k) {
      int i = rng.uniform_int(1, s.n_steps());
      batch.push_back(marginal_sample(s, dataset[rng.uniform_int(0, last)], i, rng));
    }
    return batch;
  };

  // Spot-check the analytic gradient against central differences before any
  // update; a broken gradient should fail loudly, not train silently.
  {
    auto batch = draw_batch(std::min(cfg.batch, 8));
    Eigen::VectorXd grad;
    model.loss_and_grad(batch, {}, grad);
    RngStream pick = RngStream::derive(0x9d5c, 1);
    for (int probe = 0; probe < 8; ++probe) {
      int k = pick.uniform_int(0, model.param_count() - 1);
      double h = 1e-5;
      double saved = model.params()[k];
      Eigen::VectorXd dummy;
      model.params()[k] = saved + h;
      double lp = model.loss_and_grad(batch, {}, dummy);
      model.params()[k] = saved - h;
      double lm = model.loss_and_grad(batch, {}, dummy);
      model.params()[k] = saved;
      double numeric = (lp - lm) / (2.0 * h);
      double denom = std::max({std::abs(numeric), std::abs(grad[k]), 1e-6});
      if (std::abs(numeric - grad[k]) / denom > 1e-3)
        throw std::runtime_error("train_mlp: gradient check failed at initialization");
    }
  }

  std::vector<TrainLogEntry> log;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(model.param_count());
  Eigen::VectorXd vv = Eigen::VectorXd::Zero(model.param_count());
  Eigen::VectorXd grad(model.param_count());
  double moving = 0.0;
  bool moving_init = false;

  for (int step = 1; step <= cfg.steps; ++step) {
    auto batch = draw_batch(cfg.batch);
    double loss = model.loss_and_grad(batch, {}, grad);
    if (!std::isfinite(loss))
      throw std::runtime_error("train_mlp: non-finite loss at step " + std::to_string(step));

    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    vv = cfg.adam_beta2 * vv + (1.0 - cfg.adam_beta2) * grad.cwiseAbs2();
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
    double lr = cfg.lr;
    if (cfg.lr_final > 0.0 && cfg.steps > 1) {
      double t = static_cast<double>(step - 1) / (cfg.steps - 1);
      lr = cfg.lr_final +
           0.5 * (cfg.lr - cfg.lr_final) * (1.0 + std::cos(std::numbers::pi * t));
    }
    model.params().array() -=
        lr * (m.array() / bc1) / ((vv.array() / bc2).sqrt() + cfg.adam_eps);

    moving = moving_init ? 0.98 * moving + 0.02 * loss : loss;
    moving_init = true;
    if (step % cfg.log_every == 0 || step == cfg.steps)
      log.push_back({step, loss, moving});
  }
  return log;
}

namespace {

double batch_loss(std::span<const ForwardSample> batch, const LambdaWeight& lambda,
                  const std::function<double(const ForwardSample&, double)>& term) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  double total = 0.0;
  for (const ForwardSample& sample : batch)
    total += term(sample, lambda_at(lambda, sample.step));
  return total / static_cast<double>(batch.size());
}

}  // namespace

double loss_dsm(const ScoreModel& model, std::span<const ForwardSample> batch,
                const LambdaWeight& lambda) {
  const DiffusionSchedule& s = model.schedule();
  return batch_loss(batch, lambda, [&](const ForwardSample& sample, double lam) {
    const SpectralField& eps = require_eps(sample);
    Eigen::ArrayXXd w = score_conversion_weight(s, sample.step, sample.state.shape());
    Eigen::ArrayXXd target = -(eps.spectral().array()) * w;
    Eigen::ArrayXXd predicted =
        model.predict_score(sample.state, sample.step).spectral().array();
    return lam * (predicted - target).square().sum();
  });
}

double loss_eps_weighted(const ScoreModel& model, std::span<const ForwardSample> batch,
                         const LambdaWeight& lambda) {
  const DiffusionSchedule& s = model.schedule();
  return batch_loss(batch, lambda, [&](const ForwardSample& sample, double lam) {
    const SpectralField& eps = require_eps(sample);
    Eigen::ArrayXXd w = score_conversion_weight(s, sample.step, sample.state.shape());
    Eigen::ArrayXXd diff =
        model.predict_eps(sample.state, sample.step).spectral().array() -
        eps.spectral().array();
    return lam * (w * diff).square().sum();
  });
}

double loss_eps_simple(const ScoreModel& model, std::span<const ForwardSample> batch,
                       const LambdaWeight& lambda) {
  return batch_loss(batch, lambda, [&](const ForwardSample& sample, double lam) {
    const SpectralField& eps = require_eps(sample);
    Eigen::ArrayXXd diff =
        model.predict_eps(sample.state, sample.step).spectral().array() -
        eps.spectral().array();
    return lam * diff.square().sum();
  });
}

}  // namespace c2f
