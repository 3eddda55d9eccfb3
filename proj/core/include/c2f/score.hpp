#pragma once

#include "c2f/forward.hpp"
#include "c2f/rng.hpp"
#include "c2f/schedule.hpp"
#include "c2f/spectral.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace c2f {

// Per-step weighting lambda(i); an empty function means the constant 1.
using LambdaWeight = std::function<double(int)>;

// Diagonal spectral rescaling between the eps parameterization and the score:
//   score = -U (I - Abar_i)^(-1/2) U^T eps-hat
// (exponent -1 instead when the schedule's paper_exponent flag is set).
// The two maps are exact inverses of each other.
SpectralField eps_to_score(const DiffusionSchedule& s, const SpectralField& eps_hat, int i);
SpectralField score_to_eps(const DiffusionSchedule& s, const SpectralField& score, int i);

// The diagonal of the conversion above: (I - Abar_i)^(-1/2), or ^(-1) in
// paper-exponent mode.
Eigen::ArrayXXd score_conversion_weight(const DiffusionSchedule& s, int i,
                                        FieldShape shape);

// Interface for eps/score predictors. Implementations provide predict_eps;
// predict_score is owned by the interface and always applies the conversion
// above, so the two parameterizations can never drift apart.
class ScoreModel {
 public:
  explicit ScoreModel(DiffusionSchedule schedule);
  virtual ~ScoreModel() = default;

  const DiffusionSchedule& schedule() const { return schedule_; }

  virtual SpectralField predict_eps(const SpectralField& x, int i) const = 0;
  SpectralField predict_score(const SpectralField& x, int i) const;

 protected:
  DiffusionSchedule schedule_;
};

// Wraps an arbitrary eps predictor; used for analytic scores and test stubs.
class CallableScoreModel final : public ScoreModel {
 public:
  using EpsFn = std::function<SpectralField(const SpectralField&, int)>;
  CallableScoreModel(DiffusionSchedule schedule, EpsFn eps_fn);
  SpectralField predict_eps(const SpectralField& x, int i) const override;

 private:
  EpsFn eps_fn_;
};

// Exact score of the M-component Gaussian mixture q_i obtained by diffusing an
// empirical dataset: component means U Abar^(1/2) U^T x0_m, shared covariance
// U (I - Abar) U^T. All algebra runs in the eigenbasis where covariances are
// diagonal; responsibilities go through log-sum-exp.
class MixtureScoreOracle final : public ScoreModel {
 public:
  MixtureScoreOracle(DiffusionSchedule schedule, std::vector<SpectralField> dataset);

  const std::vector<SpectralField>& dataset() const { return dataset_; }
  const FieldShape& shape() const { return shape_; }

  SpectralField score(const SpectralField& x, int i) const;
  double log_density(const SpectralField& x, int i) const;

  SpectralField predict_eps(const SpectralField& x, int i) const override;

 private:
  std::vector<SpectralField> dataset_;
  std::vector<Eigen::ArrayXXd> spectral_points_;
  FieldShape shape_;
};

// Analytic score model for Gaussian data x0 ~ N(mean, scale^2 W^(2 shape_power)),
// whose spectral covariance is diagonal; exact for the true Gaussian rather
// than an empirical point set.
std::shared_ptr<CallableScoreModel> make_gaussian_score_model(
    const DiffusionSchedule& schedule, const SpectralField& mean, double scale,
    double shape_power = 0.0);

// Per-timestep affine predictor on spectral coefficients, diagonal per
// frequency: eps-hat = gain_i .* x-bar + bias_i. The DSM-optimal predictor for
// Gaussian data with diagonal spectral covariance lies in this family.
class LinearScoreModel final : public ScoreModel {
 public:
  LinearScoreModel(DiffusionSchedule schedule, FieldShape shape);

  const FieldShape& shape() const { return shape_; }
  Eigen::ArrayXXd& gain(int i);
  Eigen::ArrayXXd& bias(int i);
  const Eigen::ArrayXXd& gain(int i) const;
  const Eigen::ArrayXXd& bias(int i) const;

  SpectralField predict_eps(const SpectralField& x, int i) const override;

 private:
  int check(int i) const;
  FieldShape shape_;
  std::vector<Eigen::ArrayXXd> gains_;
  std::vector<Eigen::ArrayXXd> biases_;
};

// Per-timestep, per-frequency least squares of eps on x-bar over fresh
// marginal samples of the dataset. Falls back to a fixed 1e-6 ridge when the
// 2x2 normal equations are degenerate. Deterministic given the RNG state.
// Returns the mean squared training residual per timestep.
Eigen::VectorXd fit_linear(LinearScoreModel& model,
                           const std::vector<SpectralField>& dataset,
                           int samples_per_step, RngStream& rng);

struct MlpConfig {
  int hidden = 64;
  int time_embed = 8;  // even; sin/cos pairs of geometric frequencies
};

// Small fully connected eps predictor over flattened spectral coefficients
// with a sinusoidal embedding of i/N appended to the input. Parameters live in
// one flat vector so finite-difference checks can probe them directly.
class MlpScoreModel final : public ScoreModel {
 public:
  MlpScoreModel(DiffusionSchedule schedule, FieldShape shape, MlpConfig config,
                RngStream& init_rng);

  const FieldShape& shape() const { return shape_; }
  const MlpConfig& config() const { return config_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  int param_count() const { return static_cast<int>(params_.size()); }

  SpectralField predict_eps(const SpectralField& x, int i) const override;

  // Mean of lambda(i) |eps_hat - eps|^2 over the batch and its gradient with
  // respect to params(), by backpropagation.
  double loss_and_grad(std::span<const ForwardSample> batch, const LambdaWeight& lambda,
                       Eigen::VectorXd& grad) const;

  Eigen::VectorXd time_embedding(int i) const;

 private:
  FieldShape shape_;
  MlpConfig config_;
  int in_dim_, out_dim_;
  Eigen::VectorXd params_;
};

struct MlpTrainConfig {
  int steps = 4000;
  int batch = 64;
  double lr = 1e-3;
  double lr_final = 0.0;  // > 0 enables cosine decay from lr down to lr_final
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int log_every = 50;
};

struct TrainLogEntry {
  int step = 0;
  double loss = 0.0;
  double loss_moving_avg = 0.0;
};

// Adam on loss_eps_simple over fresh marginal samples of the dataset. Performs
// a finite-difference spot check of the gradient at initialization and aborts
// on non-finite loss.
std::vector<TrainLogEntry> train_mlp(MlpScoreModel& model,
                                     const std::vector<SpectralField>& dataset,
                                     const MlpTrainConfig& cfg, RngStream& rng);

// Denoising score matching objective: mean lambda(i) |s(x_i,i) - target|^2,
// target = -U (I - Abar)^(-1/2) U^T eps (exponent tracks paper_exponent).
double loss_dsm(const ScoreModel& model, std::span<const ForwardSample> batch,
                const LambdaWeight& lambda = {});

// Same objective written in the eps parameterization, weight inside the norm.
double loss_eps_weighted(const ScoreModel& model, std::span<const ForwardSample> batch,
                         const LambdaWeight& lambda = {});

// Unweighted eps regression, the practical training loss.
double loss_eps_simple(const ScoreModel& model, std::span<const ForwardSample> batch,
                       const LambdaWeight& lambda = {});

}  // namespace c2f
