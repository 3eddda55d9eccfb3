#include "c2f/evalx.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace c2f {

namespace {

void check_sample_count(std::size_t count) {
  if (count < 2) throw std::invalid_argument("fit_gaussian: need at least 2 samples");
}

}  // namespace

GaussianFit fit_gaussian(const std::vector<Eigen::VectorXd>& samples) {
  check_sample_count(samples.size());
  const Eigen::Index dim = samples.front().size();
  GaussianFit fit;
  fit.count = static_cast<int>(samples.size());
  fit.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) {
    if (s.size() != dim) throw std::invalid_argument("fit_gaussian: ragged samples");
    fit.mean += s;
  }
  fit.mean /= static_cast<double>(samples.size());
  fit.cov = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& s : samples) {
    Eigen::VectorXd d = s - fit.mean;
    fit.cov.noalias() += d * d.transpose();
  }
  fit.cov /= static_cast<double>(samples.size() - 1);
  return fit;
}

GaussianFit fit_gaussian_diagonal(const std::vector<Eigen::VectorXd>& samples) {
  check_sample_count(samples.size());
  const Eigen::Index dim = samples.front().size();
  GaussianFit fit;
  fit.diagonal = true;
  fit.count = static_cast<int>(samples.size());
  fit.mean = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) {
    if (s.size() != dim) throw std::invalid_argument("fit_gaussian: ragged samples");
    fit.mean += s;
  }
  fit.mean /= static_cast<double>(samples.size());
  fit.var = Eigen::VectorXd::Zero(dim);
  for (const auto& s : samples) fit.var += (s - fit.mean).cwiseAbs2();
  fit.var /= static_cast<double>(samples.size() - 1);
  return fit;
}

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.mean.size() != b.mean.size())
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  if (a.diagonal != b.diagonal)
    throw std::invalid_argument("frechet_distance: mixed full/diagonal fits");

  double mean_term = (a.mean - b.mean).squaredNorm();
  if (a.diagonal) {
    double tr = 0.0;
    for (Eigen::Index k = 0; k < a.var.size(); ++k) {
      double va = std::max(a.var[k], 0.0), vb = std::max(b.var[k], 0.0);
      tr += va + vb - 2.0 * std::sqrt(va * vb);
    }
    return mean_term + tr;
  }

  const Eigen::Index dim = a.mean.size();
  Eigen::MatrixXd s1 = a.cov + 1e-8 * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd s2 = b.cov + 1e-8 * Eigen::MatrixXd::Identity(dim, dim);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(s1);
  Eigen::VectorXd root1 = es1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd s1_half = es1.eigenvectors() * root1.asDiagonal() *
                            es1.eigenvectors().transpose();

  // tr((S1 S2)^(1/2)) = tr((S1^(1/2) S2 S1^(1/2))^(1/2)), computed on the
  // symmetric form.
  Eigen::MatrixXd inner = s1_half * s2 * s1_half;
  inner = 0.5 * (inner + inner.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(inner);
  double tr_sqrt = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  return mean_term + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
}

BandPartition::BandPartition(const BlurOperator& op, FieldShape shape, int n_bands)
    : shape_(shape), n_bands_(n_bands) {
  if (n_bands < 2) throw std::invalid_argument("BandPartition: need at least 2 bands");
  Eigen::ArrayXXd eig = op.freq_eigenvalues(shape);
  const int count = static_cast<int>(eig.size());
  if (n_bands > count)
    throw std::invalid_argument("BandPartition: more bands than coefficients");

  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  const double* flat = eig.data();
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return flat[l] > flat[r]; });

  // Equal-sized bins in descending eigenvalue order, never splitting a run of
  // equal values across a boundary.
  assignment_.assign(count, 0);
  int band = 0;
  int pos = 0;
  while (pos < count) {
    int run_end = pos + 1;
    while (run_end < count && flat[order[run_end]] == flat[order[pos]]) ++run_end;
    for (int k = pos; k < run_end; ++k) assignment_[order[k]] = band;
    pos = run_end;
    while (band + 1 < n_bands_ && pos >= (band + 1) * count / n_bands_) ++band;
  }
}

Eigen::VectorXd BandPartition::energies(const SpectralField& x) const {
  if (!(x.shape() == shape_))
    throw std::invalid_argument("BandPartition: field shape mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_bands_);
  const Eigen::MatrixXd& s = x.spectral();
  const double* flat = s.data();
  for (int k = 0; k < static_cast<int>(s.size()); ++k)
    out[assignment_[k]] += flat[k] * flat[k];
  return out;
}

Eigen::VectorXd BandPartition::average(const Eigen::ArrayXXd& per_coeff,
                                       const Eigen::ArrayXXd* weights) const {
  if (per_coeff.size() != static_cast<Eigen::Index>(assignment_.size()))
    throw std::invalid_argument("BandPartition: array size mismatch");
  Eigen::VectorXd num = Eigen::VectorXd::Zero(n_bands_);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n_bands_);
  Eigen::VectorXd plain = Eigen::VectorXd::Zero(n_bands_);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_bands_);
  const double* v = per_coeff.data();
  const double* w = weights ? weights->data() : nullptr;
  for (int k = 0; k < static_cast<int>(per_coeff.size()); ++k) {
    int b = assignment_[k];
    double wk = w ? w[k] : 1.0;
    num[b] += wk * v[k];
    den[b] += wk;
    plain[b] += v[k];
    counts[b] += 1.0;
  }
  Eigen::VectorXd out(n_bands_);
  for (int b = 0; b < n_bands_; ++b)
    out[b] = den[b] > 0.0 ? num[b] / den[b] : plain[b] / counts[b];
  return out;
}

Eigen::VectorXd band_energy(const BlurOperator& op, const SpectralField& x, int n_bands) {
  return BandPartition(op, x.shape(), n_bands).energies(x);
}

}  // namespace c2f
