#include "c2f/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace c2f {

GaussianKernel1D::GaussianKernel1D(double sigma, int support)
    : sigma_(sigma), support_(support) {
  if (!(sigma > 0.0)) throw std::invalid_argument("GaussianKernel1D: sigma must be > 0");
  if (support < 3 || support % 2 == 0)
    throw std::invalid_argument("GaussianKernel1D: support must be odd and >= 3");
  weights_.resize(support);
  int center = (support - 1) / 2;
  for (int j = 0; j < support; ++j) {
    double off = j - center;
    weights_[j] = std::exp(-off * off / (2.0 * sigma * sigma));
  }
  weights_ /= weights_.sum();
}

int GaussianKernel1D::default_support(double sigma, int axis_len) {
  int s = 2 * static_cast<int>(std::ceil(4.0 * sigma)) + 1;
  if (s > axis_len) s = axis_len;
  if (s % 2 == 0) s -= 1;
  return std::max(s, 3);
}

namespace {

Eigen::VectorXd wrapped_kernel_row(const GaussianKernel1D& kernel, int n) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
  int half = (kernel.support() - 1) / 2;
  for (int t = -half; t <= half; ++t) {
    int idx = ((t % n) + n) % n;
    row[idx] += kernel.weights()[half + t];
  }
  return row;
}

}  // namespace

BlurOperator::BlurOperator(const GaussianKernel1D& kernel, int axis_len)
    : axis_len_(axis_len), kernel_(kernel) {
  if (kernel.support() > axis_len)
    throw std::invalid_argument("BlurOperator: kernel support exceeds axis length");

  Eigen::VectorXd row0 = wrapped_kernel_row(kernel, axis_len);
  circulant_.resize(axis_len, axis_len);
  for (int r = 0; r < axis_len; ++r)
    for (int c = 0; c < axis_len; ++c)
      circulant_(r, c) = row0[((c - r) % axis_len + axis_len) % axis_len];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(circulant_);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("BlurOperator: eigendecomposition failed");

  // Solver returns ascending order; store descending.
  eigvals_ = solver.eigenvalues().reverse();
  eigvecs_ = solver.eigenvectors().rowwise().reverse();

  // Analytic circulant eigenvalues (real DFT of the first row) give the
  // frequency index of each sorted slot.
  std::vector<std::pair<double, int>> analytic(axis_len);
  for (int k = 0; k < axis_len; ++k) {
    double lam = 0.0;
    for (int j = 0; j < axis_len; ++j)
      lam += row0[j] * std::cos(2.0 * std::numbers::pi * j * k / axis_len);
    analytic[k] = {lam, k};
  }
  std::stable_sort(analytic.begin(), analytic.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  freq_index_.resize(axis_len);
  for (int p = 0; p < axis_len; ++p) freq_index_[p] = analytic[p].second;

  if (std::abs(eigvals_[0] - 1.0) > 1e-10)
    throw std::runtime_error("BlurOperator: leading eigenvalue deviates from 1");
  eigvals_[0] = 1.0;  // doubly stochastic circulant: DC eigenvalue is exactly 1
  for (int k = 1; k < axis_len; ++k) {
    if (!(eigvals_[k] > 0.0))
      throw std::runtime_error("BlurOperator: non-positive eigenvalue in blur spectrum");
    eigvals_[k] = std::min(eigvals_[k], 1.0);
  }
}

Eigen::MatrixXd BlurOperator::dense_power(double p) const {
  Eigen::VectorXd powered = eigvals_.array().pow(p).matrix();
  return eigvecs_ * powered.asDiagonal() * eigvecs_.transpose();
}

Eigen::ArrayXXd BlurOperator::freq_eigenvalues(FieldShape shape) const {
  if (shape.n != axis_len_)
    throw std::invalid_argument("BlurOperator: field axis length does not match operator");
  if (shape.rank == 1) return eigvals_.array();
  Eigen::ArrayXXd out(axis_len_, axis_len_);
  for (int c = 0; c < axis_len_; ++c)
    for (int r = 0; r < axis_len_; ++r) out(r, c) = eigvals_[r] * eigvals_[c];
  return out;
}

void BlurOperator::check_shape(const Eigen::MatrixXd& m, FieldShape shape) const {
  if (shape.rank != 1 && shape.rank != 2)
    throw std::invalid_argument("FieldShape: rank must be 1 or 2");
  if (shape.n != axis_len_ || m.rows() != shape.rows() || m.cols() != shape.cols())
    throw std::invalid_argument("BlurOperator: field shape mismatch");
}

Eigen::MatrixXd BlurOperator::to_spectral(const Eigen::MatrixXd& pixel,
                                          FieldShape shape) const {
  check_shape(pixel, shape);
  if (shape.rank == 1) return eigvecs_.transpose() * pixel;
  return eigvecs_.transpose() * pixel * eigvecs_;
}

Eigen::MatrixXd BlurOperator::to_pixel(const Eigen::MatrixXd& spectral,
                                       FieldShape shape) const {
  check_shape(spectral, shape);
  if (shape.rank == 1) return eigvecs_ * spectral;
  return eigvecs_ * spectral * eigvecs_.transpose();
}

std::shared_ptr<const BlurOperator> make_blur_operator(double sigma, int axis_len,
                                                       int support) {
  if (support == 0) support = GaussianKernel1D::default_support(sigma, axis_len);
  return std::make_shared<const BlurOperator>(GaussianKernel1D(sigma, support), axis_len);
}

SpectralField::SpectralField(std::shared_ptr<const BlurOperator> basis, FieldShape shape)
    : basis_(std::move(basis)), shape_(shape) {}

SpectralField SpectralField::from_pixel(std::shared_ptr<const BlurOperator> basis,
                                        FieldShape shape, Eigen::MatrixXd pixel) {
  basis->check_shape(pixel, shape);
  SpectralField f(std::move(basis), shape);
  f.pixel_ = std::move(pixel);
  return f;
}

SpectralField SpectralField::from_spectral(std::shared_ptr<const BlurOperator> basis,
                                           FieldShape shape, Eigen::MatrixXd spectral) {
  basis->check_shape(spectral, shape);
  SpectralField f(std::move(basis), shape);
  f.spectral_ = std::move(spectral);
  return f;
}

SpectralField SpectralField::zero(std::shared_ptr<const BlurOperator> basis,
                                  FieldShape shape) {
  return from_pixel(std::move(basis), shape,
                    Eigen::MatrixXd::Zero(shape.rows(), shape.cols()));
}

const Eigen::MatrixXd& SpectralField::pixel() const {
  if (!pixel_) pixel_ = basis_->to_pixel(*spectral_, shape_);
  return *pixel_;
}

const Eigen::MatrixXd& SpectralField::spectral() const {
  if (!spectral_) spectral_ = basis_->to_spectral(*pixel_, shape_);
  return *spectral_;
}

Eigen::VectorXd SpectralField::pixel_vec() const {
  const Eigen::MatrixXd& p = pixel();
  return Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
}

Eigen::VectorXd SpectralField::spectral_vec() const {
  const Eigen::MatrixXd& s = spectral();
  return Eigen::Map<const Eigen::VectorXd>(s.data(), s.size());
}

double SpectralField::norm() const {
  return pixel_ ? pixel_->norm() : spectral_->norm();
}

SpectralField apply_power(const SpectralField& x, double p) {
  if (p < 0.0) throw std::invalid_argument("apply_power: exponent must be >= 0");
  if (p == 0.0) return x;
  Eigen::ArrayXXd d = x.basis()->freq_eigenvalues(x.shape());
  Eigen::MatrixXd scaled = (x.spectral().array() * d.pow(p)).matrix();
  return SpectralField::from_spectral(x.basis(), x.shape(), std::move(scaled));
}

}  // namespace c2f
