#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <vector>

namespace c2f {

// Shape of a field: rank 1 is a length-n vector, rank 2 an n-by-n image.
struct FieldShape {
  int rank = 1;
  int n = 0;

  int rows() const { return n; }
  int cols() const { return rank == 1 ? 1 : n; }
  int size() const { return rows() * cols(); }

  friend bool operator==(const FieldShape&, const FieldShape&) = default;
};

// Symmetric 1D Gaussian kernel, normalized to unit mass.
class GaussianKernel1D {
 public:
  GaussianKernel1D(double sigma, int support);

  double sigma() const { return sigma_; }
  int support() const { return support_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  // Widest odd support covering +-4 sigma that still fits the axis.
  static int default_support(double sigma, int axis_len);

 private:
  double sigma_;
  int support_;
  Eigen::VectorXd weights_;
};

class SpectralField;

// Circulant blur along one axis, factored as W = U diag(d) U^T with
// orthonormal U and eigenvalues d in (0, 1], sorted descending. Fractional
// powers W^p act by raising each eigenvalue to p. Rank-2 fields use the
// separable product along rows and columns; the n^2-by-n^2 operator is never
// formed. Immutable after construction and safe to share across threads.
class BlurOperator {
 public:
  BlurOperator(const GaussianKernel1D& kernel, int axis_len);

  int axis_len() const { return axis_len_; }
  const GaussianKernel1D& kernel() const { return kernel_; }
  const Eigen::MatrixXd& eigvecs_1d() const { return eigvecs_; }
  const Eigen::VectorXd& eigvals_1d() const { return eigvals_; }
  // Fourier frequency index of each sorted eigenvalue slot.
  const std::vector<int>& freq_index() const { return freq_index_; }

  // Dense circulant matrix, built directly from the wrapped kernel.
  const Eigen::MatrixXd& dense_matrix() const { return circulant_; }
  // Dense W^p = U diag(d^p) U^T along one axis.
  Eigen::MatrixXd dense_power(double p) const;

  // Per-coefficient eigenvalues laid out like the spectral coefficients of
  // `shape`: d for rank 1, the outer product d d^T for rank 2.
  Eigen::ArrayXXd freq_eigenvalues(FieldShape shape) const;

  // Rotations x-bar = U^T x (applied separably for rank 2) and back.
  Eigen::MatrixXd to_spectral(const Eigen::MatrixXd& pixel, FieldShape shape) const;
  Eigen::MatrixXd to_pixel(const Eigen::MatrixXd& spectral, FieldShape shape) const;

  void check_shape(const Eigen::MatrixXd& m, FieldShape shape) const;

 private:
  int axis_len_;
  GaussianKernel1D kernel_;
  Eigen::MatrixXd circulant_;
  Eigen::MatrixXd eigvecs_;
  Eigen::VectorXd eigvals_;
  std::vector<int> freq_index_;
};

std::shared_ptr<const BlurOperator> make_blur_operator(double sigma, int axis_len,
                                                       int support = 0);

// A field with paired pixel and rotated (x-bar = U^T x) representations.
// Exactly one representation is authoritative; the other is derived lazily
// and cached. Value type; not meant to be shared across threads while a
// conversion may still run.
class SpectralField {
 public:
  static SpectralField from_pixel(std::shared_ptr<const BlurOperator> basis,
                                  FieldShape shape, Eigen::MatrixXd pixel);
  static SpectralField from_spectral(std::shared_ptr<const BlurOperator> basis,
                                     FieldShape shape, Eigen::MatrixXd spectral);
  static SpectralField zero(std::shared_ptr<const BlurOperator> basis, FieldShape shape);

  const FieldShape& shape() const { return shape_; }
  const std::shared_ptr<const BlurOperator>& basis() const { return basis_; }

  const Eigen::MatrixXd& pixel() const;
  const Eigen::MatrixXd& spectral() const;

  // Flattened copies (column-major) of each representation.
  Eigen::VectorXd pixel_vec() const;
  Eigen::VectorXd spectral_vec() const;

  double norm() const;

 private:
  SpectralField(std::shared_ptr<const BlurOperator> basis, FieldShape shape);

  std::shared_ptr<const BlurOperator> basis_;
  FieldShape shape_;
  mutable std::optional<Eigen::MatrixXd> pixel_;
  mutable std::optional<Eigen::MatrixXd> spectral_;
};

// W^p x through the eigenbasis; p = 0 returns x unchanged.
SpectralField apply_power(const SpectralField& x, double p);

}  // namespace c2f
