#pragma once

#include "c2f/spectral.hpp"

#include <Eigen/Core>

#include <vector>

namespace c2f {

// Empirical Gaussian fit of a sample set. `diagonal` fits keep only the
// per-coefficient variance (intended for spectral coordinates at large n,
// where the full covariance would not fit comfortably in memory).
struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;   // full mode
  Eigen::VectorXd var;   // diagonal mode
  bool diagonal = false;
  int count = 0;
};

GaussianFit fit_gaussian(const std::vector<Eigen::VectorXd>& samples);
GaussianFit fit_gaussian_diagonal(const std::vector<Eigen::VectorXd>& samples);

// Frechet distance between two Gaussian fits:
//   |mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2))
// The matrix square root goes through a symmetric eigendecomposition with
// negative eigenvalues clamped at zero; covariances get +1e-8 I beforehand.
double frechet_distance(const GaussianFit& a, const GaussianFit& b);

// Groups spectral coefficients into n_bands bins by eigenvalue, band 0 holding
// the largest eigenvalues (lowest frequencies). Bins are equal-sized up to
// ties: coefficients with equal eigenvalues always share a band, so the
// partition does not depend on the basis chosen within an eigenspace.
class BandPartition {
 public:
  BandPartition(const BlurOperator& op, FieldShape shape, int n_bands);

  int n_bands() const { return n_bands_; }
  const FieldShape& shape() const { return shape_; }
  // Band id per flattened (column-major) spectral coefficient.
  const std::vector<int>& assignment() const { return assignment_; }

  // |x-bar|^2 per band; entries sum to |x|^2.
  Eigen::VectorXd energies(const SpectralField& x) const;

  // Per-band weighted average of a per-coefficient array. Bands whose weights
  // sum to zero fall back to the unweighted mean.
  Eigen::VectorXd average(const Eigen::ArrayXXd& per_coeff,
                          const Eigen::ArrayXXd* weights = nullptr) const;

 private:
  FieldShape shape_;
  int n_bands_;
  std::vector<int> assignment_;
};

Eigen::VectorXd band_energy(const BlurOperator& op, const SpectralField& x, int n_bands);

}  // namespace c2f
