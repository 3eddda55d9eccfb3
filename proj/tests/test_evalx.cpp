#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "c2f/evalx.hpp"
#include "c2f/rng.hpp"

#include <cmath>

using namespace c2f;

TEST_CASE("gaussian fit basics") {
  SUBCASE("identical samples give zero covariance") {
    Eigen::VectorXd c(3);
    c << 1.0, -2.0, 0.5;
    GaussianFit fit = fit_gaussian({c, c, c});
    CHECK((fit.mean - c).cwiseAbs().maxCoeff() == 0.0);
    CHECK(fit.cov.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two samples average") {
    Eigen::VectorXd a(2), b(2);
    a << 1.0, 0.0;
    b << 3.0, 2.0;
    GaussianFit fit = fit_gaussian({a, b});
    CHECK((fit.mean - 0.5 * (a + b)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("sample count validation") {
    Eigen::VectorXd a(2);
    a << 1.0, 0.0;
    CHECK_THROWS_AS(fit_gaussian({a}), std::invalid_argument);
    CHECK_THROWS_AS(fit_gaussian({}), std::invalid_argument);
  }
  SUBCASE("standard normal moments from 1e5 draws") {
    RngStream rng(3);
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(100000);
    for (int k = 0; k < 100000; ++k) samples.push_back(rng.gauss_matrix(4, 1).col(0));
    GaussianFit fit = fit_gaussian(samples);
    CHECK(fit.mean.cwiseAbs().maxCoeff() < 0.02);
    CHECK((fit.cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.05);
    // covariance symmetric positive semi-definite
    CHECK((fit.cov - fit.cov.transpose()).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("diagonal fit matches the full diagonal") {
    RngStream rng(5);
    std::vector<Eigen::VectorXd> samples;
    for (int k = 0; k < 2000; ++k) samples.push_back(rng.gauss_matrix(3, 1).col(0));
    GaussianFit full = fit_gaussian(samples);
    GaussianFit diag = fit_gaussian_diagonal(samples);
    CHECK((diag.var - full.cov.diagonal()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((diag.mean - full.mean).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("frechet distance") {
  auto fit1d = [](double mean, double var) {
    GaussianFit f;
    f.mean = Eigen::VectorXd::Constant(1, mean);
    f.cov = Eigen::MatrixXd::Constant(1, 1, var);
    return f;
  };

  SUBCASE("identical fits are at distance zero") {
    RngStream rng(7);
    std::vector<Eigen::VectorXd> samples;
    for (int k = 0; k < 200; ++k) samples.push_back(rng.gauss_matrix(4, 1).col(0));
    GaussianFit fit = fit_gaussian(samples);
    CHECK(frechet_distance(fit, fit) < 1e-8);
  }
  SUBCASE("unit shift of a unit gaussian has distance one") {
    CHECK(frechet_distance(fit1d(0.0, 1.0), fit1d(1.0, 1.0)) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("swapped diagonal covariances") {
    GaussianFit a, b;
    a.mean = Eigen::VectorXd::Zero(2);
    b.mean = Eigen::VectorXd::Zero(2);
    a.cov = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    b.cov = Eigen::Vector2d(4.0, 1.0).asDiagonal();
    // tr(S1 + S2 - 2 (S1 S2)^(1/2)) = 5 + 5 - 2 (2 + 2) = 2
    CHECK(frechet_distance(a, b) == doctest::Approx(2.0).epsilon(1e-6));
  }
  SUBCASE("symmetry and non-negativity") {
    RngStream rng(11);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<Eigen::VectorXd> s1, s2;
      for (int k = 0; k < 300; ++k) {
        s1.push_back(rng.gauss_matrix(3, 1).col(0));
        s2.push_back((2.0 * rng.gauss_matrix(3, 1)).col(0));
      }
      GaussianFit a = fit_gaussian(s1), b = fit_gaussian(s2);
      double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
      CHECK(ab >= 0.0);
      CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    }
  }
  SUBCASE("diagonal mode agrees with full mode on diagonal covariances") {
    GaussianFit a, b, da, db;
    a.mean = Eigen::VectorXd::Zero(2);
    b.mean = Eigen::VectorXd::Ones(2);
    a.cov = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    b.cov = Eigen::Vector2d(2.0, 0.5).asDiagonal();
    da.mean = a.mean;
    db.mean = b.mean;
    da.diagonal = db.diagonal = true;
    da.var = a.cov.diagonal();
    db.var = b.cov.diagonal();
    CHECK(frechet_distance(a, b) == doctest::Approx(frechet_distance(da, db)).epsilon(1e-6));
  }
  SUBCASE("dimension and mode mismatches") {
    GaussianFit a = fit1d(0, 1);
    GaussianFit b;
    b.mean = Eigen::VectorXd::Zero(2);
    b.cov = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(frechet_distance(a, b), std::invalid_argument);
    GaussianFit d = a;
    d.diagonal = true;
    d.var = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_AS(frechet_distance(a, d), std::invalid_argument);
  }
}

TEST_CASE("band partition") {
  auto op = make_blur_operator(0.4, 8);

  SUBCASE("constant field lands in band zero") {
    FieldShape shape{1, 8};
    SpectralField f =
        SpectralField::from_pixel(op, shape, Eigen::MatrixXd::Constant(8, 1, 3.0));
    Eigen::VectorXd e = band_energy(*op, f, 2);
    CHECK(e[0] == doctest::Approx(f.pixel().squaredNorm()).epsilon(1e-10));
    CHECK(e[1] < 1e-20);
  }

  SUBCASE("band energies sum to the squared norm") {
    RngStream rng(13);
    for (int rank : {1, 2}) {
      FieldShape shape{rank, 8};
      for (int nb : {2, 3, 4}) {
        SpectralField f = SpectralField::from_pixel(
            op, shape, rng.gauss_matrix(shape.rows(), shape.cols()));
        Eigen::VectorXd e = band_energy(*op, f, nb);
        CHECK(e.sum() == doctest::Approx(f.pixel().squaredNorm()).epsilon(1e-10));
        CHECK((e.array() >= 0.0).all());
      }
    }
  }

  SUBCASE("heavy blur shifts energy into the low band") {
    RngStream rng(17);
    FieldShape shape{2, 8};
    SpectralField f = SpectralField::from_pixel(op, shape, rng.gauss_matrix(8, 8));
    Eigen::VectorXd before = band_energy(*op, f, 2);
    SpectralField blurred = apply_power(f, 50.0);
    Eigen::VectorXd after = band_energy(*op, blurred, 2);
    CHECK(after[0] / after.sum() > before[0] / before.sum());
  }

  SUBCASE("degenerate eigenvalue pairs share a band") {
    // Symmetric circulants pair frequencies k and n-k; the partition must
    // never split such a pair whatever the band count.
    FieldShape shape{1, 8};
    BandPartition bands(*op, shape, 3);
    const auto& freq = op->freq_index();
    const Eigen::VectorXd& d = op->eigvals_1d();
    for (int p = 0; p < 8; ++p)
      for (int q = 0; q < 8; ++q)
        if (d[p] == d[q])
          CHECK(bands.assignment()[p] == bands.assignment()[q]);
    // every coefficient is assigned to a valid band
    for (int b : bands.assignment()) {
      CHECK(b >= 0);
      CHECK(b < 3);
    }
    CHECK(freq.size() == 8);
  }

  SUBCASE("weighted averages fall back to plain means on empty weights") {
    FieldShape shape{1, 8};
    BandPartition bands(*op, shape, 2);
    Eigen::ArrayXXd values = Eigen::ArrayXXd::Constant(8, 1, 2.0);
    Eigen::ArrayXXd weights = Eigen::ArrayXXd::Zero(8, 1);
    Eigen::VectorXd avg = bands.average(values, &weights);
    CHECK(avg[0] == 2.0);
    CHECK(avg[1] == 2.0);
  }

  SUBCASE("validation") {
    FieldShape shape{1, 8};
    CHECK_THROWS_AS(BandPartition(*op, shape, 1), std::invalid_argument);
    CHECK_THROWS_AS(BandPartition(*op, shape, 9), std::invalid_argument);
  }
}
