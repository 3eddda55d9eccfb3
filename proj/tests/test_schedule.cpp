#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "c2f/rng.hpp"
#include "c2f/schedule.hpp"

#include <cmath>

using namespace c2f;

namespace {

DiffusionSchedule make(BlurType type, double f_end, int n_steps = 1000,
                       bool fine_to_coarse = false, int n = 8) {
  return DiffusionSchedule(NoiseSchedule::linear(n_steps, 1e-4, 0.02),
                           BlurSchedule::make(type, f_end, n_steps),
                           make_blur_operator(0.4, n), fine_to_coarse);
}

}  // namespace

TEST_CASE("linear noise schedule") {
  NoiseSchedule ns = NoiseSchedule::linear(1000, 1e-4, 0.02);
  CHECK(ns.beta(1) == 1e-4);
  CHECK(ns.beta(1000) == 0.02);
  CHECK(ns.beta(500) == doctest::Approx(0.01).epsilon(1e-2));
  double expected = 1e-4 + (0.02 - 1e-4) * 499.0 / 999.0;
  CHECK(ns.beta(500) == expected);
  // alpha-bar strictly decreasing, in (0, 1)
  for (int i = 2; i <= 1000; ++i) {
    CHECK(ns.alpha_bar(i) < ns.alpha_bar(i - 1));
    CHECK(ns.alpha_bar(i) > 0.0);
  }
}

TEST_CASE("two point ramp") {
  NoiseSchedule ns = NoiseSchedule::linear(2, 0.1, 0.3);
  CHECK(ns.beta(1) == 0.1);
  CHECK(ns.beta(2) == 0.3);
  CHECK(ns.alpha_bar(2) == doctest::Approx((1 - 0.1) * (1 - 0.3)).epsilon(1e-15));
}

TEST_CASE("noise schedule validation") {
  CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.0, 0.02), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.03, 0.02), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseSchedule::linear(0, 0.1, 0.2), std::invalid_argument);
  NoiseSchedule ns = NoiseSchedule::linear(10, 0.1, 0.2);
  CHECK_THROWS_AS(ns.beta(0), std::invalid_argument);
  CHECK_THROWS_AS(ns.beta(11), std::invalid_argument);
}

TEST_CASE("blur schedule shapes") {
  SUBCASE("quartic hits its endpoint") {
    BlurSchedule b = BlurSchedule::make(BlurType::quartic, 0.14, 1000);
    CHECK(b.f(0) == 0.0);
    CHECK(b.f(1000) == doctest::Approx(0.14).epsilon(1e-12));
    CHECK(b.f(500) == doctest::Approx(0.14 * 0.0625).epsilon(1e-12));
  }
  SUBCASE("log starts at zero") {
    BlurSchedule b = BlurSchedule::make(BlurType::log, 0.6, 1000);
    CHECK(b.f(0) == 0.0);
    CHECK(b.f(1) == 0.0);  // log 1 = 0
    CHECK(b.f(1000) == doctest::Approx(0.6).epsilon(1e-12));
  }
  SUBCASE("zero schedule") {
    BlurSchedule b = BlurSchedule::make(BlurType::zero, 0.0, 100);
    for (int i = 0; i <= 100; ++i) CHECK(b.f(i) == 0.0);
  }
  SUBCASE("monotone non-decreasing with cumulative sums") {
    for (BlurType t : {BlurType::quartic, BlurType::log}) {
      BlurSchedule b = BlurSchedule::make(t, 0.3, 500);
      double running = 0.0;
      for (int i = 1; i <= 500; ++i) {
        CHECK(b.f(i) >= b.f(i - 1));
        running += b.f(i);
        CHECK(b.cumulative(i) == doctest::Approx(running).epsilon(1e-13));
      }
    }
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(BlurSchedule::make(BlurType::quartic, -0.1, 100),
                    std::invalid_argument);
    CHECK_THROWS_AS(blur_type_from_string("cubic"), std::invalid_argument);
    CHECK(blur_type_from_string("log") == BlurType::log);
    CHECK(to_string(BlurType::quartic) == "quartic");
  }
}

TEST_CASE("first step closed form equals single factor") {
  DiffusionSchedule s = make(BlurType::quartic, 0.14);
  FieldShape shape{1, 8};
  Eigen::ArrayXXd abar1 = s.diag_abar(1, shape);
  Eigen::ArrayXXd a1 = s.diag_a(1, shape);
  CHECK((abar1 - a1).abs().maxCoeff() < 1e-15);
}

TEST_CASE("zero blur reduces to scalar schedule") {
  DiffusionSchedule s = make(BlurType::zero, 0.0);
  FieldShape shape{1, 8};
  for (int i : {1, 7, 500, 1000}) {
    Eigen::ArrayXXd abar = s.diag_abar(i, shape);
    CHECK((abar - s.noise().alpha_bar(i)).abs().maxCoeff() == 0.0);
    Eigen::ArrayXXd a = s.diag_a(i, shape);
    CHECK((a - (1.0 - s.noise().beta(i))).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("closed form matches the explicit product") {
  for (bool ftc : {false, true}) {
    DiffusionSchedule s = make(BlurType::quartic, 0.14, 1000, ftc);
    for (int rank : {1, 2}) {
      FieldShape shape{rank, 8};
      Eigen::ArrayXXd product = Eigen::ArrayXXd::Ones(shape.rows(), shape.cols());
      for (int i = 1; i <= 1000; ++i) {
        product *= s.diag_a(i, shape);
        if (i == 1 || i == 137 || i == 500 || i == 1000) {
          Eigen::ArrayXXd closed = s.diag_abar(i, shape);
          CHECK((closed - product).abs().maxCoeff() < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("per-frequency monotone decay") {
  DiffusionSchedule s = make(BlurType::log, 0.6);
  FieldShape shape{1, 8};
  Eigen::ArrayXXd prev = Eigen::ArrayXXd::Ones(8, 1);
  for (int i = 1; i <= 1000; ++i) {
    Eigen::ArrayXXd abar = s.diag_abar(i, shape);
    CHECK((abar > 0.0).all());
    CHECK((abar <= prev + 1e-15).all());
    prev = abar;
  }
}

TEST_CASE("DC frequency decays at the scalar rate exactly") {
  DiffusionSchedule s = make(BlurType::quartic, 0.14);
  FieldShape shape{1, 8};
  for (int i : {1, 250, 1000}) {
    // slot 0 holds the unit eigenvalue
    CHECK(s.diag_abar(i, shape)(0, 0) == s.noise().alpha_bar(i));
  }
}

TEST_CASE("high frequencies are destroyed faster") {
  DiffusionSchedule s = make(BlurType::quartic, 0.14);
  FieldShape shape{1, 8};
  const Eigen::VectorXd& d = s.op()->eigvals_1d();
  for (int i : {1, 10, 500, 1000}) {
    Eigen::ArrayXXd abar = s.diag_abar(i, shape);
    for (int k = 1; k < 8; ++k) {
      // only genuinely distinct eigenvalues; degenerate circulant pairs come
      // back from the solver a few ulps apart
      if (d[k] < d[k - 1] - 1e-12) CHECK(abar(k, 0) < abar(k - 1, 0));
    }
  }
}

TEST_CASE("fine-to-coarse flips the ordering") {
  DiffusionSchedule s = make(BlurType::quartic, 0.14, 1000, true);
  FieldShape shape{1, 8};
  Eigen::ArrayXXd base = s.base(shape);
  CHECK(base(0, 0) == 0.0);  // DC eigenvalue 1 becomes 0
  Eigen::ArrayXXd abar = s.diag_abar(500, shape);
  // the DC coefficient is now the fastest-destroyed one
  CHECK(abar(0, 0) == 0.0);
  CHECK(abar(7, 0) > 0.0);
  // A = 0 and B = 1 at the degenerate coefficient once f > 0
  CHECK(s.diag_a(500, shape)(0, 0) == 0.0);
  CHECK(s.diag_b(500, shape)(0, 0) == 1.0);
}

TEST_CASE("variance preservation is exact") {
  for (BlurType t : {BlurType::zero, BlurType::log, BlurType::quartic}) {
    for (bool ftc : {false, true}) {
      DiffusionSchedule s = make(t, t == BlurType::log ? 0.6 : 0.14, 200, ftc);
      for (int rank : {1, 2}) {
        FieldShape shape{rank, 8};
        for (int i = 1; i <= 200; ++i) {
          Eigen::ArrayXXd sum = s.diag_a(i, shape) + s.diag_b(i, shape);
          CHECK((sum == 1.0).all());
        }
      }
    }
  }
}

TEST_CASE("index validation") {
  DiffusionSchedule s = make(BlurType::quartic, 0.14, 100);
  FieldShape shape{1, 8};
  CHECK_THROWS_AS(s.diag_a(0, shape), std::invalid_argument);
  CHECK_THROWS_AS(s.diag_abar(101, shape), std::invalid_argument);
}

TEST_CASE("terminal signal leakage is small for the default schedules") {
  FieldShape shape{1, 8};
  CHECK(make(BlurType::quartic, 0.14).abar_terminal_max(shape) < 1e-4);
  CHECK(make(BlurType::log, 0.6).abar_terminal_max(shape) < 1e-4);
  CHECK(make(BlurType::zero, 0.0).abar_terminal_max(shape) < 1e-4);
}
