#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "lnpr/cavity.hpp"
#include "lnpr/error.hpp"

namespace lnpr {
namespace {

constexpr double kPi = std::numbers::pi;

// Output noise matrix in the real (x, p) quadrature basis, derived from
// dx/dt = -(1 + s) x + D p + sqrt2 x_in,  dp/dt = -D x - (1 - s) p + sqrt2 p_in,
// out = sqrt2 v - v_in. Vacuum input has unit spectrum.
Eigen::Matrix2d quadrature_noise(double sigma, double detuning, double omega) {
  using C = std::complex<double>;
  Eigen::Matrix2cd a;
  a << C(-1.0 - sigma, omega), C(detuning, 0.0), C(-detuning, 0.0), C(-1.0 + sigma, omega);
  const Eigen::Matrix2cd t = -2.0 * a.inverse() - Eigen::Matrix2cd::Identity();
  return (t * t.adjoint()).real();
}

double db(double x) { return 10.0 * std::log10(x); }

TEST(Opo, ThresholdGrowsWithDetuning) {
  EXPECT_DOUBLE_EQ(opo_threshold({0.0}), 1.0);
  EXPECT_DOUBLE_EQ(opo_threshold({1.5}), std::sqrt(1.0 + 2.25));
  EXPECT_THROW(opo_quadrature_spectrum(1.0, {0.0}, 0.0, 0.0), ValidationError);
}

TEST(Opo, MatchesIndependentQuadratureModel) {
  for (double sigma : {0.05, 0.28, 0.52, 0.9}) {
    for (double detuning : {0.0, 0.4, 1.5, 3.0}) {
      for (double omega : {0.0, 0.3, 1.7, 6.0}) {
        const Eigen::Matrix2d n = quadrature_noise(sigma, detuning, omega);
        for (double theta = 0.0; theta < kPi; theta += kPi / 17.0) {
          const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
          EXPECT_NEAR(opo_quadrature_spectrum(sigma, {detuning}, omega, theta), u.dot(n * u),
                      1e-12)
              << sigma << " " << detuning << " " << omega << " " << theta;
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(n);
        const auto e = opo_quadrature_extremes(sigma, {detuning}, omega);
        EXPECT_NEAR(e.squeezed, eig.eigenvalues()[0], 1e-12);
        EXPECT_NEAR(e.antisqueezed, eig.eigenvalues()[1], 1e-12);
      }
    }
  }
}

TEST(Opo, ClosedFormExtremesAgreeWithThetaGrid) {
  for (double sigma : {0.2, 0.6}) {
    for (double detuning : {0.0, 1.0, 2.5}) {
      for (double omega : {0.0, 0.8, 2.0}) {
        double lo = 1e9, hi = 0.0;
        for (int i = 0; i < 3600; ++i) {
          const double s = opo_quadrature_spectrum(sigma, {detuning}, omega, kPi * i / 3600.0);
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
        const auto e = opo_quadrature_extremes(sigma, {detuning}, omega);
        EXPECT_LE(e.squeezed, lo + 1e-14);
        EXPECT_NEAR(e.squeezed, lo, 1e-5);
        EXPECT_GE(e.antisqueezed, hi - 1e-14);
        EXPECT_NEAR(e.antisqueezed, hi, 1e-5);
        EXPECT_NEAR(opo_quadrature_spectrum(sigma, {detuning}, omega, e.squeezed_angle),
                    e.squeezed, 1e-12);
      }
    }
  }
}

TEST(Opo, ZeroDetuningAnalyticMinimum) {
  for (double sigma : {0.1, 0.28013, 0.5, 0.8}) {
    const auto best = opo_optimal_levels(sigma, {0.0});
    EXPECT_NEAR(best.best_squeezing_db, db(1.0 - 4.0 * sigma / ((1.0 + sigma) * (1.0 + sigma))),
                1e-9);
    EXPECT_NEAR(best.squeezing_frequency, 0.0, 1e-6);
  }
}

TEST(Opo, PumpParameterInversion) {
  for (double target : {-1.0, -3.0, -5.0, -10.0, -15.0}) {
    const double sigma = pump_parameter_for_squeezing(target);
    EXPECT_NEAR(db(opo_quadrature_extremes(sigma, {0.0}, 0.0).squeezed), target, 1e-10);
  }
  EXPECT_NEAR(pump_parameter_for_squeezing(-5.0), 0.2801, 1e-4);
  EXPECT_THROW(pump_parameter_for_squeezing(1.0), ValidationError);
}

TEST(Opo, OptimalLevelsBeatDenseGrid) {
  const double sigma = pump_parameter_for_squeezing(-10.0);
  for (double detuning : {0.5, 1.5, 2.5}) {
    double lo = 1e9, hi = 0.0;
    for (double omega = 0.0; omega <= 20.0; omega += 0.01) {
      const auto e = opo_quadrature_extremes(sigma, {detuning}, omega);
      lo = std::min(lo, e.squeezed);
      hi = std::max(hi, e.antisqueezed);
    }
    const auto best = opo_optimal_levels(sigma, {detuning});
    EXPECT_LE(best.best_squeezing_db, db(lo) + 1e-12);
    EXPECT_NEAR(best.best_squeezing_db, db(lo), 1e-3);
    EXPECT_GE(best.best_antisqueezing_db, db(hi) - 1e-12);
    EXPECT_NEAR(best.best_antisqueezing_db, db(hi), 1e-3);
  }
}

TEST(Opo, LimitsTendToVacuum) {
  for (double sigma : {0.1, 0.5, 0.9}) {
    for (double detuning : {0.0, 1.0, 3.0}) {
      const auto e = opo_quadrature_extremes(sigma, {detuning}, 1e3);
      EXPECT_NEAR(e.squeezed, 1.0, 1e-3);
      EXPECT_NEAR(e.antisqueezed, 1.0, 1e-3);
    }
  }
  for (double detuning : {0.0, 1.0, 3.0}) {
    for (double omega : {0.0, 1.0, 5.0}) {
      const auto e = opo_quadrature_extremes(1e-9, {detuning}, omega);
      EXPECT_NEAR(e.squeezed, 1.0, 1e-3);
      EXPECT_NEAR(e.antisqueezed, 1.0, 1e-3);
    }
  }
}

TEST(Opo, UncertaintyProductAtUnitEfficiency) {
  for (double sigma = 0.05; sigma < 1.0; sigma += 0.1) {
    for (double detuning = 0.0; detuning <= 3.0; detuning += 0.25) {
      for (double omega = 0.0; omega <= 10.0; omega += 0.2) {
        const auto e = opo_quadrature_extremes(sigma, {detuning}, omega);
        EXPECT_GE(e.squeezed * e.antisqueezed, 1.0 - 1e-9);
      }
    }
  }
}

TEST(Opo, LossMixesWithVacuum) {
  const double sigma = 0.4;
  const double eta = 0.7;
  for (double omega : {0.0, 0.9}) {
    const double s = opo_quadrature_spectrum(sigma, {1.2}, omega, 0.3);
    EXPECT_NEAR(opo_quadrature_spectrum(sigma, {1.2}, omega, 0.3, eta), eta * s + 1.0 - eta, 1e-14);
  }
  EXPECT_THROW(opo_quadrature_spectrum(sigma, {0.0}, 0.0, 0.0, 1.5), ValidationError);
}

TEST(Opo, DegradesMonotonicallyWithDetuning) {
  for (double target : {-3.0, -5.0, -10.0}) {
    const double sigma = pump_parameter_for_squeezing(target);
    double previous = -1e9;
    for (double detuning = 0.0; detuning <= 3.0 + 1e-12; detuning += 0.1) {
      const auto best = opo_optimal_levels(sigma, {detuning});
      EXPECT_GE(best.best_squeezing_db, previous - 1e-9) << detuning;
      EXPECT_GE(best.best_antisqueezing_db, -best.best_squeezing_db - 1e-9);
      previous = best.best_squeezing_db;
    }
  }
}

TEST(Opo, SqueezingMinimumMovesOffZeroFrequency) {
  // The minimum sits at omega = 0 up to |Delta| = 1 and moves out somewhat
  // beyond it, at a detuning that grows with sigma (about 1.12 at sigma 0.52).
  for (double target : {-3.0, -10.0}) {
    const double sigma = pump_parameter_for_squeezing(target);
    for (double detuning : {0.0, 0.5, 1.0}) {
      EXPECT_NEAR(opo_optimal_levels(sigma, {detuning}).squeezing_frequency, 0.0, 1e-3);
    }
    for (double detuning : {1.5, 2.0, 3.0}) {
      EXPECT_GT(opo_optimal_levels(sigma, {detuning}).squeezing_frequency, 0.1) << detuning;
    }
  }
}

TEST(Opo, QuotedDetunedPairs) {
  const auto five = opo_optimal_levels(pump_parameter_for_squeezing(-5.0), {1.5});
  EXPECT_NEAR(five.best_squeezing_db, -2.0, 0.5);
}

}  // namespace
}  // namespace lnpr
