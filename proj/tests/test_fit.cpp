#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lnpr/cavity.hpp"
#include "lnpr/coupler.hpp"
#include "lnpr/error.hpp"
#include "lnpr/fit.hpp"
#include "support.hpp"

namespace lnpr {
namespace {

CouplerGeometry coupler(double length_mm = 4.3) {
  CouplerGeometry g;
  g.coupling_constant_per_mm = {{30.0, 0.46}, {60.0, 0.48036584917275121}, {90.0, 0.53067443472800557}};
  g.interaction_length_mm = length_mm;
  return g;
}

std::vector<double> powers(double stop, double step) {
  std::vector<double> out;
  for (double p = 0.0; p <= stop + 1e-9; p += step) out.push_back(p);
  return out;
}

SweepData noisy_sweep(const CouplerGeometry& g, const PhotorefractionParams& p, double relative,
                      std::uint64_t seed) {
  SweepData sweep = reflectivity_vs_pump(g, p, 1550.0, powers(15.0, 1.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  sweep.sigma.emplace();
  for (double& v : sweep.value) {
    sweep.sigma->push_back(relative * v);
    v += relative * v * normal(rng);
  }
  return sweep;
}

FitProblem line_problem(const std::vector<double>& x, const std::vector<double>& y) {
  FitProblem problem;
  problem.observations = x.size();
  problem.initial = Eigen::Vector2d(0.0, 0.0);
  problem.residuals = [x, y](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = q[0] + q[1] * x[i] - y[i];
    }
    return r;
  };
  return problem;
}

TEST(LeastSquares, ExactLinearDataInFewIterations) {
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(0.5 * i);
    y.push_back(1.25 - 0.75 * x.back());
  }
  const auto fit = least_squares(line_problem(x, y));
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.iterations, 3);
  EXPECT_NEAR(fit.parameters[0], 1.25, 1e-9);
  EXPECT_NEAR(fit.parameters[1], -0.75, 1e-9);
  EXPECT_NEAR(fit.residual_norm, 0.0, 1e-9);
}

TEST(LeastSquares, StationaryStart) {
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i);
    y.push_back(3.0 + 2.0 * i);
  }
  auto problem = line_problem(x, y);
  problem.initial = Eigen::Vector2d(3.0, 2.0);
  const auto fit = least_squares(problem);
  EXPECT_TRUE(fit.converged);
  EXPECT_LE(fit.iterations, 2);
  EXPECT_EQ(fit.parameters[0], 3.0);
  EXPECT_EQ(fit.parameters[1], 2.0);
}

TEST(LeastSquares, AcceptedCostsNeverIncrease) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::vector<double> t, y;
  for (int i = 0; i < 60; ++i) {
    t.push_back(0.1 * i);
    y.push_back(2.0 * std::exp(-0.7 * t.back()) + normal(rng));
  }
  FitProblem problem;
  problem.observations = t.size();
  problem.initial = Eigen::Vector2d(0.5, 3.0);
  problem.lower = Eigen::Vector2d(0.0, 0.0);
  problem.upper = Eigen::Vector2d(10.0, 10.0);
  problem.residuals = [t, y](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = q[0] * std::exp(-q[1] * t[i]) - y[i];
    }
    return r;
  };
  const auto fit = least_squares(problem);
  EXPECT_TRUE(fit.converged);
  ASSERT_GE(fit.accepted_costs.size(), 2u);
  for (std::size_t i = 1; i < fit.accepted_costs.size(); ++i) {
    EXPECT_LE(fit.accepted_costs[i], fit.accepted_costs[i - 1]);
  }
  EXPECT_NEAR(fit.parameters[0], 2.0, 0.05);
  EXPECT_NEAR(fit.parameters[1], 0.7, 0.05);

  FitTolerances short_run;
  short_run.max_iterations = 1;
  const auto cut = least_squares(problem, short_run);
  EXPECT_FALSE(cut.converged);
  EXPECT_EQ(cut.reason, "iteration limit");
}

TEST(LeastSquares, CovarianceShrinksWithData) {
  auto sd_of_intercept = [](int n) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal(0.0, 0.1);
    std::vector<double> x, y;
    for (int i = 0; i < n; ++i) {
      x.push_back(static_cast<double>(i) / (n - 1));
      y.push_back(1.0 + 0.5 * x.back() + normal(rng));
    }
    return least_squares(line_problem(x, y)).uncertainties()[0];
  };
  const double ratio = sd_of_intercept(50) / sd_of_intercept(200);
  EXPECT_NEAR(ratio, 2.0, 0.6);
}

TEST(LeastSquares, KnownSigmaGivesTextbookCovariance) {
  std::vector<double> x(25, 0.0), y(25, 0.0);
  for (std::size_t i = 0; i < 25; ++i) {
    x[i] = static_cast<double>(i);
    y[i] = 4.0 + 0.5 * x[i];
  }
  auto problem = line_problem(x, y);
  problem.sigma = Eigen::VectorXd::Constant(25, 0.3);
  const auto fit = least_squares(problem);
  Eigen::MatrixXd design(25, 2);
  for (int i = 0; i < 25; ++i) design.row(i) << 1.0, x[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd expected = (design.transpose() * design).inverse() * 0.09;
  EXPECT_NEAR((fit.covariance - expected).norm(), 0.0, 1e-5 * expected.norm());
}

TEST(LeastSquares, RankDeficientJacobianFlagged) {
  std::vector<double> y{1.0, 1.1, 0.9, 1.0};
  FitProblem problem;
  problem.observations = y.size();
  problem.initial = Eigen::Vector2d(0.0, 0.0);
  problem.residuals = [y](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(4);
    for (int i = 0; i < 4; ++i) r[i] = q[0] + q[1] - y[static_cast<std::size_t>(i)];
    return r;
  };
  const auto fit = least_squares(problem);
  EXPECT_NEAR(fit.parameters[0] + fit.parameters[1], 1.0, 1e-6);
  ASSERT_FALSE(fit.warnings.empty());
  EXPECT_NE(fit.warnings.front().find("rank-deficient"), std::string::npos);
}

TEST(LeastSquares, ProblemValidation) {
  std::vector<double> x{0, 1, 2}, y{0, 1, 2};
  auto p = line_problem(x, y);
  p.observations = 1;
  EXPECT_THROW(least_squares(p), ValidationError);
  p = line_problem(x, y);
  p.lower = Eigen::Vector2d(1.0, 1.0);
  p.upper = Eigen::Vector2d(2.0, 2.0);
  EXPECT_THROW(least_squares(p), ValidationError);
  p = line_problem(x, y);
  p.sigma = Eigen::Vector3d(1.0, 0.0, 1.0);
  EXPECT_THROW(least_squares(p), ValidationError);
  p = line_problem(x, y);
  p.residuals = [](const Eigen::VectorXd& q) {
    return Eigen::VectorXd::Constant(3, q[0] > 0.5 ? std::nan("") : 1.0 + q[1]);
  };
  p.initial = Eigen::Vector2d(1.0, 0.0);
  EXPECT_THROW(least_squares(p), NumericalError);
}

TEST(Branch, FirstMonotoneIntervalOfPaperCoupler) {
  const auto branch = first_monotone_branch(0.46, 4.3);
  EXPECT_NEAR(branch.reflectivity_at_zero, 0.15685, 1e-5);
  EXPECT_NEAR(branch.delta_beta_end, 1.13522, 1e-4);
  EXPECT_NEAR(branch.reflectivity_at_end, 1.0, 1e-9);
}

TEST(Branch, InversionIsExact) {
  for (double length : {4.3, 7.0}) {
    const auto branch = first_monotone_branch(0.46, length);
    const double lo = std::min(branch.reflectivity_at_zero, branch.reflectivity_at_end);
    const double hi = std::max(branch.reflectivity_at_zero, branch.reflectivity_at_end);
    for (int i = 0; i <= 200; ++i) {
      const double r = std::min(hi, lo + (hi - lo) * i / 200.0);
      const auto db = invert_reflectivity(branch, r);
      ASSERT_TRUE(db.has_value());
      EXPECT_GE(*db, 0.0);
      EXPECT_LE(*db, branch.delta_beta_end);
      EXPECT_NEAR(coupler_reflectivity(0.46, length, *db), r, 1e-10);
    }
    EXPECT_FALSE(invert_reflectivity(branch, lo - 0.01).has_value());
  }
}

TEST(FitDeltaN, ZeroNoiseRecoversGeneratingParameters) {
  for (const auto& truth : {testing::params_30c(), testing::params_60c()}) {
    const TemperatureSweep input{reflectivity_vs_pump(coupler(), truth, 1550.0, powers(15.0, 1.0)),
                                 truth};
    const auto fit = fit_delta_n_from_reflectivity(input, coupler(), 1550.0);
    EXPECT_TRUE(fit.fit.converged) << fit.fit.reason;
    EXPECT_NEAR(fit.params.a / truth.a, 1.0, 1e-6);
    EXPECT_NEAR(fit.params.c / truth.c, 1.0, 1e-6);
    for (const auto& point : fit.points) {
      EXPECT_NEAR(point.delta_n, delta_n_steady(truth, point.pump_power_mw), 1e-12);
    }
  }
}

TEST(FitDeltaN, NoisySlopeRecovery) {
  const auto truth = testing::params_30c();
  const double slope = truth.a / truth.b_mw;
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const TemperatureSweep input{noisy_sweep(coupler(), truth, 0.01, seed), truth};
    const auto fit = fit_delta_n_from_reflectivity(input, coupler(), 1550.0);
    if (std::abs(fit.params.a / fit.params.b_mw / slope - 1.0) < 0.05) ++good;
  }
  EXPECT_GE(good, 95);
}

TEST(FitDeltaN, AnchorAndLinearity) {
  const auto truth = testing::params_30c();
  const TemperatureSweep input{noisy_sweep(coupler(), truth, 0.01, 42), truth};
  const auto fit = fit_delta_n_from_reflectivity(input, coupler(), 1550.0);
  const double at10 = std::abs(delta_n_steady(fit.params, 10.0));
  EXPECT_GE(at10, 0.8e-4);
  EXPECT_LE(at10, 1.2e-4);
  const double end = delta_n_steady(fit.params, 15.0);
  for (double p = 0.0; p <= 15.0; p += 0.25) {
    EXPECT_LT(std::abs(delta_n_steady(fit.params, p) - end * p / 15.0), 0.05 * std::abs(end));
  }
  for (const auto& point : fit.points) {
    if (point.pump_power_mw > 0.0) EXPECT_GT(point.sigma, 0.0);
  }
}

TEST(FitDeltaN, DeterministicForIdenticalInput) {
  const auto truth = testing::params_30c();
  const TemperatureSweep input{noisy_sweep(coupler(), truth, 0.01, 9), truth};
  const auto first = fit_delta_n_from_reflectivity(input, coupler(), 1550.0);
  const auto second = fit_delta_n_from_reflectivity(input, coupler(), 1550.0);
  EXPECT_EQ(first.fit.parameters, second.fit.parameters);
  EXPECT_EQ(first.fit.covariance, second.fit.covariance);
  EXPECT_EQ(first.fit.accepted_costs, second.fit.accepted_costs);
}

TEST(FitDeltaN, OutOfBranchPointsExcluded) {
  // 7 mm: the first branch falls from R(0) = 0.994 to 0.511 and then rises
  // again, so R close to 1 is reachable only beyond it.
  const auto g = coupler(7.0);
  const auto truth = testing::params_30c();
  SweepData sweep = reflectivity_vs_pump(g, truth, 1550.0, powers(4.0, 0.5));
  sweep.sigma = std::vector<double>(sweep.size(), 1e-4);
  sweep.value[5] = 0.9999;
  const auto fit = fit_delta_n_from_reflectivity({sweep, truth}, g, 1550.0);
  EXPECT_TRUE(fit.points[5].excluded);
  int excluded = 0;
  for (const auto& point : fit.points) excluded += point.excluded ? 1 : 0;
  EXPECT_EQ(excluded, 1);
  bool warned = false;
  for (const auto& w : fit.warnings) warned = warned || w.find("excluded") != std::string::npos;
  EXPECT_TRUE(warned);
  EXPECT_NEAR(fit.params.a / truth.a, 1.0, 1e-3);
}

TEST(FitDeltaN, UnreachableReflectivityRejected) {
  const auto truth = testing::params_30c();
  SweepData sweep = reflectivity_vs_pump(coupler(), truth, 1550.0, powers(5.0, 1.0));
  sweep.value[2] = 0.10;
  EXPECT_THROW(fit_delta_n_from_reflectivity({sweep, truth}, coupler(), 1550.0), ValidationError);
  sweep = reflectivity_vs_pump(coupler(), truth, 1550.0, powers(5.0, 1.0));
  sweep.value[3] = 1.2;
  EXPECT_THROW(fit_delta_n_from_reflectivity({sweep, truth}, coupler(), 1550.0), ValidationError);
  sweep = reflectivity_vs_pump(coupler(), truth, 1550.0, powers(2.0, 1.0));
  EXPECT_THROW(fit_delta_n_from_reflectivity({sweep, truth}, coupler(), 1550.0), ValidationError);
}

FpiCavity paper_fpi() {
  FpiCavity c;
  c.material = testing::lithium_niobate();
  return c;
}

// Step of 8e-5 with a 5 s build time, switched on at 10 s.
Trace step_trace(double a = 1.6e-3) {
  const PhotorefractionParams p{a, 100.0, 0.0, 5.0, 1.0e4, 10.0, 30.0};
  return simulate_fpi_trace(paper_fpi(), PumpSchedule({{10.0, 80.0, 5.0, false}}), p, 1550.0, 30.0,
                            0.05);
}

TEST(FitFpi, ExactRecoveryWithoutNoise) {
  const auto fit = fit_fpi_trace(step_trace(), paper_fpi(), {1550.0, 30.0, 10.0});
  EXPECT_TRUE(fit.fit.converged) << fit.fit.reason;
  EXPECT_NEAR(fit.delta_n_total / -8e-5, 1.0, 1e-4);
  EXPECT_NEAR(fit.tau_build_s / 5.0, 1.0, 1e-4);
}

TEST(FitFpi, MultiplicativeNoise) {
  const Trace clean = step_trace();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  int good = 0;
  for (int draw = 0; draw < 100; ++draw) {
    Trace noisy = clean;
    for (double& v : noisy.value) v *= 1.0 + 0.02 * normal(rng);
    const auto fit = fit_fpi_trace(noisy, paper_fpi(), {1550.0, 30.0, 10.0});
    if (std::abs(fit.delta_n_total / -8e-5 - 1.0) < 0.1) ++good;
  }
  EXPECT_EQ(good, 100);
}

TEST(FitFpi, HalfPeriodCountingCrossCheck) {
  const Trace trace = step_trace();
  const int halves = count_half_periods(trace, 10.0, 5);
  const double quantum = half_period_delta_n(1550.0, 15.0);
  EXPECT_LE(std::abs(halves * quantum - 8e-5), quantum);
}

TEST(FitFpi, NoOscillationGivesBoundEstimate) {
  const auto fit = fit_fpi_trace(step_trace(1e-5), paper_fpi(), {1550.0, 30.0, 10.0});
  EXPECT_FALSE(fit.fit.converged);
  EXPECT_NE(fit.fit.reason.find("no oscillation"), std::string::npos);
  EXPECT_LT(std::abs(fit.delta_n_total), 1550e-9 / (8.0 * 15e-3));
}

TEST(FitFpi, MaskedSamplesAreIgnored) {
  Trace trace = step_trace();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.time_s[i] >= 25.0 && trace.time_s[i] <= 85.0) trace.value[i] = 0.3;
  }
  trace.mask_interval(25.0, 85.0);
  const auto fit = fit_fpi_trace(trace, paper_fpi(), {1550.0, 30.0, 10.0});
  EXPECT_NEAR(fit.delta_n_total / -8e-5, 1.0, 1e-3);
}

TEST(FitFpi, InvalidInputs) {
  auto angled = paper_fpi();
  angled.angled_facets = true;
  EXPECT_THROW(fit_fpi_trace(step_trace(), angled, {1550.0, 30.0, 10.0}), ValidationError);
  EXPECT_THROW(fit_fpi_trace(step_trace(), paper_fpi(), {1550.0, 30.0, 200.0}), ValidationError);
}

}  // namespace
}  // namespace lnpr
