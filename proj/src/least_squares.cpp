#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lnpr/error.hpp"
#include "lnpr/fit.hpp"

namespace lnpr {

namespace {

constexpr double kInitialDamping = 1e-6;
constexpr double kMaxDamping = 1e16;
constexpr double kRelativeStep = 1e-6;
constexpr double kAbsoluteStep = 1e-12;

}  // namespace

void FitProblem::validate() const {
  const auto n = initial.size();
  if (!residuals) throw ValidationError("fit: no residual function");
  if (n == 0) throw ValidationError("fit: empty parameter vector");
  if (observations == 0) throw ValidationError("fit: no data");
  if (observations < static_cast<std::size_t>(n)) {
    throw ValidationError("fit: fewer data points than parameters");
  }
  if ((lower.size() != 0 && lower.size() != n) || (upper.size() != 0 && upper.size() != n)) {
    throw ValidationError("fit: bound vectors do not match the parameter count");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!std::isfinite(initial[j])) throw ValidationError("fit: non-finite initial guess");
    if ((lower.size() && initial[j] < lower[j]) || (upper.size() && initial[j] > upper[j])) {
      throw ValidationError("fit: initial guess outside bounds (parameter " +
                            std::to_string(j) + ")");
    }
  }
  if (sigma) {
    if (static_cast<std::size_t>(sigma->size()) != observations) {
      throw ValidationError("fit: sigma length differs from the data length");
    }
    if (!(sigma->array() > 0.0).all()) throw ValidationError("fit: sigma must be > 0");
  }
}

Eigen::VectorXd FitResult::uncertainties() const {
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

FitResult least_squares(const FitProblem& problem, const FitTolerances& tolerances) {
  problem.validate();
  const auto n = problem.initial.size();
  const auto m = static_cast<Eigen::Index>(problem.observations);
  const double inf = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd lower =
      problem.lower.size() ? problem.lower : Eigen::VectorXd::Constant(n, -inf);
  const Eigen::VectorXd upper =
      problem.upper.size() ? problem.upper : Eigen::VectorXd::Constant(n, inf);

  auto weighted = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r = problem.residuals(p);
    if (r.size() != m) throw ValidationError("fit: residual length differs from the data length");
    if (problem.sigma) r.array() /= problem.sigma->array();
    if (!r.allFinite()) throw NumericalError("fit: non-finite residual");
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p, const Eigen::VectorXd& r) {
    Eigen::MatrixXd j(m, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      double h = std::max(kRelativeStep * std::abs(p[k]), kAbsoluteStep);
      if (p[k] + h > upper[k]) h = -h;
      Eigen::VectorXd shifted = p;
      shifted[k] += h;
      j.col(k) = (weighted(shifted) - r) / (shifted[k] - p[k]);
    }
    return j;
  };

  FitResult result;
  Eigen::VectorXd p = problem.initial;
  Eigen::VectorXd r = weighted(p);
  double cost = r.squaredNorm();
  result.accepted_costs.push_back(cost);
  double damping = kInitialDamping;
  Eigen::MatrixXd j;

  for (int iteration = 1; iteration <= tolerances.max_iterations; ++iteration) {
    result.iterations = iteration;
    j = jacobian(p, r);
    const Eigen::VectorXd gradient = j.transpose() * r;
    if (gradient.lpNorm<Eigen::Infinity>() <= tolerances.gradient) {
      result.converged = true;
      result.reason = "gradient tolerance";
      break;
    }
    const Eigen::MatrixXd normal = j.transpose() * j;
    Eigen::VectorXd scale = normal.diagonal();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!(scale[k] > 0.0)) scale[k] = 1.0;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal() += damping * scale;
      const Eigen::VectorXd delta = damped.ldlt().solve(-gradient);
      if (!delta.allFinite()) throw NumericalError("fit: singular damped normal equations");

      const Eigen::VectorXd trial = (p + delta).cwiseMax(lower).cwiseMin(upper);
      const double step = (trial - p).norm();
      if (step <= tolerances.step * (p.norm() + tolerances.step)) {
        result.converged = true;
        result.reason = "step tolerance";
        break;
      }
      const Eigen::VectorXd trial_r = weighted(trial);
      const double trial_cost = trial_r.squaredNorm();
      if (trial_cost < cost) {
        p = trial;
        r = trial_r;
        cost = trial_cost;
        result.accepted_costs.push_back(cost);
        damping = std::max(damping / 10.0, 1e-300);
        accepted = true;
      } else {
        damping *= 10.0;
        if (damping > kMaxDamping) {
          Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(j);
          if (qr.rank() < n) {
            throw NumericalError("fit: singular Jacobian with maximal damping");
          }
          result.reason = "no descent at maximal damping";
          break;
        }
      }
    }
    if (result.converged || !accepted) break;
  }
  if (!result.converged && result.reason.empty()) result.reason = "iteration limit";

  j = jacobian(p, r);
  Eigen::MatrixXd covariance =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(j.transpose() * j).pseudoInverse();
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(j).rank() < n) {
    result.warnings.push_back("rank-deficient Jacobian; covariance from pseudo-inverse");
  }
  if (!problem.sigma && m > n) covariance *= cost / static_cast<double>(m - n);
  result.covariance = 0.5 * (covariance + covariance.transpose());
  result.parameters = p;
  result.residual_norm = std::sqrt(cost);
  return result;
}

}  // namespace lnpr
