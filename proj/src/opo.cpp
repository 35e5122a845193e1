#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "lnpr/cavity.hpp"
#include "lnpr/error.hpp"

namespace lnpr {

namespace {

using cd = std::complex<double>;
using Matrix2 = std::array<std::array<cd, 2>, 2>;

constexpr double kOmegaMax = 20.0;
constexpr double kOmegaStep = 0.05;

void check_inputs(double sigma, NormalizedDetuning detuning, double eta) {
  if (!std::isfinite(detuning.value)) throw ValidationError("detuning must be finite");
  if (!(sigma >= 0.0)) throw ValidationError("pump parameter must be >= 0");
  if (!(sigma < opo_threshold(detuning))) {
    throw ValidationError("pump parameter at or above the detuned threshold");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw ValidationError("detection efficiency must lie in [0, 1]");
  }
}

// Input-output transfer G = 2 M^-1 - 1 acting on (a_in(w), a_in^dagger(-w)).
Matrix2 transfer(double sigma, double detuning, double omega) {
  const cd i(0.0, 1.0);
  const cd m11 = 1.0 + i * detuning - i * omega;
  const cd m22 = 1.0 - i * detuning - i * omega;
  const cd det = m11 * m22 - sigma * sigma;
  Matrix2 g;
  g[0][0] = 2.0 * m22 / det - 1.0;
  g[0][1] = -2.0 * sigma / det;
  g[1][0] = -2.0 * sigma / det;
  g[1][1] = 2.0 * m11 / det - 1.0;
  return g;
}

struct ThetaForm {
  double mean;  // A
  cd modulation;  // Z
};

ThetaForm theta_form(double sigma, double detuning, double omega) {
  const auto g = transfer(sigma, detuning, omega);
  const double mean = 0.5 * (std::norm(g[0][0]) + std::norm(g[0][1]) +
                             std::norm(g[1][0]) + std::norm(g[1][1]));
  const cd z = g[0][0] * std::conj(g[1][0]) + g[0][1] * std::conj(g[1][1]);
  return {mean, z};
}

template <class F>
double golden_section_min(F&& f, double lo, double hi, int iterations = 80) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int k = 0; k < iterations && hi - lo > 1e-12; ++k) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

// Grid scan of f over [0, kOmegaMax], then golden-section refinement in the
// neighbouring cells. Returns the minimizing omega.
template <class F>
double minimize_over_omega(F&& f) {
  const int cells = static_cast<int>(std::lround(kOmegaMax / kOmegaStep));
  int best = 0;
  double best_value = f(0.0);
  for (int k = 1; k <= cells; ++k) {
    const double v = f(k * kOmegaStep);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  const double lo = std::max(0, best - 1) * kOmegaStep;
  const double hi = std::min(cells, best + 1) * kOmegaStep;
  const double refined = golden_section_min(f, lo, hi);
  const double candidates[] = {refined, best * kOmegaStep, lo};
  double arg = candidates[0];
  double value = f(arg);
  for (double c : candidates) {
    if (f(c) < value) {
      value = f(c);
      arg = c;
    }
  }
  return arg;
}

}  // namespace

double opo_threshold(NormalizedDetuning detuning) {
  return std::sqrt(1.0 + detuning.value * detuning.value);
}

double opo_quadrature_spectrum(double pump_parameter, NormalizedDetuning detuning,
                               double omega, double theta, double detection_efficiency) {
  check_inputs(pump_parameter, detuning, detection_efficiency);
  const auto form = theta_form(pump_parameter, detuning.value, omega);
  const double s =
      form.mean + std::real(std::exp(cd(0.0, -2.0 * theta)) * form.modulation);
  return detection_efficiency * s + (1.0 - detection_efficiency);
}

QuadratureExtremes opo_quadrature_extremes(double pump_parameter,
                                           NormalizedDetuning detuning, double omega,
                                           double detection_efficiency) {
  check_inputs(pump_parameter, detuning, detection_efficiency);
  const auto form = theta_form(pump_parameter, detuning.value, omega);
  const double spread = std::abs(form.modulation);
  const double eta = detection_efficiency;
  QuadratureExtremes out;
  out.squeezed = eta * (form.mean - spread) + (1.0 - eta);
  out.antisqueezed = eta * (form.mean + spread) + (1.0 - eta);
  double angle = 0.5 * (std::arg(form.modulation) - std::numbers::pi);
  angle = std::fmod(angle, std::numbers::pi);
  if (angle < 0.0) angle += std::numbers::pi;
  out.squeezed_angle = angle;
  return out;
}

OptimalLevels opo_optimal_levels(double pump_parameter, NormalizedDetuning detuning,
                                 double detection_efficiency) {
  check_inputs(pump_parameter, detuning, detection_efficiency);
  auto squeezed = [&](double w) {
    return opo_quadrature_extremes(pump_parameter, detuning, w, detection_efficiency)
        .squeezed;
  };
  auto negative_antisqueezed = [&](double w) {
    return -opo_quadrature_extremes(pump_parameter, detuning, w, detection_efficiency)
                .antisqueezed;
  };
  OptimalLevels out;
  out.squeezing_frequency = minimize_over_omega(squeezed);
  out.antisqueezing_frequency = minimize_over_omega(negative_antisqueezed);
  out.best_squeezing_db = 10.0 * std::log10(squeezed(out.squeezing_frequency));
  out.best_antisqueezing_db =
      10.0 * std::log10(-negative_antisqueezed(out.antisqueezing_frequency));
  return out;
}

double pump_parameter_for_squeezing(double squeezing_db) {
  if (!(squeezing_db <= 0.0)) {
    throw ValidationError("squeezing level must be <= 0 dB");
  }
  // At zero detuning and frequency S = ((1 - sigma) / (1 + sigma))^2.
  const double r = std::pow(10.0, squeezing_db / 20.0);
  return (1.0 - r) / (1.0 + r);
}

}  // namespace lnpr
