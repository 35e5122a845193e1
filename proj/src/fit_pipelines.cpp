#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lnpr/error.hpp"
#include "lnpr/fit.hpp"

namespace lnpr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kBranchScanSteps = 20000;
constexpr double kClampSigmas = 3.0;
constexpr double kDefaultReflectivityTolerance = 0.01;

double wavelength_mm(double wavelength_nm) { return wavelength_nm * 1e-6; }

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Golden-section search for the extremum of R on [lo, hi]; `sign` is +1 for a
// maximum, -1 for a minimum.
double refine_extremum(double k, double length, double lo, double hi, double sign) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double x) { return -sign * coupler_reflectivity(k, length, x); };
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

double branch_scale(double k, double length) {
  return std::max(2.0 * k, 2.0 * kPi / length);
}

// Smallest reflectivity over all mismatches (R tends to 1 for large ones).
double global_min_reflectivity(double k, double length) {
  const double top = 50.0 * branch_scale(k, length);
  double best = coupler_reflectivity(k, length, 0.0);
  const int steps = 50 * kBranchScanSteps / 10;
  for (int i = 1; i <= steps; ++i) {
    best = std::min(best, coupler_reflectivity(k, length, top * i / steps));
  }
  return best;
}

}  // namespace

ReflectivityBranch first_monotone_branch(double coupling_constant_per_mm, double length_mm) {
  if (!(coupling_constant_per_mm > 0.0) || !(length_mm > 0.0)) {
    throw ValidationError("first_monotone_branch: k and L must be > 0");
  }
  const double k = coupling_constant_per_mm;
  const double top = 50.0 * branch_scale(k, length_mm);
  const double h = top / (50.0 * kBranchScanSteps / 10.0);

  ReflectivityBranch branch{k, length_mm, 0.0, coupler_reflectivity(k, length_mm, 0.0), 0.0};
  double prev = branch.reflectivity_at_zero;
  double direction = 0.0;
  double x = 0.0;
  while (x < top) {
    const double next_x = x + h;
    const double next = coupler_reflectivity(k, length_mm, next_x);
    const double d = next - prev;
    if (direction == 0.0) {
      if (d != 0.0) direction = d > 0.0 ? 1.0 : -1.0;
    } else if (d * direction < 0.0) {
      const double end = refine_extremum(k, length_mm, std::max(0.0, x - h), next_x, direction);
      branch.delta_beta_end = end;
      branch.reflectivity_at_end = coupler_reflectivity(k, length_mm, end);
      return branch;
    }
    x = next_x;
    prev = next;
  }
  branch.delta_beta_end = top;
  branch.reflectivity_at_end = coupler_reflectivity(k, length_mm, top);
  return branch;
}

std::optional<double> invert_reflectivity(const ReflectivityBranch& branch, double reflectivity) {
  const double lo = std::min(branch.reflectivity_at_zero, branch.reflectivity_at_end);
  const double hi = std::max(branch.reflectivity_at_zero, branch.reflectivity_at_end);
  if (!(reflectivity >= lo && reflectivity <= hi)) return std::nullopt;
  if (reflectivity == branch.reflectivity_at_zero) return 0.0;
  if (reflectivity == branch.reflectivity_at_end) return branch.delta_beta_end;
  return bisect(
      [&](double x) {
        return coupler_reflectivity(branch.coupling_constant_per_mm, branch.length_mm, x) -
               reflectivity;
      },
      0.0, branch.delta_beta_end);
}

DeltaNFit fit_delta_n_from_reflectivity(const TemperatureSweep& input,
                                        const CouplerGeometry& geometry,
                                        double probe_wavelength_nm) {
  geometry.validate();
  input.prior.validate();
  SweepData sweep = input.sweep;
  sweep.validate();
  if (sweep.size() < 4) throw ValidationError("fit-dn: a sweep needs at least 4 points");

  const double temperature = input.prior.temperature_c;
  const double k = geometry.coupling_constant(temperature);
  const double length = geometry.interaction_length_mm;
  const ReflectivityBranch branch = first_monotone_branch(k, length);
  const double r_floor = global_min_reflectivity(k, length);
  const double to_index = wavelength_mm(probe_wavelength_nm) / (2.0 * kPi);
  const double r_lo = std::min(branch.reflectivity_at_zero, branch.reflectivity_at_end);
  const double r_hi = std::max(branch.reflectivity_at_zero, branch.reflectivity_at_end);

  auto clamped_index = [&](double r) {
    return -to_index * *invert_reflectivity(branch, std::clamp(r, r_lo, r_hi));
  };

  DeltaNFit out;
  out.params = input.prior;
  const bool have_sigma = sweep.sigma.has_value();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double p = sweep.abscissa[i];
    const double r = sweep.value[i];
    const double sigma_r = have_sigma ? (*sweep.sigma)[i] : kDefaultReflectivityTolerance;
    const double tolerance = have_sigma ? kClampSigmas * sigma_r : sigma_r;
    DeltaNPoint point{p, 0.0, 0.0, false};

    std::ostringstream where;
    where << "T = " << temperature << " C, point " << i + 1 << " (P = " << p << " mW, R = " << r
          << ")";
    if (r < r_floor - tolerance || r > 1.0 + tolerance) {
      throw ValidationError("fit-dn: reflectivity unreachable for any mismatch at " +
                            where.str());
    }
    if (r >= r_lo && r <= r_hi) {
      point.delta_n = -to_index * *invert_reflectivity(branch, r);
    } else {
      const bool near_zero_side = std::abs(r - branch.reflectivity_at_zero) <
                                  std::abs(r - branch.reflectivity_at_end);
      const double edge = near_zero_side ? branch.reflectivity_at_zero : branch.reflectivity_at_end;
      if (std::abs(r - edge) <= tolerance) {
        point.delta_n = clamped_index(r);
        if (!near_zero_side) out.warnings.push_back("clamped to branch end at " + where.str());
      } else {
        point.excluded = true;
        out.warnings.push_back("outside the first monotone branch, excluded: " + where.str());
      }
    }
    if (have_sigma && !point.excluded) {
      point.sigma = 0.5 * std::abs(clamped_index(r + sigma_r) - clamped_index(r - sigma_r));
    }
    out.points.push_back(point);
  }

  if (!sweep.abscissa.empty() && sweep.abscissa.front() == 0.0) {
    const double r0 = sweep.value.front();
    const double tol = have_sigma ? kClampSigmas * sweep.sigma->front()
                                  : kDefaultReflectivityTolerance;
    if (std::abs(r0 - branch.reflectivity_at_zero) > tol) {
      out.warnings.push_back("zero-pump reflectivity disagrees with the geometry");
    }
  }

  std::vector<DeltaNPoint> used;
  for (const auto& point : out.points) {
    if (!point.excluded) used.push_back(point);
  }
  if (used.size() < 2) throw ValidationError("fit-dn: fewer than 2 usable points");

  bool weighted = have_sigma;
  for (const auto& point : used) weighted = weighted && point.sigma > 0.0;

  const auto m = static_cast<Eigen::Index>(used.size());
  Eigen::VectorXd power(m), dn(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    power[i] = used[static_cast<std::size_t>(i)].pump_power_mw;
    dn[i] = used[static_cast<std::size_t>(i)].delta_n;
  }
  const double b = input.prior.b_mw;
  double scale = dn.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) scale = 1.0;

  const double p2 = power.squaredNorm();
  const double slope = p2 > 0.0 ? power.dot(dn) / p2 : 0.0;

  FitProblem problem;
  problem.observations = used.size();
  problem.initial = Eigen::Vector2d(std::max(-slope * b, 0.0), std::max(input.prior.c, 0.0));
  problem.lower = Eigen::Vector2d(0.0, 0.0);
  problem.upper = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  if (weighted) {
    Eigen::VectorXd sigma(m);
    for (Eigen::Index i = 0; i < m; ++i) sigma[i] = used[static_cast<std::size_t>(i)].sigma;
    problem.sigma = sigma;
    scale = 1.0;
  }
  problem.residuals = [power, dn, b, scale](const Eigen::VectorXd& q) {
    const Eigen::ArrayXd model = -q[0] * power.array() / (b + q[1] * power.array());
    return Eigen::VectorXd((model - dn.array()) / scale);
  };

  out.fit = least_squares(problem);
  if (!weighted) {
    out.fit.residual_norm *= scale;
    for (double& cost : out.fit.accepted_costs) cost *= scale * scale;
  }
  out.params.a = out.fit.parameters[0];
  out.params.c = out.fit.parameters[1];
  for (const auto& w : out.fit.warnings) out.warnings.push_back(w);
  return out;
}

std::vector<DeltaNFit> fit_delta_n_from_reflectivity(const std::vector<TemperatureSweep>& sweeps,
                                                     const CouplerGeometry& geometry,
                                                     double probe_wavelength_nm) {
  std::vector<DeltaNFit> out;
  out.reserve(sweeps.size());
  for (const auto& sweep : sweeps) {
    out.push_back(fit_delta_n_from_reflectivity(sweep, geometry, probe_wavelength_nm));
  }
  return out;
}

double fpi_step_model(double coefficient_of_finesse, double length_mm, double wavelength_nm,
                      double delta_n_total, double tau_build_s, double phase_offset_rad,
                      double pump_on_s, double time_s) {
  double phase = phase_offset_rad;
  if (time_s > pump_on_s) {
    const double grown = -std::expm1(-(time_s - pump_on_s) / tau_build_s);
    phase += 2.0 * kPi * length_mm * 1e6 * delta_n_total * grown / wavelength_nm;
  }
  return airy_transmission(coefficient_of_finesse, phase) /
         airy_transmission(coefficient_of_finesse, phase_offset_rad);
}

int count_half_periods(const Trace& trace, double pump_on_s, std::size_t smoothing) {
  std::vector<double> values;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.time_s[i] >= pump_on_s && !trace.is_masked(i)) values.push_back(trace.value[i]);
  }
  const std::size_t w = std::max<std::size_t>(smoothing, 1);
  if (values.size() < w + 2) return 0;
  std::vector<double> smooth;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= w) sum -= values[i - w];
    if (i + 1 >= w) smooth.push_back(sum / static_cast<double>(w));
  }
  const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
  const double threshold = 0.1 * (*hi - *lo);
  if (!(threshold > 0.0)) return 0;

  // Hysteresis: an extremum counts once the signal has retreated from it by
  // more than the threshold.
  int count = 0;
  int direction = 0;
  double extreme = smooth.front();
  for (double v : smooth) {
    if (direction >= 0 && v > extreme) {
      extreme = v;
      if (direction == 0 && v - smooth.front() > threshold) direction = 1;
    } else if (direction <= 0 && v < extreme) {
      extreme = v;
      if (direction == 0 && smooth.front() - v > threshold) direction = -1;
    }
    if (direction == 1 && extreme - v > threshold) {
      ++count;
      direction = -1;
      extreme = v;
    } else if (direction == -1 && v - extreme > threshold) {
      ++count;
      direction = 1;
      extreme = v;
    }
  }
  return count;
}

FpiTraceFit fit_fpi_trace(const Trace& trace, const FpiCavity& cavity, const FpiTraceKnowns& known) {
  trace.validate();
  cavity.validate();
  if (cavity.angled_facets) throw ValidationError("fit-fpi: cavity with angled facets has no fringes");
  if (!(known.probe_wavelength_nm > 0.0)) throw ValidationError("fit-fpi: probe wavelength must be > 0");

  std::vector<double> t, y;
  double baseline = 0.0;
  std::size_t before = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.is_masked(i)) continue;
    t.push_back(trace.time_s[i]);
    y.push_back(trace.value[i]);
    if (trace.time_s[i] <= known.pump_on_s) {
      baseline += trace.value[i];
      ++before;
    }
  }
  if (t.size() < 8) throw ValidationError("fit-fpi: fewer than 8 unmasked samples");
  if (t.back() <= known.pump_on_s) throw ValidationError("fit-fpi: trace ends before the pump onset");
  if (before > 0) {
    baseline /= static_cast<double>(before);
    if (!(baseline > 0.0)) throw ValidationError("fit-fpi: non-positive pre-pump baseline");
    for (double& v : y) v /= baseline;
  }

  const double r = cavity.facet_reflectivity(known.probe_wavelength_nm);
  const double coefficient = finesse(r, r).coefficient;
  if (coefficient == 0.0) throw ValidationError("fit-fpi: zero facet reflectivity");
  const double length = cavity.length_mm;
  const double lambda = known.probe_wavelength_nm;
  const double quantum = half_period_delta_n(lambda, length);
  const double span = t.back() - known.pump_on_s;

  const auto m = static_cast<Eigen::Index>(t.size());
  // Parameters: (dn_total / quantum, tau, phase offset).
  auto residuals = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd res(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto j = static_cast<std::size_t>(i);
      res[i] = fpi_step_model(coefficient, length, lambda, q[0] * quantum, q[1], q[2],
                              known.pump_on_s, t[j]) -
               y[j];
    }
    return res;
  };

  // Coarse grid on a subsampled trace, then local refinement from the best
  // few grid points.
  const std::size_t stride = std::max<std::size_t>(1, t.size() / 400);
  std::vector<double> tg, yg;
  for (std::size_t j = 0; j < t.size(); j += stride) {
    tg.push_back(t[j]);
    yg.push_back(y[j]);
  }
  const double phase_per_quantum = kPi / 2.0;
  const int halves = count_half_periods(trace, known.pump_on_s, 5);
  struct Start {
    double cost;
    Eigen::Vector3d q;
  };
  std::vector<Start> starts;
  std::vector<double> grown(tg.size());
  for (int it = 0; it < 12; ++it) {
    const double tau = span / 128.0 * std::pow(2.0, 0.6 * it);
    for (std::size_t j = 0; j < tg.size(); ++j) {
      grown[j] = tg[j] > known.pump_on_s ? -std::expm1(-(tg[j] - known.pump_on_s) / tau) : 0.0;
    }
    // Noise inflates the extremum count, so the grid spans everything below it.
    const int grid_top = 10 * (halves + 2);
    for (int id = 1; id <= grid_top; ++id) {
      const double dq = 0.1 * id;
      for (int ip = 1; ip < 24; ++ip) {
        const double phase = kPi * ip / 24.0;
        const double norm = airy_transmission(coefficient, phase);
        double cost = 0.0;
        for (std::size_t j = 0; j < tg.size(); ++j) {
          const double d =
              airy_transmission(coefficient, phase - phase_per_quantum * dq * grown[j]) / norm -
              yg[j];
          cost += d * d;
        }
        starts.push_back({cost, Eigen::Vector3d(-dq, tau, phase)});
      }
    }
  }
  std::sort(starts.begin(), starts.end(),
            [](const Start& a, const Start& b) { return a.cost < b.cost; });

  FitProblem problem;
  problem.residuals = residuals;
  problem.observations = t.size();
  problem.lower = Eigen::Vector3d(-1e-2 / quantum, 1e-6 * span, 0.0);
  problem.upper = Eigen::Vector3d(0.0, 100.0 * span, kPi);

  std::optional<FitResult> best;
  const std::size_t tries = std::min<std::size_t>(starts.size(), 6);
  for (std::size_t s = 0; s < tries; ++s) {
    problem.initial = starts[s].q;
    FitResult candidate = least_squares(problem);
    if (!best || candidate.residual_norm < best->residual_norm) best = std::move(candidate);
  }
  if (!best) {
    problem.initial = Eigen::Vector3d(0.0, span / 4.0, kPi / 2.0);
    best = least_squares(problem);
  }

  FpiTraceFit out;
  out.fit = *best;
  Eigen::Vector3d to_physical(quantum, 1.0, 1.0);
  out.fit.parameters = out.fit.parameters.cwiseProduct(to_physical);
  out.fit.covariance =
      to_physical.asDiagonal() * out.fit.covariance * to_physical.asDiagonal();
  out.delta_n_total = out.fit.parameters[0];
  out.tau_build_s = out.fit.parameters[1];
  out.phase_offset_rad = out.fit.parameters[2];
  if (std::abs(out.delta_n_total) < lambda / (8.0 * length * 1e6)) {
    out.fit.converged = false;
    out.fit.reason = "no oscillation detected; delta_n_total is an upper-bound estimate";
  }
  return out;
}

}  // namespace lnpr
