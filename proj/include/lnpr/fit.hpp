#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lnpr/cavity.hpp"
#include "lnpr/coupler.hpp"
#include "lnpr/data.hpp"
#include "lnpr/material.hpp"

namespace lnpr {

/// Maps a parameter vector to predictions minus observations.
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct FitProblem {
  ResidualFunction residuals;
  Eigen::VectorXd initial;
  Eigen::VectorXd lower;  // empty = unbounded
  Eigen::VectorXd upper;
  /// Per-point standard deviations; residuals are divided by them.
  std::optional<Eigen::VectorXd> sigma;
  std::size_t observations = 0;

  void validate() const;
};

struct FitTolerances {
  double step = 1e-10;
  double gradient = 1e-10;
  int max_iterations = 200;
};

struct FitResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string reason;
  std::vector<double> accepted_costs;  // weighted RSS after each accepted step
  std::vector<std::string> warnings;

  Eigen::VectorXd uncertainties() const;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) over a box. Jacobians by
/// forward differences. Covariance is (J^T J)^-1, scaled by the reduced
/// chi-square when no sigma is supplied.
FitResult least_squares(const FitProblem& problem,
                        const FitTolerances& tolerances = {});

// ---------------------------------------------------------------------------
// Coupler reflectivity -> photorefractive index shift.

struct ReflectivityBranch {
  double coupling_constant_per_mm = 0.0;
  double length_mm = 0.0;
  double delta_beta_end = 0.0;  // end of the first monotone interval
  double reflectivity_at_zero = 0.0;
  double reflectivity_at_end = 0.0;
};

ReflectivityBranch first_monotone_branch(double coupling_constant_per_mm,
                                         double length_mm);

/// |delta beta| on the first monotone branch with the given reflectivity,
/// or nullopt if R lies outside the branch.
std::optional<double> invert_reflectivity(const ReflectivityBranch& branch,
                                          double reflectivity);

struct DeltaNPoint {
  double pump_power_mw = 0.0;
  double delta_n = 0.0;  // signed, <= 0
  double sigma = 0.0;    // propagated from the reflectivity uncertainty
  bool excluded = false;
};

struct DeltaNFit {
  PhotorefractionParams params;
  std::vector<DeltaNPoint> points;
  FitResult fit;
  std::vector<std::string> warnings;
};

struct TemperatureSweep {
  SweepData sweep;
  /// Supplies b, the time constants and the temperature. b is held fixed
  /// because -aP/(b+cP) is invariant under a common scaling of (a, b, c).
  PhotorefractionParams prior;
};

DeltaNFit fit_delta_n_from_reflectivity(const TemperatureSweep& sweep,
                                        const CouplerGeometry& geometry,
                                        double probe_wavelength_nm);

std::vector<DeltaNFit> fit_delta_n_from_reflectivity(
    const std::vector<TemperatureSweep>& sweeps,
    const CouplerGeometry& geometry, double probe_wavelength_nm);

// ---------------------------------------------------------------------------
// FPI time trace -> total index excursion.

struct FpiTraceKnowns {
  double probe_wavelength_nm = 1550.0;
  double temperature_c = 30.0;
  double pump_on_s = 0.0;
};

struct FpiTraceFit {
  double delta_n_total = 0.0;  // <= 0
  double tau_build_s = 0.0;
  double phase_offset_rad = 0.0;
  FitResult fit;
};

/// Normalized transmission for a single pump-on step:
/// phase(t) = phi0 + 2 pi L dn_total (1 - exp(-(t - t_on)/tau)) / lambda.
double fpi_step_model(double coefficient_of_finesse, double length_mm,
                      double wavelength_nm, double delta_n_total,
                      double tau_build_s, double phase_offset_rad,
                      double pump_on_s, double time_s);

/// Number of transmission extrema after the pump onset (each separates two
/// half-oscillations). Smooths over `smoothing` samples first.
int count_half_periods(const Trace& trace, double pump_on_s,
                       std::size_t smoothing = 1);

FpiTraceFit fit_fpi_trace(const Trace& trace, const FpiCavity& cavity,
                          const FpiTraceKnowns& known);

}  // namespace lnpr
