#pragma once

#include <memory>
#include <optional>
#include <string>

#include "lnpr/data.hpp"
#include "lnpr/material.hpp"

namespace lnpr {

/// Parasitic Fabry-Perot formed by the two waveguide end-facets.
struct FpiCavity {
  double length_mm = 15.0;
  double facet_reflectivity_probe = 0.14;  // per facet, telecom band
  double facet_reflectivity_pump = 0.13;   // per facet, near-infrared band
  bool angled_facets = false;
  std::string mode = "fundamental";
  std::shared_ptr<const MaterialModel> material;

  void validate() const;
  double facet_reflectivity(double wavelength_nm) const;
};

/// Intentional squeezer resonator. Mirror values are power reflectivities.
struct SqueezerCavity {
  double length_mm = 15.0;
  double mirror_r1 = 0.77;
  double mirror_r2 = 0.99;
  std::string mode = "fundamental";
  std::shared_ptr<const MaterialModel> material;

  void validate() const;
};

/// Detuning in units of the cavity amplitude decay rate (half-linewidth).
struct NormalizedDetuning {
  double value = 0.0;
};

struct Finesse {
  double coefficient = 0.0;   // 4R/(1-R)^2, enters the Airy function
  double conventional = 0.0;  // pi sqrt(R)/(1-R) = FSR/FWHM
};

/// Both finesse definitions for mirror reflectivities r1, r2 (R = sqrt(r1 r2)).
Finesse finesse(double reflectivity_1, double reflectivity_2);

/// 1 / (1 + F sin^2(phase)).
double airy_transmission(double coefficient_of_finesse, double phase_rad);

/// Round-trip phase argument 2 pi L (n_eff + dn) / lambda.
double fpi_phase(const FpiCavity& cavity, double wavelength_nm,
                 double temperature_c, double delta_n);

double fpi_transmission(const FpiCavity& cavity, double wavelength_nm,
                        double temperature_c, double delta_n);

struct FpiCharacteristics {
  double free_spectral_range_pm = 0.0;
  std::optional<double> fwhm_pm;  // absent when fringes never reach half max
  Finesse finesse;
};

FpiCharacteristics fpi_characteristics(const FpiCavity& cavity,
                                       double wavelength_nm,
                                       double temperature_c);

/// Index change that moves the transmission by half an oscillation,
/// lambda / (4L).
double half_period_delta_n(double wavelength_nm, double length_mm);

/// Probe transmission sampled every `sample_period_s` from t=0 to the end of
/// the schedule, normalized to the transmission before any pumping.
Trace simulate_fpi_trace(const FpiCavity& cavity, const PumpSchedule& schedule,
                         const PhotorefractionParams& params,
                         double probe_wavelength_nm, double temperature_c,
                         double sample_period_s);

/// Resonance shift caused by `delta_n`, divided by the amplitude decay rate
/// kappa = (1 - sqrt(r1 r2)) / t_roundtrip.
NormalizedDetuning delta_n_to_detuning(const SqueezerCavity& cavity,
                                       double delta_n, double wavelength_nm,
                                       double temperature_c = 30.0);

// ---------------------------------------------------------------------------
// Detuned degenerate parametric oscillator below threshold.
//
// Intracavity mode a (single-ended, lossless, kappa = 1):
//   da/dt = -(1 + i Delta) a - sigma a^dagger + sqrt(2) a_in
//   a_out = sqrt(2) a - a_in
// The theta = 0 quadrature is the squeezed one at Delta = 0.

double opo_threshold(NormalizedDetuning detuning);

/// Vacuum-normalized noise of quadrature theta at analysis frequency omega
/// (units of kappa), mixed with vacuum as eta S + (1 - eta).
double opo_quadrature_spectrum(double pump_parameter,
                               NormalizedDetuning detuning, double omega,
                               double theta, double detection_efficiency = 1.0);

struct QuadratureExtremes {
  double squeezed = 1.0;
  double antisqueezed = 1.0;
  double squeezed_angle = 0.0;  // rad, in [0, pi)
};

/// Minimum and maximum of the spectrum over theta at fixed omega, in closed
/// form: S(theta) = A + Re(exp(-2 i theta) Z).
QuadratureExtremes opo_quadrature_extremes(double pump_parameter,
                                           NormalizedDetuning detuning,
                                           double omega,
                                           double detection_efficiency = 1.0);

struct OptimalLevels {
  double best_squeezing_db = 0.0;
  double best_antisqueezing_db = 0.0;
  double squeezing_frequency = 0.0;
  double antisqueezing_frequency = 0.0;
};

OptimalLevels opo_optimal_levels(double pump_parameter,
                                 NormalizedDetuning detuning,
                                 double detection_efficiency = 1.0);

/// Pump parameter that yields `squeezing_db` at zero detuning and zero
/// frequency with unit efficiency.
double pump_parameter_for_squeezing(double squeezing_db);

}  // namespace lnpr
