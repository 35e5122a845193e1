#pragma once

#include <map>
#include <span>

#include "lnpr/data.hpp"
#include "lnpr/material.hpp"

namespace lnpr {

/// Evanescent directional coupler. The coupling constant is characterized
/// per chip temperature; lookups require an exact temperature match.
struct CouplerGeometry {
  std::map<double, double> coupling_constant_per_mm;  // temperature C -> k
  double interaction_length_mm = 4.3;
  double waveguide_separation_um = 14.0;
  double design_wavelength_nm = 1550.0;

  double coupling_constant(double temperature_c) const;
  void validate() const;

  bool operator==(const CouplerGeometry&) const = default;
};

struct HomodyneConfig {
  double reflectivity = 0.5;
  double lo_amplitude_sq = 1.0;
  double squeezing_parameter = 0.0;
  double phase_rad = 0.0;
};

/// pi / (2k).
double coupling_length(double coupling_constant_per_mm);

/// Fraction of probe power left in the injected arm for propagation-constant
/// mismatch `delta_beta` (mm^-1).
double coupler_reflectivity(double coupling_constant_per_mm, double length_mm,
                            double delta_beta_per_mm);
double coupler_reflectivity(const CouplerGeometry& geometry,
                            double temperature_c, double delta_beta_per_mm);

/// 2 pi |dn| / lambda in mm^-1.
double delta_beta_from_index(double delta_n, double wavelength_nm);

/// Interaction length giving R = 1/2 at zero mismatch: (2m + 1) L_c / 2.
double balanced_length(double coupling_constant_per_mm, int order = 1);

/// Reflectivity at each pump power with the pump confined to the reflection
/// arm.
SweepData reflectivity_vs_pump(const CouplerGeometry& geometry,
                               const PhotorefractionParams& params,
                               double probe_wavelength_nm,
                               std::span<const double> pump_powers_mw);

/// Difference-photocurrent variance of a homodyne detector with an
/// unbalanced splitter (leading order in the LO amplitude).
double homodyne_noise(const HomodyneConfig& config);

/// e^{-2s} = 10^{dB/10}; negative dB means squeezing.
double squeezing_parameter_from_db(double squeezing_db);

/// Measured squeezing (dB) for each residual pump power in a homodyne coupler
/// that is balanced without pump. The shot-noise reference is taken with the
/// splitter at R(0) or, when `pump_during_calibration`, at R(P).
SweepData measured_squeezing_vs_residual_pump(
    const CouplerGeometry& geometry, const PhotorefractionParams& params,
    double probe_wavelength_nm, double initial_squeezing_db,
    std::span<const double> pump_powers_mw, bool pump_during_calibration);

}  // namespace lnpr
