#include "lnpr/coupler.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "lnpr/error.hpp"

namespace lnpr {

double CouplerGeometry::coupling_constant(double temperature_c) const {
  for (const auto& [t, k] : coupling_constant_per_mm) {
    if (std::abs(t - temperature_c) < 1e-6) return k;
  }
  std::ostringstream msg;
  msg << "coupler: no coupling constant characterized at " << temperature_c << " C";
  throw ValidationError(msg.str());
}

void CouplerGeometry::validate() const {
  if (coupling_constant_per_mm.empty()) {
    throw ValidationError("coupler: no coupling constants");
  }
  for (const auto& [t, k] : coupling_constant_per_mm) {
    if (!(k > 0.0) || !std::isfinite(k)) {
      throw ValidationError("coupler: coupling constant must be > 0");
    }
  }
  if (!(interaction_length_mm > 0.0) || !std::isfinite(interaction_length_mm)) {
    throw ValidationError("coupler: interaction length must be > 0");
  }
}

double coupling_length(double coupling_constant_per_mm) {
  if (!(coupling_constant_per_mm > 0.0)) {
    throw ValidationError("coupling constant must be > 0");
  }
  return std::numbers::pi / (2.0 * coupling_constant_per_mm);
}

double coupler_reflectivity(double coupling_constant_per_mm, double length_mm,
                            double delta_beta_per_mm) {
  const double k2 = 4.0 * coupling_constant_per_mm * coupling_constant_per_mm;
  const double q = k2 + delta_beta_per_mm * delta_beta_per_mm;
  const double s = std::sin(length_mm * std::sqrt(q) / 2.0);
  return 1.0 - k2 / q * s * s;
}

double coupler_reflectivity(const CouplerGeometry& geometry, double temperature_c,
                            double delta_beta_per_mm) {
  return coupler_reflectivity(geometry.coupling_constant(temperature_c),
                              geometry.interaction_length_mm, delta_beta_per_mm);
}

double delta_beta_from_index(double delta_n, double wavelength_nm) {
  return 2.0 * std::numbers::pi * std::abs(delta_n) / (wavelength_nm * 1e-6);
}

double balanced_length(double coupling_constant_per_mm, int order) {
  if (order < 0) throw ValidationError("balanced_length: order must be >= 0");
  return (2 * order + 1) * coupling_length(coupling_constant_per_mm) / 2.0;
}

SweepData reflectivity_vs_pump(const CouplerGeometry& geometry,
                               const PhotorefractionParams& params,
                               double probe_wavelength_nm,
                               std::span<const double> pump_powers_mw) {
  geometry.validate();
  params.validate();
  const double k = geometry.coupling_constant(params.temperature_c);
  SweepData out;
  out.abscissa_name = "pump_power_mW";
  out.value_name = "reflectivity";
  for (double p : pump_powers_mw) {
    const double dbeta =
        delta_beta_from_index(delta_n_steady(params, p), probe_wavelength_nm);
    out.abscissa.push_back(p);
    out.value.push_back(coupler_reflectivity(k, geometry.interaction_length_mm, dbeta));
  }
  out.sort_by_abscissa();
  return out;
}

double homodyne_noise(const HomodyneConfig& config) {
  const double r = config.reflectivity;
  if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("homodyne: reflectivity must lie in [0, 1]");
  if (!(config.lo_amplitude_sq > 0.0)) {
    throw ValidationError("homodyne: LO amplitude must be > 0");
  }
  if (!(config.squeezing_parameter >= 0.0)) {
    throw ValidationError("homodyne: squeezing parameter must be >= 0");
  }
  const double t = 1.0 - r;
  const double s = std::sin(config.phase_rad);
  const double c = std::cos(config.phase_rad);
  const double quadrature = std::exp(2.0 * config.squeezing_parameter) * s * s +
                            std::exp(-2.0 * config.squeezing_parameter) * c * c;
  return config.lo_amplitude_sq * ((t - r) * (t - r) + 4.0 * r * t * quadrature);
}

double squeezing_parameter_from_db(double squeezing_db) {
  if (!(squeezing_db <= 0.0)) throw ValidationError("squeezing level must be <= 0 dB");
  return -squeezing_db * std::log(10.0) / 20.0;
}

SweepData measured_squeezing_vs_residual_pump(
    const CouplerGeometry& geometry, const PhotorefractionParams& params,
    double probe_wavelength_nm, double initial_squeezing_db,
    std::span<const double> pump_powers_mw, bool pump_during_calibration) {
  geometry.validate();
  params.validate();
  const double k = geometry.coupling_constant(params.temperature_c);
  const double length = geometry.interaction_length_mm;
  const double r0 = coupler_reflectivity(k, length, 0.0);
  if (std::abs(r0 - 0.5) > 1e-6) {
    std::ostringstream msg;
    msg << "homodyne coupler is not balanced without pump (R = " << r0 << ")";
    throw ValidationError(msg.str());
  }
  const double s = squeezing_parameter_from_db(initial_squeezing_db);

  SweepData out;
  out.abscissa_name = "pump_power_mW";
  out.value_name = "squeezing_dB";
  for (double p : pump_powers_mw) {
    const double r =
        coupler_reflectivity(k, length, delta_beta_from_index(delta_n_steady(params, p),
                                                              probe_wavelength_nm));
    const double signal = homodyne_noise({r, 1.0, s, 0.0});
    const double shot = homodyne_noise({pump_during_calibration ? r : r0, 1.0, 0.0, 0.0});
    out.abscissa.push_back(p);
    out.value.push_back(10.0 * std::log10(signal / shot));
  }
  out.sort_by_abscissa();
  return out;
}

}  // namespace lnpr
