#include "lnpr/cavity.hpp"

#include <cmath>
#include <numbers>

#include "lnpr/error.hpp"

namespace lnpr {

namespace {

constexpr double kSpeedOfLight = 299792458.0;  // m/s

void check_reflectivity(double r, const char* name) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0, 1)");
  }
}

}  // namespace

void FpiCavity::validate() const {
  if (!(length_mm > 0.0)) throw ValidationError("fpi: length must be > 0");
  check_reflectivity(facet_reflectivity_probe, "fpi: facet_reflectivity_probe");
  check_reflectivity(facet_reflectivity_pump, "fpi: facet_reflectivity_pump");
  if (!material) throw ValidationError("fpi: no material model");
}

double FpiCavity::facet_reflectivity(double wavelength_nm) const {
  return band_of(wavelength_nm) == Band::telecom ? facet_reflectivity_probe
                                                 : facet_reflectivity_pump;
}

void SqueezerCavity::validate() const {
  if (!(length_mm > 0.0)) throw ValidationError("squeezer_cavity: length must be > 0");
  if (!(mirror_r1 > 0.0 && mirror_r1 < 1.0) || !(mirror_r2 > 0.0 && mirror_r2 < 1.0)) {
    throw ValidationError("squeezer_cavity: mirror reflectivities must lie in (0, 1)");
  }
  if (!material) throw ValidationError("squeezer_cavity: no material model");
}

Finesse finesse(double reflectivity_1, double reflectivity_2) {
  check_reflectivity(reflectivity_1, "reflectivity_1");
  check_reflectivity(reflectivity_2, "reflectivity_2");
  const double r = std::sqrt(reflectivity_1 * reflectivity_2);
  const double loss = 1.0 - r;
  return {4.0 * r / (loss * loss), std::numbers::pi * std::sqrt(r) / loss};
}

double airy_transmission(double coefficient_of_finesse, double phase_rad) {
  const double s = std::sin(phase_rad);
  return 1.0 / (1.0 + coefficient_of_finesse * s * s);
}

double fpi_phase(const FpiCavity& cavity, double wavelength_nm,
                 double temperature_c, double delta_n) {
  const double n = cavity.material->refractive_index(wavelength_nm, temperature_c,
                                                     cavity.mode);
  const double length_nm = cavity.length_mm * 1e6;
  return 2.0 * std::numbers::pi * length_nm * (n + delta_n) / wavelength_nm;
}

double fpi_transmission(const FpiCavity& cavity, double wavelength_nm,
                        double temperature_c, double delta_n) {
  cavity.validate();
  if (cavity.angled_facets) return 1.0;
  const double r = cavity.facet_reflectivity(wavelength_nm);
  const double coefficient = finesse(r, r).coefficient;
  if (coefficient == 0.0) return 1.0;
  return airy_transmission(coefficient,
                           fpi_phase(cavity, wavelength_nm, temperature_c, delta_n));
}

FpiCharacteristics fpi_characteristics(const FpiCavity& cavity, double wavelength_nm,
                                       double temperature_c) {
  cavity.validate();
  const double n = cavity.material->refractive_index(wavelength_nm, temperature_c,
                                                     cavity.mode);
  const double length_nm = cavity.length_mm * 1e6;
  FpiCharacteristics out;
  out.free_spectral_range_pm =
      wavelength_nm * wavelength_nm / (2.0 * n * length_nm) * 1e3;
  const double r = cavity.angled_facets ? 0.0 : cavity.facet_reflectivity(wavelength_nm);
  out.finesse = finesse(r, r);
  if (out.finesse.coefficient > 1.0) {
    out.fwhm_pm = out.free_spectral_range_pm / out.finesse.conventional;
  }
  return out;
}

double half_period_delta_n(double wavelength_nm, double length_mm) {
  return wavelength_nm / (4.0 * length_mm * 1e6);
}

Trace simulate_fpi_trace(const FpiCavity& cavity, const PumpSchedule& schedule,
                         const PhotorefractionParams& params,
                         double probe_wavelength_nm, double temperature_c,
                         double sample_period_s) {
  if (schedule.empty()) throw ValidationError("simulate_fpi_trace: empty pump schedule");
  if (!(sample_period_s > 0.0)) {
    throw ValidationError("simulate_fpi_trace: sample period must be > 0");
  }
  params.validate();
  const double reference =
      fpi_transmission(cavity, probe_wavelength_nm, temperature_c, 0.0);
  const auto samples =
      static_cast<std::size_t>(std::floor(schedule.horizon_s() / sample_period_s + 1e-9)) + 1;

  Trace trace;
  trace.value_name = "transmission";
  trace.time_s.reserve(samples);
  trace.value.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) * sample_period_s;
    const double dn = delta_n_temporal(params, schedule, t);
    trace.time_s.push_back(t);
    trace.value.push_back(
        fpi_transmission(cavity, probe_wavelength_nm, temperature_c, dn) / reference);
  }
  return trace;
}

NormalizedDetuning delta_n_to_detuning(const SqueezerCavity& cavity, double delta_n,
                                       double wavelength_nm, double temperature_c) {
  cavity.validate();
  if (!(std::abs(delta_n) < 1e-2)) {
    throw ValidationError("delta_n_to_detuning: |dn| must be < 1e-2");
  }
  const double n = cavity.material->refractive_index(wavelength_nm, temperature_c,
                                                     cavity.mode);
  const double omega = 2.0 * std::numbers::pi * kSpeedOfLight / (wavelength_nm * 1e-9);
  const double shift = omega * std::abs(delta_n) / n;
  const double round_trip_s = 2.0 * n * cavity.length_mm * 1e-3 / kSpeedOfLight;
  const double kappa =
      (1.0 - std::sqrt(cavity.mirror_r1 * cavity.mirror_r2)) / round_trip_s;
  return {shift / kappa};
}

}  // namespace lnpr
