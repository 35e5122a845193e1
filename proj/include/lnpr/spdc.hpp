#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "lnpr/data.hpp"
#include "lnpr/material.hpp"

namespace lnpr {

struct QpmDevice {
  double poling_period_um = 0.0;
  double length_mm = 15.0;
  std::string pump_mode = "fundamental";
  std::string signal_mode = "fundamental";
  std::string idler_mode = "fundamental";
  /// Fraction of the pump-band index shift also applied to signal and
  /// idler. 0 confines the photorefractive shift to the pump.
  double signal_shift_scale = 0.0;
  /// Constant floor added before normalization (detector background).
  double background = 0.0;
  std::shared_ptr<const MaterialModel> material;

  void validate() const;
};

struct SpdcOperatingPoint {
  double pump_wavelength_nm = 775.0;
  double temperature_c = 30.0;
  double pump_power_mw = 0.0;

  void validate() const;
};

/// Energy conservation: 1 / (1/lambda_p - 1/lambda_s).
double idler_wavelength(double pump_wavelength_nm, double signal_wavelength_nm);

/// Phase mismatch Delta k = k_p - k_s - k_i - 2 pi / Lambda in mm^-1, with the
/// photorefractive shift at the operating power added to the pump index.
double qpm_mismatch(const QpmDevice& device, const SpdcOperatingPoint& point,
                    double signal_wavelength_nm,
                    const PhotorefractionParams& photorefraction);

struct QpmModes {
  std::string pump = "fundamental";
  std::string signal = "fundamental";
  std::string idler = "fundamental";
};

/// Poling period (um) that zeroes the mismatch for a signal at
/// `degeneracy_wavelength_nm`. `pump_index_shift` is the photorefractive
/// shift present during calibration (0 for an unpumped reference).
double calibrate_poling_period(const MaterialModel& material,
                               double temperature_c, double pump_wavelength_nm,
                               double degeneracy_wavelength_nm,
                               const QpmModes& modes = {},
                               double pump_index_shift = 0.0);

/// sin(x)/x with the removable singularity handled.
double sinc(double x);

/// Normalized SPDC density sinc^2(Delta k L / 2) per signal wavelength,
/// symmetrized with the twin photon at the idler wavelength.
SweepData spdc_spectrum(const QpmDevice& device, const SpdcOperatingPoint& point,
                        const PhotorefractionParams& photorefraction,
                        std::span<const double> signal_wavelengths_nm);

/// Phase-matched signal wavelength on the long-wavelength side of
/// degeneracy, if any within (2 lambda_p, max_signal_nm].
std::optional<double> phase_matched_signal(
    const QpmDevice& device, const SpdcOperatingPoint& point,
    const PhotorefractionParams& photorefraction, double max_signal_nm);

/// Pump power in [0, max_power_mw] that zeroes the degenerate mismatch.
std::optional<double> degeneracy_pump_power(
    const QpmDevice& device, double temperature_c, double pump_wavelength_nm,
    const PhotorefractionParams& photorefraction, double max_power_mw);

/// Pump wavelength in [min_nm, max_nm] that zeroes the degenerate mismatch.
std::optional<double> degenerate_pump_wavelength(
    const QpmDevice& device, double temperature_c, double pump_power_mw,
    const PhotorefractionParams& photorefraction, double min_nm,
    double max_nm);

struct SqueezingCurves {
  SweepData ideal;            // -20 log10(e) mu0 sqrt(P)
  SweepData photorefractive;  // same with mu0 scaled by |sinc(Delta k L / 2)|
};

/// Single-pass squeezing (dB) at exact degeneracy versus pump power.
SqueezingCurves effective_squeezing_vs_power(
    const QpmDevice& device, double temperature_c, double pump_wavelength_nm,
    const PhotorefractionParams& photorefraction, double mu0_per_sqrt_mw,
    std::span<const double> pump_powers_mw);

}  // namespace lnpr
