#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lnpr/cavity.hpp"
#include "lnpr/coupler.hpp"
#include "lnpr/material.hpp"
#include "lnpr/spdc.hpp"

namespace lnpr {

struct MaterialConfig {
  SellmeierCoefficients sellmeier;
  std::vector<ModeSpec> modes;

  MaterialModel build() const;
  bool operator==(const MaterialConfig&) const = default;
};

struct FpiConfig {
  double length_mm = 15.0;
  double facet_reflectivity_probe = 0.14;
  double facet_reflectivity_pump = 0.13;
  bool angled_facets = false;
  std::string mode = "fundamental";

  bool operator==(const FpiConfig&) const = default;
};

struct SqueezerConfig {
  double length_mm = 15.0;
  double mirror_r1 = 0.77;
  double mirror_r2 = 0.99;
  std::string mode = "fundamental";

  bool operator==(const SqueezerConfig&) const = default;
};

struct HomodyneCouplerConfig {
  std::map<double, double> coupling_constant_per_mm;
  /// Absent: balanced length 3/2 L_c at the operating temperature.
  std::optional<double> interaction_length_mm;
  double waveguide_separation_um = 14.0;

  bool operator==(const HomodyneCouplerConfig&) const = default;
};

struct QpmConfig {
  double length_mm = 15.0;
  std::string pump_mode = "fundamental";
  std::string signal_mode = "fundamental";
  std::string idler_mode = "fundamental";
  double signal_shift_scale = 0.0;
  double background = 0.0;
  /// Explicit period; when absent it is calibrated from the fields below.
  std::optional<double> poling_period_um;
  double calibration_temperature_c = 30.0;
  double calibration_pump_wavelength_nm = 770.73;
  double calibration_reference_power_mw = 5.0;

  bool operator==(const QpmConfig&) const = default;
};

struct FpiTraceRun {
  double temperature_c = 30.0;
  double probe_wavelength_nm = 1550.0;
  double sample_period_s = 0.05;
  std::vector<PumpSegment> schedule{{10.0, 80.0, 5.0, false}};

  bool operator==(const FpiTraceRun&) const = default;
};

struct FpiCharRun {
  double temperature_c = 30.0;
  std::vector<double> wavelengths_nm{1550.0, 775.0};

  bool operator==(const FpiCharRun&) const = default;
};

struct CouplerSweepRun {
  std::vector<double> temperatures_c{30.0, 60.0, 90.0};
  double probe_wavelength_nm = 1550.0;
  std::vector<double> pump_powers_mw;  // default 0..15 mW in 1 mW steps

  bool operator==(const CouplerSweepRun&) const = default;
};

struct HomodyneRun {
  double reflectivity = 0.5;
  double lo_amplitude_sq = 1.0;
  double squeezing_db = -5.0;
  double phase_rad = 0.0;
  int phase_points = 181;

  bool operator==(const HomodyneRun&) const = default;
};

struct OpoRun {
  double initial_squeezing_db = -5.0;
  std::vector<double> detunings{0.0, 0.5, 1.0, 1.5, 2.0, 3.0};
  double omega_max = 10.0;
  double omega_step = 0.05;
  double detection_efficiency = 1.0;
  double detuning_scan_max = 3.0;
  double detuning_scan_step = 0.1;
  /// Index shifts to convert into squeezer-cavity detunings for the summary.
  std::vector<double> delta_n{2.6e-5};

  bool operator==(const OpoRun&) const = default;
};

struct SpdcPoint {
  double temperature_c = 30.0;
  double pump_wavelength_nm = 770.73;

  bool operator==(const SpdcPoint&) const = default;
};

struct SpdcRun {
  std::vector<SpdcPoint> points{{30.0, 770.73}, {90.0, 774.63}};
  std::vector<double> pump_powers_mw{0.25, 1.0, 2.5, 5.0, 7.5};
  double wavelength_min_nm = 1400.0;
  double wavelength_max_nm = 1700.0;
  double wavelength_step_nm = 0.5;

  bool operator==(const SpdcRun&) const = default;
};

struct SqueezeBudgetRun {
  double temperature_c = 30.0;
  double probe_wavelength_nm = 1550.0;
  std::vector<double> initial_squeezing_db{-3.0, -5.0, -10.0};
  std::vector<double> residual_pump_powers_mw;  // default 0..15 mW
  bool pump_during_calibration = false;
  double mu0_per_sqrt_mw = 0.101;
  double generation_pump_wavelength_nm = 770.73;
  std::vector<double> generation_pump_powers_mw;  // default 0..100 mW

  bool operator==(const SqueezeBudgetRun&) const = default;
};

struct SweepFile {
  double temperature_c = 30.0;
  std::string path;

  bool operator==(const SweepFile&) const = default;
};

struct FitDnRun {
  double probe_wavelength_nm = 1550.0;
  /// Measured sweeps. When empty, synthetic sweeps are generated from the
  /// configured photorefraction sets with seeded relative noise.
  std::vector<SweepFile> sweeps;
  std::vector<double> synthetic_temperatures_c{30.0, 60.0, 90.0};
  std::vector<double> synthetic_pump_powers_mw;  // default 0..15 mW
  double synthetic_noise_relative = 0.01;

  bool operator==(const FitDnRun&) const = default;
};

struct FitFpiRun {
  /// Measured trace; when empty a synthetic trace is simulated from the
  /// fpi_trace run with seeded multiplicative noise.
  std::string trace_path;
  double temperature_c = 30.0;
  double probe_wavelength_nm = 1550.0;
  double pump_on_s = 10.0;
  double synthetic_noise_relative = 0.02;

  bool operator==(const FitFpiRun&) const = default;
};

struct RunConfig {
  std::string output_dir = "out";
  std::uint64_t seed = 20200101;
  FpiTraceRun fpi_trace;
  FpiCharRun fpi_char;
  CouplerSweepRun coupler_sweep;
  HomodyneRun homodyne;
  OpoRun opo_spectrum;
  SpdcRun spdc_spectrum;
  SqueezeBudgetRun squeeze_budget;
  FitDnRun fit_dn;
  FitFpiRun fit_fpi;

  bool operator==(const RunConfig&) const = default;
};

struct Config {
  MaterialConfig material;
  std::vector<PhotorefractionParams> photorefraction;
  FpiConfig fpi;
  SqueezerConfig squeezer_cavity;
  CouplerGeometry coupler;
  HomodyneCouplerConfig homodyne_coupler;
  QpmConfig qpm;
  RunConfig run;
  /// Directory that relative paths in the run section resolve against.
  std::filesystem::path base_dir;

  const PhotorefractionParams& photorefraction_at(double temperature_c) const;

  /// Cross-reference and invariant checks. Throws ValidationError with the
  /// offending field path.
  void validate() const;

  bool operator==(const Config& other) const;
};

struct LoadedConfig {
  Config config;
  std::vector<std::string> defaulted_keys;
  std::vector<std::string> warnings;
};

/// Unknown keys throw in strict mode and are reported as warnings otherwise.
LoadedConfig parse_config(const std::filesystem::path& path, bool strict = false);
LoadedConfig parse_config_string(const std::string& text, bool strict = false,
                                 const std::filesystem::path& base_dir = ".");

/// Canonical YAML rendering of every value (defaults included), 17
/// significant digits. parse(serialize(c)) == c.
std::string serialize_config(const Config& config);

/// SHA-256 of the canonical rendering, hex encoded.
std::string config_hash(const Config& config);

/// The paper-geometry defaults (LiNbO3 modes, 30/60/90 C parameter sets,
/// L = 15 mm FPI, k = 0.46 mm^-1 coupler, ...).
Config default_config();

}  // namespace lnpr
