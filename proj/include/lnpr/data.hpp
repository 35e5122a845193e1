#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lnpr {

/// Time series with an optional per-sample mask (e.g. mode-hopping windows
/// that fits must skip).
struct Trace {
  std::string value_name = "transmission";
  std::vector<double> time_s;
  std::vector<double> value;
  std::vector<bool> masked;  // empty, or same length as time_s

  std::size_t size() const { return time_s.size(); }
  bool is_masked(std::size_t i) const { return !masked.empty() && masked[i]; }

  /// Masks every sample with start <= t <= end.
  void mask_interval(double start_s, double end_s);
  std::vector<std::pair<double, double>> masked_intervals() const;

  /// Throws ValidationError on unequal lengths, non-increasing time or
  /// non-finite values.
  void validate() const;

  bool operator==(const Trace&) const = default;
};

/// Values sampled against an ascending abscissa (pump power, wavelength).
/// Column names carry the unit suffix, e.g. "pump_power_mW".
struct SweepData {
  std::string abscissa_name = "pump_power_mW";
  std::string value_name = "value";
  std::vector<double> abscissa;
  std::vector<double> value;
  std::optional<std::vector<double>> sigma;

  std::size_t size() const { return abscissa.size(); }

  void validate() const;

  /// Stable sort by abscissa. Returns true if the order changed.
  bool sort_by_abscissa();

  bool operator==(const SweepData&) const = default;
};

}  // namespace lnpr
