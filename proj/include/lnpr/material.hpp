#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lnpr {

/// Wavelength band used to key guided-mode offsets. Everything below
/// 1100 nm is treated as the pump (near-infrared) band.
enum class Band { near_infrared, telecom };

Band band_of(double wavelength_nm);
std::string_view to_string(Band band);
Band band_from_string(std::string_view name);

/// Temperature-dependent Sellmeier equation for the extraordinary index of
/// congruent LiNbO3 (Jundt, Opt. Lett. 22, 1553 (1997)):
///
///   n^2 = a1 + b1 f + (a2 + b2 f) / (l^2 - (a3 + b3 f)^2)
///            + (a4 + b4 f) / (l^2 - a5^2) - a6 l^2
///   f   = (T - 24.5)(T + 570.82)
///
/// with l in micrometres and T in degrees Celsius.
struct SellmeierCoefficients {
  double a1 = 5.35583;
  double a2 = 0.100473;
  double a3 = 0.20692;
  double a4 = 100.0;
  double a5 = 11.34927;
  double a6 = 1.5334e-2;
  double b1 = 4.629e-7;
  double b2 = 3.862e-8;
  double b3 = -0.89e-8;
  double b4 = 2.657e-5;
  double reference_temperature_c = 24.5;
  double temperature_shift_c = 570.82;

  bool operator==(const SellmeierCoefficients&) const = default;
};

inline constexpr double kMinWavelengthNm = 400.0;
inline constexpr double kMaxWavelengthNm = 2000.0;
inline constexpr double kMinTemperatureC = 20.0;
inline constexpr double kMaxTemperatureC = 200.0;

/// Mode id that always resolves to the bare material index.
inline constexpr std::string_view kBulkMode = "bulk";

struct IndexTarget {
  double index = 0.0;
  double wavelength_nm = 0.0;
  double temperature_c = 0.0;

  bool operator==(const IndexTarget&) const = default;
};

/// A guided mode: either a fixed additive offset or a calibration target
/// from which the offset is derived.
struct ModeSpec {
  Band band = Band::telecom;
  std::string id;
  double offset = 0.0;
  std::optional<IndexTarget> target;

  bool operator==(const ModeSpec&) const = default;
};

/// Bulk dispersion plus per-mode effective-index offsets. Immutable once
/// constructed; calibration happens in the constructor.
class MaterialModel {
 public:
  explicit MaterialModel(SellmeierCoefficients coefficients = {},
                         const std::vector<ModeSpec>& modes = {});

  /// Material with the fundamental modes calibrated to n_eff = 2.13 at
  /// 1550 nm and 2.18 at 775 nm, both at 30 C.
  static MaterialModel lithium_niobate_default();

  double bulk_index(double wavelength_nm, double temperature_c) const;

  /// Bulk index plus the calibrated offset of `mode` in the band that
  /// contains `wavelength_nm`. Throws ValidationError for unknown modes or
  /// out-of-range arguments.
  double refractive_index(double wavelength_nm, double temperature_c,
                          std::string_view mode) const;

  double mode_offset(Band band, std::string_view mode) const;
  bool has_mode(Band band, std::string_view mode) const;

  const SellmeierCoefficients& coefficients() const { return coefficients_; }

 private:
  SellmeierCoefficients coefficients_;
  std::map<std::pair<Band, std::string>, double, std::less<>> offsets_;
};

struct PhotorefractionParams {
  double a = 0.0;
  double b_mw = 1.0;
  double c = 0.0;
  double tau_build_s = 5.0;
  double tau_dark_s = 1.0e4;
  double tau_erase_s = 10.0;
  double temperature_c = 30.0;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;

  bool operator==(const PhotorefractionParams&) const = default;
};

/// Steady-state index shift -aP/(b + cP). Always <= 0.
double delta_n_steady(const PhotorefractionParams& params, double pump_power_mw);

struct PumpSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  double pump_power_mw = 0.0;
  bool erasing = false;

  bool operator==(const PumpSegment&) const = default;
};

/// Ordered, non-overlapping illumination phases. Gaps between segments are
/// dark; the last segment extends past its end time.
class PumpSchedule {
 public:
  PumpSchedule() = default;
  explicit PumpSchedule(std::vector<PumpSegment> segments);

  const std::vector<PumpSegment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double horizon_s() const;

  bool operator==(const PumpSchedule&) const = default;

 private:
  std::vector<PumpSegment> segments_;
};

/// Piecewise first-order relaxation of the index shift. Pumped phases relax
/// toward delta_n_steady(P) with tau_build, dark phases toward 0 with
/// tau_dark and erasing phases toward 0 with tau_erase. Starts from 0 at t=0.
double delta_n_temporal(const PhotorefractionParams& params,
                        const PumpSchedule& schedule, double time_s);

}  // namespace lnpr
