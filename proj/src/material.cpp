#include "lnpr/material.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lnpr/error.hpp"

namespace lnpr {

namespace {

constexpr double kBandSplitNm = 1100.0;

void check_range(double wavelength_nm, double temperature_c) {
  if (!(wavelength_nm >= kMinWavelengthNm && wavelength_nm <= kMaxWavelengthNm)) {
    std::ostringstream msg;
    msg << "wavelength " << wavelength_nm << " nm outside dispersion range ["
        << kMinWavelengthNm << ", " << kMaxWavelengthNm << "] nm";
    throw ValidationError(msg.str());
  }
  if (!(temperature_c >= kMinTemperatureC && temperature_c <= kMaxTemperatureC)) {
    std::ostringstream msg;
    msg << "temperature " << temperature_c << " C outside dispersion range ["
        << kMinTemperatureC << ", " << kMaxTemperatureC << "] C";
    throw ValidationError(msg.str());
  }
}

}  // namespace

Band band_of(double wavelength_nm) {
  return wavelength_nm < kBandSplitNm ? Band::near_infrared : Band::telecom;
}

std::string_view to_string(Band band) {
  return band == Band::near_infrared ? "nir" : "telecom";
}

Band band_from_string(std::string_view name) {
  if (name == "nir") return Band::near_infrared;
  if (name == "telecom") return Band::telecom;
  throw ValidationError("unknown band '" + std::string(name) +
                        "' (expected nir or telecom)");
}

MaterialModel::MaterialModel(SellmeierCoefficients coefficients,
                             const std::vector<ModeSpec>& modes)
    : coefficients_(coefficients) {
  for (const auto& spec : modes) {
    if (spec.id.empty() || spec.id == kBulkMode) {
      throw ValidationError("mode id must be non-empty and not '" +
                            std::string(kBulkMode) + "'");
    }
    double offset = spec.offset;
    if (spec.target) {
      const auto& target = *spec.target;
      if (band_of(target.wavelength_nm) != spec.band) {
        throw ValidationError("mode '" + spec.id + "': calibration wavelength lies outside band " +
                              std::string(to_string(spec.band)));
      }
      // target and bulk index are within a factor of two of each other, so
      // the difference is exact and bulk + offset reproduces target exactly.
      offset = target.index - bulk_index(target.wavelength_nm, target.temperature_c);
    }
    if (!std::isfinite(offset)) {
      throw ValidationError("mode '" + spec.id + "': non-finite offset");
    }
    auto [it, inserted] = offsets_.emplace(std::pair{spec.band, spec.id}, offset);
    if (!inserted) {
      throw ValidationError("mode '" + spec.id + "' defined twice in band " +
                            std::string(to_string(spec.band)));
    }
  }
}

MaterialModel MaterialModel::lithium_niobate_default() {
  return MaterialModel({}, {
      {Band::telecom, "fundamental", 0.0, IndexTarget{2.13, 1550.0, 30.0}},
      {Band::near_infrared, "fundamental", 0.0, IndexTarget{2.18, 775.0, 30.0}},
  });
}

double MaterialModel::bulk_index(double wavelength_nm, double temperature_c) const {
  check_range(wavelength_nm, temperature_c);
  const auto& k = coefficients_;
  const double l = wavelength_nm * 1e-3;
  const double l2 = l * l;
  const double f = (temperature_c - k.reference_temperature_c) *
                   (temperature_c + k.temperature_shift_c);
  const double uv = k.a3 + k.b3 * f;
  const double n2 = k.a1 + k.b1 * f + (k.a2 + k.b2 * f) / (l2 - uv * uv) +
                    (k.a4 + k.b4 * f) / (l2 - k.a5 * k.a5) - k.a6 * l2;
  return std::sqrt(n2);
}

double MaterialModel::mode_offset(Band band, std::string_view mode) const {
  if (mode == kBulkMode) return 0.0;
  auto it = offsets_.find(std::pair{band, std::string(mode)});
  if (it == offsets_.end()) {
    throw ValidationError("unknown mode '" + std::string(mode) + "' in band " +
                          std::string(to_string(band)));
  }
  return it->second;
}

bool MaterialModel::has_mode(Band band, std::string_view mode) const {
  return mode == kBulkMode || offsets_.contains(std::pair{band, std::string(mode)});
}

double MaterialModel::refractive_index(double wavelength_nm, double temperature_c,
                                       std::string_view mode) const {
  const double offset = mode_offset(band_of(wavelength_nm), mode);
  return bulk_index(wavelength_nm, temperature_c) + offset;
}

void PhotorefractionParams::validate() const {
  std::ostringstream where;
  where << "photorefraction (T = " << temperature_c << " C): ";
  auto fail = [&](const std::string& what) {
    throw ValidationError(where.str() + what);
  };
  if (!(a >= 0.0) || !(b_mw >= 0.0) || !(c >= 0.0)) fail("a, b, c must be >= 0");
  // b + cP > 0 for every P >= 0 reduces to b > 0.
  if (!(b_mw > 0.0)) fail("b + c*P must be > 0 for all P >= 0 (requires b > 0)");
  if (!(tau_build_s > 0.0) || !(tau_dark_s > 0.0) || !(tau_erase_s > 0.0)) {
    fail("time constants must be > 0");
  }
  if (!(tau_erase_s < tau_dark_s)) fail("tau_erase must be shorter than tau_dark");
  if (!std::isfinite(a) || !std::isfinite(b_mw) || !std::isfinite(c) ||
      !std::isfinite(tau_build_s) || !std::isfinite(tau_dark_s) ||
      !std::isfinite(tau_erase_s) || !std::isfinite(temperature_c)) {
    fail("non-finite value");
  }
}

double delta_n_steady(const PhotorefractionParams& params, double pump_power_mw) {
  if (!(pump_power_mw >= 0.0)) {
    throw ValidationError("pump power must be >= 0");
  }
  if (pump_power_mw == 0.0) return 0.0;
  return -params.a * pump_power_mw / (params.b_mw + params.c * pump_power_mw);
}

PumpSchedule::PumpSchedule(std::vector<PumpSegment> segments)
    : segments_(std::move(segments)) {
  std::sort(segments_.begin(), segments_.end(),
            [](const PumpSegment& x, const PumpSegment& y) { return x.start_s < y.start_s; });
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.start_s >= 0.0) || !(s.start_s < s.end_s) || !std::isfinite(s.end_s)) {
      throw ValidationError("pump segment " + std::to_string(i) +
                            ": need 0 <= start < end");
    }
    if (!(s.pump_power_mw >= 0.0) || !std::isfinite(s.pump_power_mw)) {
      throw ValidationError("pump segment " + std::to_string(i) + ": power must be >= 0");
    }
    if (s.erasing && s.pump_power_mw > 0.0) {
      throw ValidationError("pump segment " + std::to_string(i) +
                            ": a segment cannot both pump and erase");
    }
    if (i > 0 && s.start_s < segments_[i - 1].end_s) {
      throw ValidationError("pump segments " + std::to_string(i - 1) + " and " +
                            std::to_string(i) + " overlap");
    }
  }
}

double PumpSchedule::horizon_s() const {
  return segments_.empty() ? 0.0 : segments_.back().end_s;
}

double delta_n_temporal(const PhotorefractionParams& params,
                        const PumpSchedule& schedule, double time_s) {
  if (!(time_s >= 0.0)) throw ValidationError("time must be >= 0");

  double dn = 0.0;
  double clock = 0.0;
  auto relax = [&dn](double target, double tau, double dt) {
    if (dt > 0.0) dn = target + (dn - target) * std::exp(-dt / tau);
  };

  const auto& segments = schedule.segments();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    // dark gap before this segment
    relax(0.0, params.tau_dark_s, std::min(time_s, seg.start_s) - clock);
    if (time_s <= seg.start_s) return dn;

    const bool last = i + 1 == segments.size();
    const double seg_end = last ? std::numeric_limits<double>::infinity() : seg.end_s;
    const double until = std::min(time_s, seg_end);
    if (seg.erasing) {
      relax(0.0, params.tau_erase_s, until - seg.start_s);
    } else if (seg.pump_power_mw > 0.0) {
      relax(delta_n_steady(params, seg.pump_power_mw), params.tau_build_s,
            until - seg.start_s);
    } else {
      relax(0.0, params.tau_dark_s, until - seg.start_s);
    }
    if (time_s <= seg_end) return dn;
    clock = seg.end_s;
  }
  relax(0.0, params.tau_dark_s, time_s - clock);
  return dn;
}

}  // namespace lnpr
