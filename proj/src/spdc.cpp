#include "lnpr/spdc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "lnpr/error.hpp"

namespace lnpr {

namespace {

// sign-change scan of f over [lo, hi] followed by bisection
std::optional<double> find_root(const std::function<double(double)>& f, double lo,
                                double hi, int cells) {
  double x0 = lo;
  double f0 = f(x0);
  if (f0 == 0.0) return x0;
  for (int k = 1; k <= cells; ++k) {
    const double x1 = lo + (hi - lo) * k / cells;
    const double f1 = f(x1);
    if (f1 == 0.0) return x1;
    if ((f0 < 0.0) != (f1 < 0.0)) {
      double a = x0;
      double b = x1;
      double fa = f0;
      for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      return 0.5 * (a + b);
    }
    x0 = x1;
    f0 = f1;
  }
  return std::nullopt;
}

}  // namespace

void QpmDevice::validate() const {
  if (!(poling_period_um > 0.0)) throw ValidationError("qpm: poling period must be > 0");
  if (!(length_mm > 0.0)) throw ValidationError("qpm: length must be > 0");
  if (!(background >= 0.0)) throw ValidationError("qpm: background must be >= 0");
  if (!material) throw ValidationError("qpm: no material model");
}

void SpdcOperatingPoint::validate() const {
  if (!(pump_wavelength_nm >= 700.0 && pump_wavelength_nm <= 800.0)) {
    throw ValidationError("spdc: pump wavelength must lie in [700, 800] nm");
  }
  if (!(pump_power_mw >= 0.0)) throw ValidationError("spdc: pump power must be >= 0");
}

double idler_wavelength(double pump_wavelength_nm, double signal_wavelength_nm) {
  const double inv = 1.0 / pump_wavelength_nm - 1.0 / signal_wavelength_nm;
  if (!(inv > 0.0)) {
    throw ValidationError("signal wavelength must exceed the pump wavelength");
  }
  return 1.0 / inv;
}

double qpm_mismatch(const QpmDevice& device, const SpdcOperatingPoint& point,
                    double signal_wavelength_nm,
                    const PhotorefractionParams& photorefraction) {
  device.validate();
  point.validate();
  const double lp = point.pump_wavelength_nm;
  const double ls = signal_wavelength_nm;
  if (!(ls > 2.0 * lp * 0.7 && ls < 2.0 * lp * 1.5)) {
    throw ValidationError("signal wavelength outside (1.4, 3.0) x pump wavelength");
  }
  const double li = idler_wavelength(lp, ls);
  const double t = point.temperature_c;
  const auto& m = *device.material;
  const double dn = delta_n_steady(photorefraction, point.pump_power_mw);
  const double dn_telecom = device.signal_shift_scale * dn;

  // all wavelengths in um so that n/lambda and 1/Lambda share units
  const double np = (m.refractive_index(lp, t, device.pump_mode) + dn) / (lp * 1e-3);
  const double ns = (m.refractive_index(ls, t, device.signal_mode) + dn_telecom) / (ls * 1e-3);
  const double ni = (m.refractive_index(li, t, device.idler_mode) + dn_telecom) / (li * 1e-3);
  const double grating = 1.0 / device.poling_period_um;
  return 2.0 * std::numbers::pi * (np - ns - ni - grating) * 1e3;
}

double calibrate_poling_period(const MaterialModel& material, double temperature_c,
                               double pump_wavelength_nm, double degeneracy_wavelength_nm,
                               const QpmModes& modes, double pump_index_shift) {
  const double lp = pump_wavelength_nm;
  const double ls = degeneracy_wavelength_nm;
  const double li = idler_wavelength(lp, ls);
  const double np = (material.refractive_index(lp, temperature_c, modes.pump) +
                     pump_index_shift) / (lp * 1e-3);
  const double ns = (material.refractive_index(ls, temperature_c, modes.signal)) / (ls * 1e-3);
  const double ni = (material.refractive_index(li, temperature_c, modes.idler)) / (li * 1e-3);
  const double inverse_period = np - ns - ni;
  if (!(inverse_period > 0.0)) {
    throw ValidationError(
        "calibrate_poling_period: dispersion does not allow QPM at these wavelengths");
  }
  return 1.0 / inverse_period;
}

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

SweepData spdc_spectrum(const QpmDevice& device, const SpdcOperatingPoint& point,
                        const PhotorefractionParams& photorefraction,
                        std::span<const double> signal_wavelengths_nm) {
  SweepData out;
  out.abscissa_name = "wavelength_nm";
  out.value_name = "normalized_density";
  const double half_length = device.length_mm / 2.0;
  for (double ls : signal_wavelengths_nm) {
    const double li = idler_wavelength(point.pump_wavelength_nm, ls);
    const double own = sinc(qpm_mismatch(device, point, ls, photorefraction) * half_length);
    const double twin = sinc(qpm_mismatch(device, point, li, photorefraction) * half_length);
    out.abscissa.push_back(ls);
    out.value.push_back(own * own + twin * twin + device.background);
  }
  if (out.value.empty()) return out;
  const double peak = *std::max_element(out.value.begin(), out.value.end());
  if (!(peak > 0.0)) throw NumericalError("spdc_spectrum: vanishing spectrum");
  for (auto& v : out.value) v /= peak;
  out.sort_by_abscissa();
  return out;
}

std::optional<double> phase_matched_signal(const QpmDevice& device,
                                           const SpdcOperatingPoint& point,
                                           const PhotorefractionParams& photorefraction,
                                           double max_signal_nm) {
  const double degenerate = 2.0 * point.pump_wavelength_nm;
  if (!(max_signal_nm > degenerate)) return std::nullopt;
  auto f = [&](double ls) { return qpm_mismatch(device, point, ls, photorefraction); };
  const int cells = std::max(8, static_cast<int>((max_signal_nm - degenerate) / 0.5));
  return find_root(f, degenerate * (1.0 + 1e-9), max_signal_nm, cells);
}

std::optional<double> degeneracy_pump_power(const QpmDevice& device, double temperature_c,
                                            double pump_wavelength_nm,
                                            const PhotorefractionParams& photorefraction,
                                            double max_power_mw) {
  auto f = [&](double p) {
    return qpm_mismatch(device, {pump_wavelength_nm, temperature_c, p},
                        2.0 * pump_wavelength_nm, photorefraction);
  };
  return find_root(f, 0.0, max_power_mw, 400);
}

std::optional<double> degenerate_pump_wavelength(
    const QpmDevice& device, double temperature_c, double pump_power_mw,
    const PhotorefractionParams& photorefraction, double min_nm, double max_nm) {
  auto f = [&](double lp) {
    return qpm_mismatch(device, {lp, temperature_c, pump_power_mw}, 2.0 * lp,
                        photorefraction);
  };
  const int cells = std::max(8, static_cast<int>((max_nm - min_nm) / 0.05));
  return find_root(f, min_nm, max_nm, cells);
}

SqueezingCurves effective_squeezing_vs_power(
    const QpmDevice& device, double temperature_c, double pump_wavelength_nm,
    const PhotorefractionParams& photorefraction, double mu0_per_sqrt_mw,
    std::span<const double> pump_powers_mw) {
  if (!(mu0_per_sqrt_mw > 0.0)) throw ValidationError("mu0 must be > 0");
  const double db_per_s = 20.0 * std::log10(std::numbers::e);
  SqueezingCurves out;
  out.ideal.abscissa_name = out.photorefractive.abscissa_name = "pump_power_mW";
  out.ideal.value_name = out.photorefractive.value_name = "squeezing_dB";
  for (double p : pump_powers_mw) {
    if (!(p >= 0.0)) throw ValidationError("pump power must be >= 0");
    const double s_ideal = mu0_per_sqrt_mw * std::sqrt(p);
    const double dk = qpm_mismatch(device, {pump_wavelength_nm, temperature_c, p},
                                   2.0 * pump_wavelength_nm, photorefraction);
    const double s_real = s_ideal * std::abs(sinc(dk * device.length_mm / 2.0));
    out.ideal.abscissa.push_back(p);
    out.ideal.value.push_back(-db_per_s * s_ideal);
    out.photorefractive.abscissa.push_back(p);
    out.photorefractive.value.push_back(-db_per_s * s_real);
  }
  out.ideal.sort_by_abscissa();
  out.photorefractive.sort_by_abscissa();
  return out;
}

}  // namespace lnpr
