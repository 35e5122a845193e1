#include "lnpr/cli.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Core>
#include <json.hpp>
#include <openssl/opensslv.h>

#include "lnpr/cavity.hpp"
#include "lnpr/config.hpp"
#include "lnpr/coupler.hpp"
#include "lnpr/csv.hpp"
#include "lnpr/error.hpp"
#include "lnpr/fit.hpp"
#include "lnpr/spdc.hpp"

#ifndef LNPR_VERSION
#define LNPR_VERSION "dev"
#endif

namespace lnpr {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr std::array<std::string_view, 9> kSubcommands{
    "fpi-trace",      "fpi-char",      "coupler-sweep", "homodyne", "opo-spectrum",
    "spdc-spectrum", "squeeze-budget", "fit-dn",        "fit-fpi",
};

std::string tag(double value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

std::vector<double> grid(double start, double stop, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(start + step * static_cast<double>(i));
  return out;
}

std::vector<double> or_default(const std::vector<double>& values, double stop, double step) {
  return values.empty() ? grid(0.0, stop, step) : values;
}

ordered_json fit_json(const FitResult& fit) {
  ordered_json j;
  j["parameters"] = std::vector<double>(fit.parameters.data(),
                                        fit.parameters.data() + fit.parameters.size());
  const Eigen::VectorXd u = fit.uncertainties();
  j["uncertainties"] = std::vector<double>(u.data(), u.data() + u.size());
  j["residual_norm"] = fit.residual_norm;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["reason"] = fit.reason;
  j["warnings"] = fit.warnings;
  return j;
}

class Run {
 public:
  Run(std::string_view name, const LoadedConfig& loaded, fs::path out_dir, std::uint64_t seed,
      bool quiet)
      : name_(name),
        loaded_(loaded),
        config_(loaded.config),
        out_dir_(std::move(out_dir)),
        seed_(seed),
        quiet_(quiet),
        hash_(config_hash(config_)),
        material_(std::make_shared<MaterialModel>(config_.material.build())) {}

  const Config& config() const { return config_; }
  std::shared_ptr<const MaterialModel> material() const { return material_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<std::string> provenance() const {
    return {"lnpr " + std::string(LNPR_VERSION) + " " + name_, "config_sha256 " + hash_,
            "seed " + std::to_string(seed_)};
  }

  void write(const std::string& file, const std::string& text) {
    write_text_file(out_dir_ / file, text);
    outputs_.push_back(file);
  }
  void write_csv(const std::string& file, const Trace& trace) {
    write(file, to_csv(trace, provenance()));
  }
  void write_csv(const std::string& file, const SweepData& sweep) {
    write(file, to_csv(sweep, provenance()));
  }
  void write_csv(const std::string& file, const Table& table) {
    write(file, to_csv(table, provenance()));
  }
  void write_json(const std::string& file, ordered_json body) {
    ordered_json doc;
    doc["provenance"] = {{"tool", "lnpr " + std::string(LNPR_VERSION)},
                         {"subcommand", name_},
                         {"config_sha256", hash_},
                         {"seed", seed_}};
    doc["result"] = std::move(body);
    write(file, doc.dump(2) + "\n");
  }

  void say(const std::string& line) const {
    if (!quiet_) std::cout << line << "\n";
  }

  FpiCavity fpi_cavity() const {
    const auto& f = config_.fpi;
    return {f.length_mm, f.facet_reflectivity_probe, f.facet_reflectivity_pump, f.angled_facets,
            f.mode, material_};
  }

  QpmDevice qpm_device() const {
    const auto& q = config_.qpm;
    QpmDevice device;
    device.length_mm = q.length_mm;
    device.pump_mode = q.pump_mode;
    device.signal_mode = q.signal_mode;
    device.idler_mode = q.idler_mode;
    device.signal_shift_scale = q.signal_shift_scale;
    device.background = q.background;
    device.material = material_;
    return device;
  }

  void write_manifest(int exit_code, const std::string& error, double wall_time_s) const {
    ordered_json m;
    m["tool"] = "lnpr";
    m["subcommand"] = name_;
    m["status"] = exit_code == kExitOk ? "ok" : "failed";
    m["exit_code"] = exit_code;
    if (!error.empty()) m["error"] = error;
    m["config_sha256"] = hash_;
    m["seed"] = seed_;
    m["versions"] = version_block();
    m["outputs"] = outputs_;
    m["provenance"] = {{"defaulted_keys", loaded_.defaulted_keys},
                       {"config_warnings", loaded_.warnings}};
    m["wall_time_s"] = wall_time_s;
    write_text_file(out_dir_ / "run_manifest.json", m.dump(2) + "\n");
  }

  static ordered_json version_block() {
    return {{"lnpr", LNPR_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"openssl", OPENSSL_VERSION_TEXT},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"compiler", __VERSION__}};
  }

 private:
  std::string name_;
  const LoadedConfig& loaded_;
  const Config& config_;
  fs::path out_dir_;
  std::uint64_t seed_;
  bool quiet_;
  std::string hash_;
  std::shared_ptr<const MaterialModel> material_;
  std::vector<std::string> outputs_;
};

void fpi_trace(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.fpi_trace;
  const auto& params = c.photorefraction_at(r.temperature_c);
  const FpiCavity cavity = run.fpi_cavity();
  const PumpSchedule schedule(r.schedule);
  const Trace trace = simulate_fpi_trace(cavity, schedule, params, r.probe_wavelength_nm,
                                         r.temperature_c, r.sample_period_s);
  Trace index;
  index.value_name = "delta_n";
  index.time_s = trace.time_s;
  for (double t : trace.time_s) index.value.push_back(delta_n_temporal(params, schedule, t));

  double extreme = 0.0;
  for (double v : index.value) extreme = std::min(extreme, v);
  const double quantum = half_period_delta_n(r.probe_wavelength_nm, cavity.length_mm);
  const double onset = schedule.segments().front().start_s;
  const int halves = count_half_periods(trace, onset);

  run.write_csv("transmission.csv", trace);
  run.write_csv("delta_n.csv", index);
  ordered_json j;
  j["temperature_c"] = r.temperature_c;
  j["probe_wavelength_nm"] = r.probe_wavelength_nm;
  j["samples"] = trace.size();
  j["half_period_delta_n"] = quantum;
  j["peak_delta_n"] = extreme;
  j["extrema_after_onset"] = halves;
  j["delta_n_from_counting"] = -halves * quantum;
  run.write_json("summary.json", j);
  run.say("fpi-trace: " + std::to_string(trace.size()) + " samples, peak dn " + tag(extreme) +
          ", " + std::to_string(halves) + " half-oscillations");
}

void fpi_char(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.fpi_char;
  const FpiCavity cavity = run.fpi_cavity();
  ordered_json rows = ordered_json::array();
  for (double w : r.wavelengths_nm) {
    const auto ch = fpi_characteristics(cavity, w, r.temperature_c);
    const double quantum = half_period_delta_n(w, cavity.length_mm);
    ordered_json row;
    row["wavelength_nm"] = w;
    row["refractive_index"] = c.material.build().refractive_index(w, r.temperature_c, cavity.mode);
    row["facet_reflectivity"] = cavity.angled_facets ? 0.0 : cavity.facet_reflectivity(w);
    row["free_spectral_range_pm"] = ch.free_spectral_range_pm;
    row["fwhm_pm"] = ch.fwhm_pm ? ordered_json(*ch.fwhm_pm) : ordered_json(nullptr);
    row["coefficient_of_finesse"] = ch.finesse.coefficient;
    row["conventional_finesse"] = ch.finesse.conventional;
    row["half_period_delta_n"] = quantum;
    rows.push_back(row);

    // Transmission over three full periods in delta n.
    SweepData scan;
    scan.abscissa_name = "delta_n";
    scan.value_name = "transmission";
    const int points = 601;
    for (int i = 0; i < points; ++i) {
      const double dn = -6.0 * quantum * i / (points - 1);
      scan.abscissa.push_back(dn);
      scan.value.push_back(fpi_transmission(cavity, w, r.temperature_c, dn));
    }
    scan.sort_by_abscissa();
    run.write_csv("transmission_vs_dn_" + tag(w) + "nm.csv", scan);
    run.say("fpi-char: " + tag(w) + " nm FSR " + tag(ch.free_spectral_range_pm) +
            " pm, F = " + tag(ch.finesse.coefficient) + ", finesse " +
            tag(ch.finesse.conventional));
  }
  run.write_json("characteristics.json", {{"temperature_c", r.temperature_c},
                                          {"wavelengths", rows}});
}

void coupler_sweep(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.coupler_sweep;
  const auto powers = or_default(r.pump_powers_mw, 15.0, 0.5);
  ordered_json rows = ordered_json::array();
  for (double t : r.temperatures_c) {
    const auto& params = c.photorefraction_at(t);
    SweepData sweep = reflectivity_vs_pump(c.coupler, params, r.probe_wavelength_nm, powers);
    sweep.value_name = "reflectivity";
    run.write_csv("reflectivity_" + tag(t) + "C.csv", sweep);
    const auto [lo, hi] = std::minmax_element(sweep.value.begin(), sweep.value.end());
    const double k = c.coupler.coupling_constant(t);
    ordered_json row;
    row["temperature_c"] = t;
    row["coupling_constant_per_mm"] = k;
    row["coupling_length_mm"] = coupling_length(k);
    row["interaction_length_mm"] = c.coupler.interaction_length_mm;
    row["reflectivity_at_zero_pump"] = sweep.value.front();
    row["reflectivity_min"] = *lo;
    row["reflectivity_max"] = *hi;
    row["relative_variation"] = (*hi - *lo) / *hi;
    rows.push_back(row);
    run.say("coupler-sweep: " + tag(t) + " C, R from " + tag(*lo) + " to " + tag(*hi));
  }
  run.write_json("summary.json", {{"probe_wavelength_nm", r.probe_wavelength_nm},
                                  {"temperatures", rows}});
}

void homodyne(Run& run) {
  const auto& r = run.config().run.homodyne;
  const double s = squeezing_parameter_from_db(r.squeezing_db);
  const HomodyneConfig base{r.reflectivity, r.lo_amplitude_sq, s, r.phase_rad};
  const double noise = homodyne_noise(base);
  SweepData scan;
  scan.abscissa_name = "phase_rad";
  scan.value_name = "noise_dB";
  for (int i = 0; i < r.phase_points; ++i) {
    HomodyneConfig h = base;
    h.phase_rad = std::numbers::pi * i / (r.phase_points - 1);
    scan.abscissa.push_back(h.phase_rad);
    scan.value.push_back(10.0 * std::log10(homodyne_noise(h) / r.lo_amplitude_sq));
  }
  run.write_csv("noise_vs_phase.csv", scan);
  const double db = 10.0 * std::log10(noise / r.lo_amplitude_sq);
  run.write_json("summary.json", {{"reflectivity", r.reflectivity},
                                  {"lo_amplitude_sq", r.lo_amplitude_sq},
                                  {"squeezing_parameter", s},
                                  {"phase_rad", r.phase_rad},
                                  {"noise_variance", noise},
                                  {"noise_dB", db}});
  run.say("homodyne: " + tag(db) + " dB relative to shot noise");
}

void opo_spectrum(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.opo_spectrum;
  const double sigma = pump_parameter_for_squeezing(r.initial_squeezing_db);
  const double eta = r.detection_efficiency;
  const auto omegas = grid(0.0, r.omega_max, r.omega_step);

  ordered_json levels = ordered_json::array();
  for (double d : r.detunings) {
    const NormalizedDetuning detuning{d};
    if (!(sigma < opo_threshold(detuning))) {
      throw ValidationError("opo-spectrum: pump above threshold at detuning " + tag(d));
    }
    Table table{{"omega", "squeezed_dB", "antisqueezed_dB", "squeezed_angle_rad"}, {}};
    for (double w : omegas) {
      const auto e = opo_quadrature_extremes(sigma, detuning, w, eta);
      table.rows.push_back({w, 10.0 * std::log10(e.squeezed), 10.0 * std::log10(e.antisqueezed),
                            e.squeezed_angle});
    }
    run.write_csv("spectrum_detuning_" + tag(d) + ".csv", table);
    const auto best = opo_optimal_levels(sigma, detuning, eta);
    levels.push_back({{"detuning", d},
                      {"best_squeezing_dB", best.best_squeezing_db},
                      {"best_antisqueezing_dB", best.best_antisqueezing_db},
                      {"squeezing_frequency", best.squeezing_frequency},
                      {"antisqueezing_frequency", best.antisqueezing_frequency}});
    run.say("opo-spectrum: detuning " + tag(d) + " best " + tag(best.best_squeezing_db) +
            " dB / +" + tag(best.best_antisqueezing_db) + " dB");
  }

  Table scan{{"detuning", "best_squeezing_dB", "best_antisqueezing_dB", "squeezing_frequency"},
             {}};
  for (double d : grid(0.0, r.detuning_scan_max, r.detuning_scan_step)) {
    const auto best = opo_optimal_levels(sigma, {d}, eta);
    scan.rows.push_back(
        {d, best.best_squeezing_db, best.best_antisqueezing_db, best.squeezing_frequency});
  }
  run.write_csv("optimal_vs_detuning.csv", scan);

  const auto& sq = c.squeezer_cavity;
  const SqueezerCavity cavity{sq.length_mm, sq.mirror_r1, sq.mirror_r2, sq.mode, run.material()};
  ordered_json conversions = ordered_json::array();
  for (double dn : r.delta_n) {
    conversions.push_back(
        {{"delta_n", dn}, {"detuning", delta_n_to_detuning(cavity, dn, 1550.0).value}});
  }
  run.write_json("summary.json", {{"initial_squeezing_dB", r.initial_squeezing_db},
                                  {"pump_parameter", sigma},
                                  {"detection_efficiency", eta},
                                  {"levels", levels},
                                  {"index_to_detuning", conversions}});
}

double poling_period(const Run& run) {
  const auto& c = run.config();
  const auto& q = c.qpm;
  if (q.poling_period_um) return *q.poling_period_um;
  const auto& params = c.photorefraction_at(q.calibration_temperature_c);
  return calibrate_poling_period(*run.material(), q.calibration_temperature_c,
                                 q.calibration_pump_wavelength_nm,
                                 2.0 * q.calibration_pump_wavelength_nm,
                                 {q.pump_mode, q.signal_mode, q.idler_mode},
                                 delta_n_steady(params, q.calibration_reference_power_mw));
}

void spdc(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.spdc_spectrum;
  QpmDevice device = run.qpm_device();
  device.poling_period_um = poling_period(run);
  const auto wavelengths = grid(r.wavelength_min_nm, r.wavelength_max_nm, r.wavelength_step_nm);
  const double max_power =
      r.pump_powers_mw.empty() ? 0.0
                               : *std::max_element(r.pump_powers_mw.begin(), r.pump_powers_mw.end());

  ordered_json points = ordered_json::array();
  for (const auto& p : r.points) {
    const auto& params = c.photorefraction_at(p.temperature_c);
    ordered_json spectra = ordered_json::array();
    std::vector<std::vector<double>> curves;
    for (double power : r.pump_powers_mw) {
      const SpdcOperatingPoint point{p.pump_wavelength_nm, p.temperature_c, power};
      SweepData s = spdc_spectrum(device, point, params, wavelengths);
      run.write_csv("spectrum_" + tag(p.temperature_c) + "C_" + tag(p.pump_wavelength_nm) +
                        "nm_" + tag(power) + "mW.csv",
                    s);
      curves.push_back(s.value);
      const auto signal = phase_matched_signal(device, point, params, wavelengths.back());
      spectra.push_back(
          {{"pump_power_mw", power},
           {"degenerate_mismatch_per_mm",
            qpm_mismatch(device, point, 2.0 * p.pump_wavelength_nm, params)},
           {"phase_matched_signal_nm", signal ? ordered_json(*signal) : ordered_json(nullptr)}});
    }
    double overlap = 0.0;
    if (curves.size() >= 2) {
      for (std::size_t i = 0; i < wavelengths.size(); ++i) {
        overlap = std::max(overlap, std::abs(curves.front()[i] - curves.back()[i]));
      }
    }
    const auto to_degeneracy =
        degeneracy_pump_power(device, p.temperature_c, p.pump_wavelength_nm, params, max_power);
    points.push_back(
        {{"temperature_c", p.temperature_c},
         {"pump_wavelength_nm", p.pump_wavelength_nm},
         {"spectra", spectra},
         {"max_abs_difference_lowest_vs_highest_power", overlap},
         {"degeneracy_pump_power_mw",
          to_degeneracy ? ordered_json(*to_degeneracy) : ordered_json(nullptr)}});
    run.say("spdc-spectrum: " + tag(p.temperature_c) + " C, " + tag(p.pump_wavelength_nm) +
            " nm, lowest vs highest power differ by " + tag(overlap));
  }
  run.write_json("summary.json",
                 {{"poling_period_um", device.poling_period_um}, {"points", points}});
}

void squeeze_budget(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.squeeze_budget;
  const auto& params = c.photorefraction_at(r.temperature_c);
  const auto& h = c.homodyne_coupler;

  CouplerGeometry geometry;
  geometry.coupling_constant_per_mm = h.coupling_constant_per_mm;
  geometry.waveguide_separation_um = h.waveguide_separation_um;
  geometry.design_wavelength_nm = r.probe_wavelength_nm;
  geometry.interaction_length_mm = h.interaction_length_mm
                                       ? *h.interaction_length_mm
                                       : balanced_length(geometry.coupling_constant(r.temperature_c));

  const auto residual = or_default(r.residual_pump_powers_mw, 15.0, 0.5);
  Table measured{{"pump_power_mW"}, {}};
  std::vector<SweepData> curves;
  for (double db : r.initial_squeezing_db) {
    measured.columns.push_back("measured_dB_initial_" + tag(db));
    curves.push_back(measured_squeezing_vs_residual_pump(
        geometry, params, r.probe_wavelength_nm, db, residual, r.pump_during_calibration));
  }
  for (std::size_t i = 0; i < residual.size(); ++i) {
    std::vector<double> row{curves.empty() ? residual[i] : curves.front().abscissa[i]};
    for (const auto& curve : curves) row.push_back(curve.value[i]);
    measured.rows.push_back(row);
  }
  run.write_csv("measured_squeezing.csv", measured);

  // Generation side: a device phase matched at degeneracy without pump,
  // detuned by the pump-induced index shift.
  QpmDevice device = run.qpm_device();
  const auto& q = c.qpm;
  device.poling_period_um =
      q.poling_period_um ? *q.poling_period_um
                         : calibrate_poling_period(*run.material(), r.temperature_c,
                                                   r.generation_pump_wavelength_nm,
                                                   2.0 * r.generation_pump_wavelength_nm,
                                                   {q.pump_mode, q.signal_mode, q.idler_mode});
  const auto generation = or_default(r.generation_pump_powers_mw, 100.0, 2.0);
  const auto curves_gen =
      effective_squeezing_vs_power(device, r.temperature_c, r.generation_pump_wavelength_nm,
                                   params, r.mu0_per_sqrt_mw, generation);
  Table gen{{"pump_power_mW", "ideal_dB", "photorefractive_dB"}, {}};
  for (std::size_t i = 0; i < curves_gen.ideal.size(); ++i) {
    gen.rows.push_back({curves_gen.ideal.abscissa[i], curves_gen.ideal.value[i],
                        curves_gen.photorefractive.value[i]});
  }
  run.write_csv("generation_squeezing.csv", gen);

  ordered_json levels = ordered_json::array();
  for (std::size_t i = 0; i < curves.size(); ++i) {
    levels.push_back({{"initial_dB", r.initial_squeezing_db[i]},
                      {"at_max_residual_power_dB", curves[i].value.back()},
                      {"degradation_dB", curves[i].value.back() - r.initial_squeezing_db[i]}});
  }
  run.write_json(
      "summary.json",
      {{"temperature_c", r.temperature_c},
       {"homodyne_interaction_length_mm", geometry.interaction_length_mm},
       {"pump_during_calibration", r.pump_during_calibration},
       {"max_residual_pump_mw", residual.empty() ? 0.0 : residual.back()},
       {"measured", levels},
       {"generation_poling_period_um", device.poling_period_um},
       {"ideal_at_max_power_dB", curves_gen.ideal.value.back()},
       {"photorefractive_at_max_power_dB", curves_gen.photorefractive.value.back()}});
  for (const auto& l : levels) {
    run.say("squeeze-budget: " + tag(l["initial_dB"].get<double>()) + " dB -> " +
            tag(l["at_max_residual_power_dB"].get<double>()) + " dB");
  }
}

void fit_dn(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.fit_dn;
  std::vector<TemperatureSweep> sweeps;
  std::vector<std::string> sources;
  ordered_json truth = ordered_json::array();
  if (!r.sweeps.empty()) {
    for (const auto& f : r.sweeps) {
      fs::path path = f.path;
      if (path.is_relative()) path = c.base_dir / path;
      auto ingested = ingest_csv(path, CsvKind::sweep);
      for (const auto& w : ingested.warnings) run.say("fit-dn: " + path.string() + ": " + w);
      sweeps.push_back({std::get<SweepData>(ingested.data), c.photorefraction_at(f.temperature_c)});
      sources.push_back(path.string());
    }
  } else {
    std::mt19937_64 rng(run.seed());
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto powers = or_default(r.synthetic_pump_powers_mw, 15.0, 1.0);
    for (double t : r.synthetic_temperatures_c) {
      const auto& params = c.photorefraction_at(t);
      SweepData sweep = reflectivity_vs_pump(c.coupler, params, r.probe_wavelength_nm, powers);
      sweep.value_name = "reflectivity";
      if (r.synthetic_noise_relative > 0.0) {
        sweep.sigma.emplace();
        for (double& v : sweep.value) {
          const double sigma = r.synthetic_noise_relative * v;
          sweep.sigma->push_back(sigma);
          v += sigma * normal(rng);
        }
      }
      const std::string file = "synthetic_reflectivity_" + tag(t) + "C.csv";
      run.write_csv(file, sweep);
      sources.push_back(file);
      truth.push_back({{"temperature_c", t}, {"a", params.a}, {"b_mw", params.b_mw},
                       {"c", params.c}});
      sweeps.push_back({sweep, params});
    }
  }

  ordered_json fits = ordered_json::array();
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    const DeltaNFit fit = fit_delta_n_from_reflectivity(sweeps[i], c.coupler, r.probe_wavelength_nm);
    const double t = fit.params.temperature_c;
    Table points{{"pump_power_mW", "delta_n", "sigma", "excluded"}, {}};
    for (const auto& p : fit.points) {
      points.rows.push_back({p.pump_power_mw, p.delta_n, p.sigma, p.excluded ? 1.0 : 0.0});
    }
    run.write_csv("delta_n_" + tag(t) + "C.csv", points);
    const double p_max = sweeps[i].sweep.abscissa.back();
    const double end = delta_n_steady(fit.params, p_max);
    double secant_dev = 0.0;
    for (const auto& p : fit.points) {
      if (p_max <= 0.0 || end == 0.0) break;
      const double secant = end * p.pump_power_mw / p_max;
      secant_dev = std::max(secant_dev, std::abs(delta_n_steady(fit.params, p.pump_power_mw) -
                                                 secant) / std::abs(end));
    }
    ordered_json j;
    j["temperature_c"] = t;
    j["source"] = sources[i];
    j["a"] = fit.params.a;
    j["b_mw"] = fit.params.b_mw;
    j["c"] = fit.params.c;
    j["b_held_fixed"] = true;
    j["linear_slope_per_mw"] = -fit.params.a / fit.params.b_mw;
    j["delta_n_at_10_mw"] = delta_n_steady(fit.params, 10.0);
    j["max_secant_deviation"] = secant_dev;
    j["fit"] = fit_json(fit.fit);
    j["warnings"] = fit.warnings;
    fits.push_back(j);
    run.say("fit-dn: " + tag(t) + " C, dn(10 mW) = " + tag(delta_n_steady(fit.params, 10.0)) +
            (fit.fit.converged ? "" : " (not converged: " + fit.fit.reason + ")"));
  }
  ordered_json body{{"probe_wavelength_nm", r.probe_wavelength_nm},
                    {"synthetic", r.sweeps.empty()},
                    {"fits", fits}};
  if (r.sweeps.empty()) body["generating_parameters"] = truth;
  run.write_json("fit_dn.json", body);
}

void fit_fpi(Run& run) {
  const auto& c = run.config();
  const auto& r = c.run.fit_fpi;
  const FpiCavity cavity = run.fpi_cavity();
  Trace trace;
  ordered_json truth;
  if (!r.trace_path.empty()) {
    fs::path path = r.trace_path;
    if (path.is_relative()) path = c.base_dir / path;
    trace = ingest_trace(path);
  } else {
    const auto& params = c.photorefraction_at(r.temperature_c);
    const PumpSchedule schedule(c.run.fpi_trace.schedule);
    trace = simulate_fpi_trace(cavity, schedule, params, r.probe_wavelength_nm, r.temperature_c,
                               c.run.fpi_trace.sample_period_s);
    std::mt19937_64 rng(run.seed());
    std::normal_distribution<double> normal(0.0, 1.0);
    if (r.synthetic_noise_relative > 0.0) {
      for (double& v : trace.value) v *= 1.0 + r.synthetic_noise_relative * normal(rng);
    }
    run.write_csv("synthetic_trace.csv", trace);
    double peak = 0.0;
    for (double t : trace.time_s) peak = std::min(peak, delta_n_temporal(params, schedule, t));
    truth = {{"peak_delta_n", peak}, {"tau_build_s", params.tau_build_s}};
  }

  const FpiTraceFit fit =
      fit_fpi_trace(trace, cavity, {r.probe_wavelength_nm, r.temperature_c, r.pump_on_s});
  const double coefficient =
      finesse(cavity.facet_reflectivity(r.probe_wavelength_nm),
              cavity.facet_reflectivity(r.probe_wavelength_nm))
          .coefficient;
  Trace model;
  model.value_name = "model_transmission";
  model.time_s = trace.time_s;
  for (double t : trace.time_s) {
    model.value.push_back(fpi_step_model(coefficient, cavity.length_mm, r.probe_wavelength_nm,
                                         fit.delta_n_total, fit.tau_build_s, fit.phase_offset_rad,
                                         r.pump_on_s, t));
  }
  run.write_csv("fitted_trace.csv", model);

  const int halves = count_half_periods(trace, r.pump_on_s, 5);
  ordered_json j;
  j["delta_n_total"] = fit.delta_n_total;
  j["tau_build_s"] = fit.tau_build_s;
  j["phase_offset_rad"] = fit.phase_offset_rad;
  j["fit"] = fit_json(fit.fit);
  j["half_periods_counted"] = halves;
  j["delta_n_from_counting"] = -halves * half_period_delta_n(r.probe_wavelength_nm, cavity.length_mm);
  j["masked_intervals"] = trace.masked_intervals();
  if (!truth.is_null()) j["generating_values"] = truth;
  run.write_json("fit_fpi.json", j);
  run.say("fit-fpi: dn_total " + tag(fit.delta_n_total) + ", tau " + tag(fit.tau_build_s) +
          " s" + (fit.fit.converged ? "" : " (" + fit.fit.reason + ")"));
}

void dispatch(std::string_view name, Run& run) {
  if (name == "fpi-trace") return fpi_trace(run);
  if (name == "fpi-char") return fpi_char(run);
  if (name == "coupler-sweep") return coupler_sweep(run);
  if (name == "homodyne") return homodyne(run);
  if (name == "opo-spectrum") return opo_spectrum(run);
  if (name == "spdc-spectrum") return spdc(run);
  if (name == "squeeze-budget") return squeeze_budget(run);
  if (name == "fit-dn") return fit_dn(run);
  if (name == "fit-fpi") return fit_fpi(run);
  throw ValidationError("unknown subcommand '" + std::string(name) + "'");
}

void write_bare_manifest(const fs::path& dir, std::string_view name, int code,
                         const std::string& error) {
  ordered_json m;
  m["tool"] = "lnpr";
  m["subcommand"] = std::string(name);
  m["status"] = "failed";
  m["exit_code"] = code;
  m["error"] = error;
  m["versions"] = Run::version_block();
  m["outputs"] = ordered_json::array();
  write_text_file(dir / "run_manifest.json", m.dump(2) + "\n");
}

}  // namespace

std::span<const std::string_view> subcommand_names() { return kSubcommands; }

std::string version_string() { return LNPR_VERSION; }

int run_subcommand(std::string_view name, const RunFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  auto code_for = [](const std::exception& e) {
    if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
    if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitValidation;
    return kExitNumerical;
  };

  if (std::find(kSubcommands.begin(), kSubcommands.end(), name) == kSubcommands.end()) {
    std::cerr << "lnpr: unknown subcommand '" << name << "'\n";
    return kExitValidation;
  }

  LoadedConfig loaded;
  try {
    loaded = parse_config(flags.config_path, flags.strict);
  } catch (const std::exception& e) {
    const int code = code_for(e);
    std::cerr << "lnpr " << name << ": " << e.what() << "\n";
    if (flags.out_dir) {
      try {
        write_bare_manifest(*flags.out_dir / std::string(name), name, code, e.what());
      } catch (const std::exception&) {
      }
    }
    return code;
  }
  if (!flags.quiet) {
    for (const auto& w : loaded.warnings) std::cerr << "lnpr: warning: " << w << "\n";
  }

  const Config& config = loaded.config;
  fs::path out = flags.out_dir ? *flags.out_dir : fs::path(config.run.output_dir);
  if (!flags.out_dir && out.is_relative()) out = config.base_dir / out;
  out /= std::string(name);
  const std::uint64_t seed = flags.seed ? *flags.seed : config.run.seed;

  std::optional<Run> run;
  try {
    run.emplace(name, loaded, out, seed, flags.quiet);
    dispatch(name, *run);
    run->write_manifest(kExitOk, "", elapsed());
    return kExitOk;
  } catch (const std::exception& e) {
    const int code = code_for(e);
    std::cerr << "lnpr " << name << ": " << e.what() << "\n";
    try {
      if (run) {
        run->write_manifest(code, e.what(), elapsed());
      } else {
        write_bare_manifest(out, name, code, e.what());
      }
    } catch (const std::exception& inner) {
      std::cerr << "lnpr " << name << ": cannot write manifest: " << inner.what() << "\n";
    }
    return code;
  }
}

}  // namespace lnpr
