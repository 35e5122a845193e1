#include "lnpr/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "lnpr/error.hpp"

namespace lnpr {

namespace {

bool present(const YAML::Node& node) { return node.IsDefined() && !node.IsNull(); }

std::string line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.line < 0) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

// Reads keys from one YAML mapping, remembering which were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path, LoadedConfig& out, bool strict)
      : node_(std::move(node)), path_(std::move(path)), out_(out), strict_(strict) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw ValidationError(path_ + ": expected a mapping" + line_of(node_));
    }
  }

  const std::string& path() const { return path_; }

  YAML::Node take(const std::string& key) {
    used_.insert(key);
    if (!present(node_)) return {};
    const YAML::Node& map = node_;
    return map[key];
  }

  template <class T>
  void get(const std::string& key, T& value) {
    YAML::Node node = take(key);
    if (!present(node)) {
      out_.defaulted_keys.push_back(field(key));
      return;
    }
    value = convert<T>(node, field(key));
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& value) {
    YAML::Node node = take(key);
    if (!present(node)) return;
    value = convert<T>(node, field(key));
  }

  template <class T>
  void get(const std::string& key, std::vector<T>& value) {
    YAML::Node node = take(key);
    if (!present(node)) {
      out_.defaulted_keys.push_back(field(key));
      return;
    }
    if (!node.IsSequence()) throw ValidationError(field(key) + ": expected a list" + line_of(node));
    value.clear();
    for (std::size_t i = 0; i < node.size(); ++i) {
      value.push_back(convert<T>(node[i], field(key) + "[" + std::to_string(i) + "]"));
    }
  }

  /// Sub-mapping; an absent key yields an empty section whose reads all fall
  /// back to defaults.
  Section child(const std::string& key) { return Section(take(key), field(key), out_, strict_); }

  /// Sequence of mappings, or nullopt if the key is absent.
  std::optional<std::vector<Section>> list(const std::string& key) {
    YAML::Node node = take(key);
    if (!present(node)) {
      out_.defaulted_keys.push_back(field(key));
      return std::nullopt;
    }
    if (!node.IsSequence()) throw ValidationError(field(key) + ": expected a list" + line_of(node));
    std::vector<Section> items;
    for (std::size_t i = 0; i < node.size(); ++i) {
      items.emplace_back(node[i], field(key) + "[" + std::to_string(i) + "]", out_, strict_);
    }
    return items;
  }

  template <class T>
  T required(const std::string& key) {
    YAML::Node node = take(key);
    if (!present(node)) throw ValidationError(field(key) + ": required key missing" + line_of(node_));
    return convert<T>(node, field(key));
  }

  bool has(const std::string& key) const {
    if (!node_ || !node_.IsMap()) return false;
    const YAML::Node& map = node_;
    return map[key].IsDefined() && !map[key].IsNull();
  }

  /// Raw mapping node for keys that are data (e.g. temperatures).
  YAML::Node raw(const std::string& key) { return take(key); }

  void finish() {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& item : node_) {
      const auto key = item.first.as<std::string>();
      if (used_.count(key)) continue;
      const std::string msg = "unknown key '" + field(key) + "'" + line_of(item.first);
      if (strict_) throw ValidationError(msg);
      out_.warnings.push_back(msg);
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <class T>
  static T convert(const YAML::Node& node, const std::string& where) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        const auto v = node.as<double>();
        if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value" + line_of(node));
        return v;
      } else {
        return node.as<T>();
      }
    } catch (const YAML::Exception&) {
      throw ValidationError(where + ": cannot read value '" +
                            (node.IsScalar() ? node.Scalar() : std::string("<non-scalar>")) + "'" +
                            line_of(node));
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  LoadedConfig& out_;
  bool strict_;
  std::set<std::string> used_;
};

std::vector<double> range(double start, double stop, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(start + step * static_cast<double>(i));
  return out;
}

void read_material(Section s, MaterialConfig& m) {
  Section c = s.child("sellmeier");
  auto& k = m.sellmeier;
  c.get("a1", k.a1);
  c.get("a2", k.a2);
  c.get("a3", k.a3);
  c.get("a4", k.a4);
  c.get("a5", k.a5);
  c.get("a6", k.a6);
  c.get("b1", k.b1);
  c.get("b2", k.b2);
  c.get("b3", k.b3);
  c.get("b4", k.b4);
  c.get("reference_temperature_c", k.reference_temperature_c);
  c.get("temperature_shift_c", k.temperature_shift_c);
  c.finish();

  if (auto modes = s.list("modes")) {
    m.modes.clear();
    for (auto& item : *modes) {
      ModeSpec spec;
      const auto band = item.required<std::string>("band");
      try {
        spec.band = band_from_string(band);
      } catch (const ValidationError& e) {
        throw ValidationError(item.path() + ".band: " + e.what());
      }
      spec.id = item.required<std::string>("id");
      item.get("offset", spec.offset);
      if (item.has("target")) {
        Section t = item.child("target");
        IndexTarget target;
        target.index = t.required<double>("index");
        target.wavelength_nm = t.required<double>("wavelength_nm");
        target.temperature_c = t.required<double>("temperature_c");
        t.finish();
        spec.target = target;
      } else {
        item.take("target");
      }
      item.finish();
      m.modes.push_back(spec);
    }
  }
  s.finish();
}

void read_photorefraction(std::vector<Section>& items, std::vector<PhotorefractionParams>& out) {
  out.clear();
  for (auto& item : items) {
    PhotorefractionParams p;
    p.temperature_c = item.required<double>("temperature_c");
    p.a = item.required<double>("a");
    p.b_mw = item.required<double>("b_mw");
    p.c = item.required<double>("c");
    item.get("tau_build_s", p.tau_build_s);
    item.get("tau_dark_s", p.tau_dark_s);
    item.get("tau_erase_s", p.tau_erase_s);
    item.finish();
    out.push_back(p);
  }
}

std::map<double, double> read_temperature_map(Section& s, const std::string& key,
                                              const std::map<double, double>& fallback,
                                              LoadedConfig& out) {
  YAML::Node node = s.raw(key);
  if (!present(node)) {
    out.defaulted_keys.push_back(s.field(key));
    return fallback;
  }
  if (!node.IsMap()) throw ValidationError(s.field(key) + ": expected a mapping" + line_of(node));
  std::map<double, double> result;
  for (const auto& item : node) {
    const auto t = Section::convert<double>(item.first, s.field(key) + " key");
    result[t] = Section::convert<double>(item.second, s.field(key) + "." + item.first.Scalar());
  }
  return result;
}

void read_run(Section s, RunConfig& r) {
  s.get("output_dir", r.output_dir);
  s.get("seed", r.seed);

  {
    Section c = s.child("fpi_trace");
    auto& v = r.fpi_trace;
    c.get("temperature_c", v.temperature_c);
    c.get("probe_wavelength_nm", v.probe_wavelength_nm);
    c.get("sample_period_s", v.sample_period_s);
    if (auto items = c.list("schedule")) {
      v.schedule.clear();
      for (auto& item : *items) {
        PumpSegment seg;
        seg.start_s = item.required<double>("start_s");
        seg.end_s = item.required<double>("end_s");
        item.get("pump_power_mw", seg.pump_power_mw);
        item.get("erasing", seg.erasing);
        item.finish();
        v.schedule.push_back(seg);
      }
    }
    c.finish();
  }
  {
    Section c = s.child("fpi_char");
    c.get("temperature_c", r.fpi_char.temperature_c);
    c.get("wavelengths_nm", r.fpi_char.wavelengths_nm);
    c.finish();
  }
  {
    Section c = s.child("coupler_sweep");
    auto& v = r.coupler_sweep;
    c.get("temperatures_c", v.temperatures_c);
    c.get("probe_wavelength_nm", v.probe_wavelength_nm);
    c.get("pump_powers_mw", v.pump_powers_mw);
    c.finish();
  }
  {
    Section c = s.child("homodyne");
    auto& v = r.homodyne;
    c.get("reflectivity", v.reflectivity);
    c.get("lo_amplitude_sq", v.lo_amplitude_sq);
    c.get("squeezing_db", v.squeezing_db);
    c.get("phase_rad", v.phase_rad);
    c.get("phase_points", v.phase_points);
    c.finish();
  }
  {
    Section c = s.child("opo_spectrum");
    auto& v = r.opo_spectrum;
    c.get("initial_squeezing_db", v.initial_squeezing_db);
    c.get("detunings", v.detunings);
    c.get("omega_max", v.omega_max);
    c.get("omega_step", v.omega_step);
    c.get("detection_efficiency", v.detection_efficiency);
    c.get("detuning_scan_max", v.detuning_scan_max);
    c.get("detuning_scan_step", v.detuning_scan_step);
    c.get("delta_n", v.delta_n);
    c.finish();
  }
  {
    Section c = s.child("spdc_spectrum");
    auto& v = r.spdc_spectrum;
    if (auto items = c.list("points")) {
      v.points.clear();
      for (auto& item : *items) {
        SpdcPoint p;
        p.temperature_c = item.required<double>("temperature_c");
        p.pump_wavelength_nm = item.required<double>("pump_wavelength_nm");
        item.finish();
        v.points.push_back(p);
      }
    }
    c.get("pump_powers_mw", v.pump_powers_mw);
    c.get("wavelength_min_nm", v.wavelength_min_nm);
    c.get("wavelength_max_nm", v.wavelength_max_nm);
    c.get("wavelength_step_nm", v.wavelength_step_nm);
    c.finish();
  }
  {
    Section c = s.child("squeeze_budget");
    auto& v = r.squeeze_budget;
    c.get("temperature_c", v.temperature_c);
    c.get("probe_wavelength_nm", v.probe_wavelength_nm);
    c.get("initial_squeezing_db", v.initial_squeezing_db);
    c.get("residual_pump_powers_mw", v.residual_pump_powers_mw);
    c.get("pump_during_calibration", v.pump_during_calibration);
    c.get("mu0_per_sqrt_mw", v.mu0_per_sqrt_mw);
    c.get("generation_pump_wavelength_nm", v.generation_pump_wavelength_nm);
    c.get("generation_pump_powers_mw", v.generation_pump_powers_mw);
    c.finish();
  }
  {
    Section c = s.child("fit_dn");
    auto& v = r.fit_dn;
    c.get("probe_wavelength_nm", v.probe_wavelength_nm);
    if (auto items = c.list("sweeps")) {
      v.sweeps.clear();
      for (auto& item : *items) {
        SweepFile f;
        f.temperature_c = item.required<double>("temperature_c");
        f.path = item.required<std::string>("path");
        item.finish();
        v.sweeps.push_back(f);
      }
    }
    c.get("synthetic_temperatures_c", v.synthetic_temperatures_c);
    c.get("synthetic_pump_powers_mw", v.synthetic_pump_powers_mw);
    c.get("synthetic_noise_relative", v.synthetic_noise_relative);
    c.finish();
  }
  {
    Section c = s.child("fit_fpi");
    auto& v = r.fit_fpi;
    c.get("trace_path", v.trace_path);
    c.get("temperature_c", v.temperature_c);
    c.get("probe_wavelength_nm", v.probe_wavelength_nm);
    c.get("pump_on_s", v.pump_on_s);
    c.get("synthetic_noise_relative", v.synthetic_noise_relative);
    c.finish();
  }
  s.finish();
}

LoadedConfig from_yaml(const YAML::Node& root, bool strict, const std::filesystem::path& base_dir) {
  LoadedConfig out;
  out.config = default_config();
  Config& c = out.config;
  c.base_dir = base_dir;

  Section top(root, "", out, strict);
  read_material(top.child("material"), c.material);

  if (auto items = top.list("photorefraction")) read_photorefraction(*items, c.photorefraction);

  {
    Section s = top.child("fpi");
    s.get("length_mm", c.fpi.length_mm);
    s.get("facet_reflectivity_probe", c.fpi.facet_reflectivity_probe);
    s.get("facet_reflectivity_pump", c.fpi.facet_reflectivity_pump);
    s.get("angled_facets", c.fpi.angled_facets);
    s.get("mode", c.fpi.mode);
    s.finish();
  }
  {
    Section s = top.child("squeezer_cavity");
    s.get("length_mm", c.squeezer_cavity.length_mm);
    s.get("mirror_r1", c.squeezer_cavity.mirror_r1);
    s.get("mirror_r2", c.squeezer_cavity.mirror_r2);
    s.get("mode", c.squeezer_cavity.mode);
    s.finish();
  }
  {
    Section s = top.child("coupler");
    c.coupler.coupling_constant_per_mm = read_temperature_map(
        s, "coupling_constant_per_mm", c.coupler.coupling_constant_per_mm, out);
    s.get("interaction_length_mm", c.coupler.interaction_length_mm);
    s.get("waveguide_separation_um", c.coupler.waveguide_separation_um);
    s.get("design_wavelength_nm", c.coupler.design_wavelength_nm);
    s.finish();
  }
  {
    Section s = top.child("homodyne_coupler");
    auto& h = c.homodyne_coupler;
    h.coupling_constant_per_mm =
        read_temperature_map(s, "coupling_constant_per_mm", h.coupling_constant_per_mm, out);
    s.get("interaction_length_mm", h.interaction_length_mm);
    s.get("waveguide_separation_um", h.waveguide_separation_um);
    s.finish();
  }
  {
    Section s = top.child("qpm");
    auto& q = c.qpm;
    s.get("length_mm", q.length_mm);
    s.get("pump_mode", q.pump_mode);
    s.get("signal_mode", q.signal_mode);
    s.get("idler_mode", q.idler_mode);
    s.get("signal_shift_scale", q.signal_shift_scale);
    s.get("background", q.background);
    s.get("poling_period_um", q.poling_period_um);
    s.get("calibration_temperature_c", q.calibration_temperature_c);
    s.get("calibration_pump_wavelength_nm", q.calibration_pump_wavelength_nm);
    s.get("calibration_reference_power_mw", q.calibration_reference_power_mw);
    s.finish();
  }
  read_run(top.child("run"), c.run);
  top.finish();

  c.validate();
  return out;
}

// Canonical emitter: fixed key order, 17 significant digits.
class Writer {
 public:
  Writer() {
    e_.SetDoublePrecision(17);
    e_ << YAML::BeginMap;
  }
  std::string finish() {
    e_ << YAML::EndMap;
    return std::string(e_.c_str()) + "\n";
  }
  template <class T>
  Writer& kv(const std::string& key, const T& value) {
    e_ << YAML::Key << key << YAML::Value << value;
    return *this;
  }
  Writer& list(const std::string& key, const std::vector<double>& values) {
    e_ << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : values) e_ << v;
    e_ << YAML::EndSeq;
    return *this;
  }
  Writer& temperature_map(const std::string& key, const std::map<double, double>& values) {
    e_ << YAML::Key << key << YAML::Value << YAML::BeginMap;
    for (const auto& [t, k] : values) e_ << YAML::Key << t << YAML::Value << k;
    e_ << YAML::EndMap;
    return *this;
  }
  Writer& begin(const std::string& key) {
    e_ << YAML::Key << key << YAML::Value << YAML::BeginMap;
    return *this;
  }
  Writer& begin_item() {
    e_ << YAML::BeginMap;
    return *this;
  }
  Writer& begin_list(const std::string& key) {
    e_ << YAML::Key << key << YAML::Value << YAML::BeginSeq;
    return *this;
  }
  Writer& end() {
    e_ << YAML::EndMap;
    return *this;
  }
  Writer& end_list() {
    e_ << YAML::EndSeq;
    return *this;
  }

 private:
  YAML::Emitter e_;
};

}  // namespace

MaterialModel MaterialConfig::build() const { return MaterialModel(sellmeier, modes); }

const PhotorefractionParams& Config::photorefraction_at(double temperature_c) const {
  for (const auto& p : photorefraction) {
    if (std::abs(p.temperature_c - temperature_c) <= 1e-6) return p;
  }
  std::ostringstream msg;
  msg << "no photorefraction section for T = " << temperature_c << " C";
  throw ValidationError(msg.str());
}

bool Config::operator==(const Config& other) const {
  return material == other.material && photorefraction == other.photorefraction &&
         fpi == other.fpi && squeezer_cavity == other.squeezer_cavity &&
         coupler == other.coupler && homodyne_coupler == other.homodyne_coupler &&
         qpm == other.qpm && run == other.run;
}

void Config::validate() const {
  MaterialModel model = [&] {
    try {
      return material.build();
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("material: ") + e.what());
    }
  }();

  std::set<double> temperatures;
  for (std::size_t i = 0; i < photorefraction.size(); ++i) {
    const auto& p = photorefraction[i];
    const std::string where = "photorefraction[" + std::to_string(i) + "]";
    try {
      p.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!temperatures.insert(p.temperature_c).second) {
      throw ValidationError(where + ": duplicate temperature");
    }
  }
  auto need_params = [&](double t, const std::string& where) {
    try {
      photorefraction_at(t);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  };
  auto need_mode = [&](const std::string& mode, double wavelength_nm, const std::string& where) {
    if (mode == kBulkMode) return;
    if (!model.has_mode(band_of(wavelength_nm), mode)) {
      throw ValidationError(where + ": mode '" + mode + "' is not defined in band " +
                            std::string(to_string(band_of(wavelength_nm))));
    }
  };
  auto need_coupling = [](const std::map<double, double>& map, double t, const std::string& where) {
    for (const auto& [temperature, k] : map) {
      if (std::abs(temperature - t) <= 1e-6) return;
    }
    std::ostringstream msg;
    msg << where << ": no coupling constant for T = " << t << " C";
    throw ValidationError(msg.str());
  };
  auto positive = [](double v, const std::string& where) {
    if (!(v > 0.0)) throw ValidationError(where + " must be > 0");
  };

  FpiCavity fpi_cavity{fpi.length_mm, fpi.facet_reflectivity_probe, fpi.facet_reflectivity_pump,
                       fpi.angled_facets, fpi.mode, std::make_shared<MaterialModel>(model)};
  try {
    fpi_cavity.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("fpi: ") + e.what());
  }
  SqueezerCavity squeezer{squeezer_cavity.length_mm, squeezer_cavity.mirror_r1,
                          squeezer_cavity.mirror_r2, squeezer_cavity.mode,
                          fpi_cavity.material};
  squeezer.validate();
  try {
    coupler.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("coupler: ") + e.what());
  }
  if (homodyne_coupler.coupling_constant_per_mm.empty()) {
    throw ValidationError("homodyne_coupler.coupling_constant_per_mm: empty");
  }
  for (const auto& [t, k] : homodyne_coupler.coupling_constant_per_mm) {
    positive(k, "homodyne_coupler.coupling_constant_per_mm");
  }
  if (homodyne_coupler.interaction_length_mm) {
    positive(*homodyne_coupler.interaction_length_mm, "homodyne_coupler.interaction_length_mm");
  }
  positive(qpm.length_mm, "qpm.length_mm");
  if (qpm.poling_period_um) positive(*qpm.poling_period_um, "qpm.poling_period_um");
  if (!(qpm.background >= 0.0)) throw ValidationError("qpm.background must be >= 0");
  if (!(qpm.calibration_reference_power_mw >= 0.0)) {
    throw ValidationError("qpm.calibration_reference_power_mw must be >= 0");
  }
  if (!qpm.poling_period_um) {
    need_params(qpm.calibration_temperature_c, "qpm.calibration_temperature_c");
  }

  const auto& r = run;
  if (r.output_dir.empty()) throw ValidationError("run.output_dir: empty");

  need_params(r.fpi_trace.temperature_c, "run.fpi_trace.temperature_c");
  need_mode(fpi.mode, r.fpi_trace.probe_wavelength_nm, "fpi.mode");
  positive(r.fpi_trace.sample_period_s, "run.fpi_trace.sample_period_s");
  try {
    PumpSchedule schedule(r.fpi_trace.schedule);
    if (schedule.empty()) throw ValidationError("empty schedule");
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("run.fpi_trace.schedule: ") + e.what());
  }
  for (double w : r.fpi_char.wavelengths_nm) need_mode(fpi.mode, w, "fpi.mode");

  for (double t : r.coupler_sweep.temperatures_c) {
    need_params(t, "run.coupler_sweep.temperatures_c");
    need_coupling(coupler.coupling_constant_per_mm, t, "run.coupler_sweep.temperatures_c");
  }
  for (double p : r.coupler_sweep.pump_powers_mw) {
    if (!(p >= 0.0)) throw ValidationError("run.coupler_sweep.pump_powers_mw must be >= 0");
  }

  if (!(r.homodyne.reflectivity >= 0.0 && r.homodyne.reflectivity <= 1.0)) {
    throw ValidationError("run.homodyne.reflectivity must lie in [0, 1]");
  }
  positive(r.homodyne.lo_amplitude_sq, "run.homodyne.lo_amplitude_sq");
  if (!(r.homodyne.squeezing_db <= 0.0)) {
    throw ValidationError("run.homodyne.squeezing_db must be <= 0");
  }
  if (r.homodyne.phase_points < 2) throw ValidationError("run.homodyne.phase_points must be >= 2");

  const auto& o = r.opo_spectrum;
  if (!(o.initial_squeezing_db < 0.0)) {
    throw ValidationError("run.opo_spectrum.initial_squeezing_db must be < 0");
  }
  positive(o.omega_max, "run.opo_spectrum.omega_max");
  positive(o.omega_step, "run.opo_spectrum.omega_step");
  positive(o.detuning_scan_step, "run.opo_spectrum.detuning_scan_step");
  if (!(o.detuning_scan_max >= 0.0)) {
    throw ValidationError("run.opo_spectrum.detuning_scan_max must be >= 0");
  }
  if (!(o.detection_efficiency > 0.0 && o.detection_efficiency <= 1.0)) {
    throw ValidationError("run.opo_spectrum.detection_efficiency must lie in (0, 1]");
  }
  need_mode(squeezer_cavity.mode, 1550.0, "squeezer_cavity.mode");

  const auto& sp = r.spdc_spectrum;
  for (const auto& p : sp.points) {
    need_params(p.temperature_c, "run.spdc_spectrum.points");
    need_mode(qpm.pump_mode, p.pump_wavelength_nm, "qpm.pump_mode");
  }
  need_mode(qpm.signal_mode, 1550.0, "qpm.signal_mode");
  need_mode(qpm.idler_mode, 1550.0, "qpm.idler_mode");
  if (!(sp.wavelength_min_nm < sp.wavelength_max_nm)) {
    throw ValidationError("run.spdc_spectrum: wavelength_min_nm must be < wavelength_max_nm");
  }
  positive(sp.wavelength_step_nm, "run.spdc_spectrum.wavelength_step_nm");
  for (double p : sp.pump_powers_mw) {
    if (!(p >= 0.0)) throw ValidationError("run.spdc_spectrum.pump_powers_mw must be >= 0");
  }

  const auto& sb = r.squeeze_budget;
  need_params(sb.temperature_c, "run.squeeze_budget.temperature_c");
  need_coupling(homodyne_coupler.coupling_constant_per_mm, sb.temperature_c,
                "run.squeeze_budget.temperature_c");
  for (double db : sb.initial_squeezing_db) {
    if (!(db <= 0.0)) throw ValidationError("run.squeeze_budget.initial_squeezing_db must be <= 0");
  }
  if (!(sb.mu0_per_sqrt_mw >= 0.0)) {
    throw ValidationError("run.squeeze_budget.mu0_per_sqrt_mw must be >= 0");
  }

  const auto& fd = r.fit_dn;
  for (std::size_t i = 0; i < fd.sweeps.size(); ++i) {
    const std::string where = "run.fit_dn.sweeps[" + std::to_string(i) + "]";
    need_params(fd.sweeps[i].temperature_c, where + ".temperature_c");
    need_coupling(coupler.coupling_constant_per_mm, fd.sweeps[i].temperature_c,
                  where + ".temperature_c");
    if (fd.sweeps[i].path.empty()) throw ValidationError(where + ".path: empty");
  }
  if (fd.sweeps.empty()) {
    for (double t : fd.synthetic_temperatures_c) {
      need_params(t, "run.fit_dn.synthetic_temperatures_c");
      need_coupling(coupler.coupling_constant_per_mm, t, "run.fit_dn.synthetic_temperatures_c");
    }
  }
  if (!(fd.synthetic_noise_relative >= 0.0)) {
    throw ValidationError("run.fit_dn.synthetic_noise_relative must be >= 0");
  }
  if (!(r.fit_fpi.synthetic_noise_relative >= 0.0)) {
    throw ValidationError("run.fit_fpi.synthetic_noise_relative must be >= 0");
  }
  need_mode(fpi.mode, r.fit_fpi.probe_wavelength_nm, "fpi.mode");
}

LoadedConfig parse_config_string(const std::string& text, bool strict,
                                 const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError("config syntax error at line " + std::to_string(e.mark.line + 1) +
                          ": " + e.msg);
  }
  return from_yaml(root, strict, base_dir);
}

LoadedConfig parse_config(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto dir = path.parent_path();
  if (dir.empty()) dir = ".";
  try {
    return parse_config_string(buffer.str(), strict, dir);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const Config& c) {
  Writer w;
  w.begin("material").begin("sellmeier");
  const auto& k = c.material.sellmeier;
  w.kv("a1", k.a1).kv("a2", k.a2).kv("a3", k.a3).kv("a4", k.a4).kv("a5", k.a5).kv("a6", k.a6);
  w.kv("b1", k.b1).kv("b2", k.b2).kv("b3", k.b3).kv("b4", k.b4);
  w.kv("reference_temperature_c", k.reference_temperature_c);
  w.kv("temperature_shift_c", k.temperature_shift_c).end();
  w.begin_list("modes");
  for (const auto& m : c.material.modes) {
    w.begin_item().kv("band", std::string(to_string(m.band))).kv("id", m.id).kv("offset", m.offset);
    if (m.target) {
      w.begin("target")
          .kv("index", m.target->index)
          .kv("wavelength_nm", m.target->wavelength_nm)
          .kv("temperature_c", m.target->temperature_c)
          .end();
    }
    w.end();
  }
  w.end_list().end();

  w.begin_list("photorefraction");
  for (const auto& p : c.photorefraction) {
    w.begin_item()
        .kv("temperature_c", p.temperature_c)
        .kv("a", p.a)
        .kv("b_mw", p.b_mw)
        .kv("c", p.c)
        .kv("tau_build_s", p.tau_build_s)
        .kv("tau_dark_s", p.tau_dark_s)
        .kv("tau_erase_s", p.tau_erase_s)
        .end();
  }
  w.end_list();

  w.begin("fpi")
      .kv("length_mm", c.fpi.length_mm)
      .kv("facet_reflectivity_probe", c.fpi.facet_reflectivity_probe)
      .kv("facet_reflectivity_pump", c.fpi.facet_reflectivity_pump)
      .kv("angled_facets", c.fpi.angled_facets)
      .kv("mode", c.fpi.mode)
      .end();
  w.begin("squeezer_cavity")
      .kv("length_mm", c.squeezer_cavity.length_mm)
      .kv("mirror_r1", c.squeezer_cavity.mirror_r1)
      .kv("mirror_r2", c.squeezer_cavity.mirror_r2)
      .kv("mode", c.squeezer_cavity.mode)
      .end();
  w.begin("coupler")
      .temperature_map("coupling_constant_per_mm", c.coupler.coupling_constant_per_mm)
      .kv("interaction_length_mm", c.coupler.interaction_length_mm)
      .kv("waveguide_separation_um", c.coupler.waveguide_separation_um)
      .kv("design_wavelength_nm", c.coupler.design_wavelength_nm)
      .end();
  w.begin("homodyne_coupler")
      .temperature_map("coupling_constant_per_mm", c.homodyne_coupler.coupling_constant_per_mm);
  if (c.homodyne_coupler.interaction_length_mm) {
    w.kv("interaction_length_mm", *c.homodyne_coupler.interaction_length_mm);
  }
  w.kv("waveguide_separation_um", c.homodyne_coupler.waveguide_separation_um).end();
  const auto& q = c.qpm;
  w.begin("qpm")
      .kv("length_mm", q.length_mm)
      .kv("pump_mode", q.pump_mode)
      .kv("signal_mode", q.signal_mode)
      .kv("idler_mode", q.idler_mode)
      .kv("signal_shift_scale", q.signal_shift_scale)
      .kv("background", q.background);
  if (q.poling_period_um) w.kv("poling_period_um", *q.poling_period_um);
  w.kv("calibration_temperature_c", q.calibration_temperature_c)
      .kv("calibration_pump_wavelength_nm", q.calibration_pump_wavelength_nm)
      .kv("calibration_reference_power_mw", q.calibration_reference_power_mw)
      .end();

  const auto& r = c.run;
  w.begin("run").kv("output_dir", r.output_dir).kv("seed", r.seed);
  w.begin("fpi_trace")
      .kv("temperature_c", r.fpi_trace.temperature_c)
      .kv("probe_wavelength_nm", r.fpi_trace.probe_wavelength_nm)
      .kv("sample_period_s", r.fpi_trace.sample_period_s)
      .begin_list("schedule");
  for (const auto& s : r.fpi_trace.schedule) {
    w.begin_item()
        .kv("start_s", s.start_s)
        .kv("end_s", s.end_s)
        .kv("pump_power_mw", s.pump_power_mw)
        .kv("erasing", s.erasing)
        .end();
  }
  w.end_list().end();
  w.begin("fpi_char")
      .kv("temperature_c", r.fpi_char.temperature_c)
      .list("wavelengths_nm", r.fpi_char.wavelengths_nm)
      .end();
  w.begin("coupler_sweep")
      .list("temperatures_c", r.coupler_sweep.temperatures_c)
      .kv("probe_wavelength_nm", r.coupler_sweep.probe_wavelength_nm)
      .list("pump_powers_mw", r.coupler_sweep.pump_powers_mw)
      .end();
  w.begin("homodyne")
      .kv("reflectivity", r.homodyne.reflectivity)
      .kv("lo_amplitude_sq", r.homodyne.lo_amplitude_sq)
      .kv("squeezing_db", r.homodyne.squeezing_db)
      .kv("phase_rad", r.homodyne.phase_rad)
      .kv("phase_points", r.homodyne.phase_points)
      .end();
  const auto& o = r.opo_spectrum;
  w.begin("opo_spectrum")
      .kv("initial_squeezing_db", o.initial_squeezing_db)
      .list("detunings", o.detunings)
      .kv("omega_max", o.omega_max)
      .kv("omega_step", o.omega_step)
      .kv("detection_efficiency", o.detection_efficiency)
      .kv("detuning_scan_max", o.detuning_scan_max)
      .kv("detuning_scan_step", o.detuning_scan_step)
      .list("delta_n", o.delta_n)
      .end();
  const auto& sp = r.spdc_spectrum;
  w.begin("spdc_spectrum").begin_list("points");
  for (const auto& p : sp.points) {
    w.begin_item()
        .kv("temperature_c", p.temperature_c)
        .kv("pump_wavelength_nm", p.pump_wavelength_nm)
        .end();
  }
  w.end_list()
      .list("pump_powers_mw", sp.pump_powers_mw)
      .kv("wavelength_min_nm", sp.wavelength_min_nm)
      .kv("wavelength_max_nm", sp.wavelength_max_nm)
      .kv("wavelength_step_nm", sp.wavelength_step_nm)
      .end();
  const auto& sb = r.squeeze_budget;
  w.begin("squeeze_budget")
      .kv("temperature_c", sb.temperature_c)
      .kv("probe_wavelength_nm", sb.probe_wavelength_nm)
      .list("initial_squeezing_db", sb.initial_squeezing_db)
      .list("residual_pump_powers_mw", sb.residual_pump_powers_mw)
      .kv("pump_during_calibration", sb.pump_during_calibration)
      .kv("mu0_per_sqrt_mw", sb.mu0_per_sqrt_mw)
      .kv("generation_pump_wavelength_nm", sb.generation_pump_wavelength_nm)
      .list("generation_pump_powers_mw", sb.generation_pump_powers_mw)
      .end();
  const auto& fd = r.fit_dn;
  w.begin("fit_dn").kv("probe_wavelength_nm", fd.probe_wavelength_nm).begin_list("sweeps");
  for (const auto& s : fd.sweeps) {
    w.begin_item().kv("temperature_c", s.temperature_c).kv("path", s.path).end();
  }
  w.end_list()
      .list("synthetic_temperatures_c", fd.synthetic_temperatures_c)
      .list("synthetic_pump_powers_mw", fd.synthetic_pump_powers_mw)
      .kv("synthetic_noise_relative", fd.synthetic_noise_relative)
      .end();
  const auto& ff = r.fit_fpi;
  w.begin("fit_fpi")
      .kv("trace_path", ff.trace_path)
      .kv("temperature_c", ff.temperature_c)
      .kv("probe_wavelength_nm", ff.probe_wavelength_nm)
      .kv("pump_on_s", ff.pump_on_s)
      .kv("synthetic_noise_relative", ff.synthetic_noise_relative)
      .end();
  w.end();
  return w.finish();
}

std::string config_hash(const Config& config) {
  const std::string text = serialize_config(config);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

Config default_config() {
  Config c;
  c.material.modes = {
      {Band::telecom, "fundamental", 0.0, IndexTarget{2.13, 1550.0, 30.0}},
      {Band::near_infrared, "fundamental", 0.0, IndexTarget{2.18, 775.0, 30.0}},
  };
  // Approximate sets: |dn(10 mW)| ~ 1e-4 at 30 C, negligible above 90 C.
  c.photorefraction = {
      {1.1e-3, 100.0, 0.2, 5.0, 1.0e4, 10.0, 30.0},
      {4.0e-4, 100.0, 0.2, 5.0, 1.0e4, 10.0, 60.0},
      {1.0e-6, 100.0, 0.2, 5.0, 1.0e4, 10.0, 90.0},
  };
  const std::map<double, double> k{
      {30.0, 0.46},
      {60.0, std::numbers::pi / (2.0 * 3.27)},
      {90.0, std::numbers::pi / (2.0 * 2.96)},
  };
  c.coupler.coupling_constant_per_mm = k;
  c.coupler.interaction_length_mm = 4.3;
  c.homodyne_coupler.coupling_constant_per_mm = k;

  c.run.coupler_sweep.pump_powers_mw = range(0.0, 15.0, 0.5);
  c.run.squeeze_budget.residual_pump_powers_mw = range(0.0, 15.0, 0.5);
  c.run.squeeze_budget.generation_pump_powers_mw = range(0.0, 100.0, 2.0);
  c.run.fit_dn.synthetic_pump_powers_mw = range(0.0, 15.0, 1.0);
  c.base_dir = ".";
  return c;
}

}  // namespace lnpr
