#include "chipgate/conductor.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "chipgate/error.hpp"
#include "chipgate/gatelogic.hpp"
#include "chipgate/output.hpp"
#include "chipgate/raman.hpp"
#include "chipgate/trapfinder.hpp"
#include "chipgate/units.hpp"

namespace chipgate::conductor {

namespace fs = std::filesystem;
using constants::hbar;
using constants::pi;

namespace {

const std::initializer_list<std::string_view> kLength{"m", "cm", "mm", "um", "nm"};
const std::initializer_list<std::string_view> kField{"T", "mT", "uT", "G", "mG"};
const std::initializer_list<std::string_view> kCurrent{"A", "mA", "uA"};
const std::initializer_list<std::string_view> kTime{"s", "ms", "us", "ns"};
const std::initializer_list<std::string_view> kFrequency{"Hz", "kHz", "MHz", "GHz"};
const std::initializer_list<std::string_view> kMass{"kg"};
const std::initializer_list<std::string_view> kAngle{"rad"};
const std::initializer_list<std::string_view> kNone{};

struct FieldProblem {
  std::string path;
  std::string reason;
};

std::string dotted(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

// Best-effort line of a dotted path: each key is searched after the previous hit.
std::size_t line_of(std::string_view text, std::string_view path) {
  std::size_t pos = 0;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t end = std::min(path.find('.', start), path.size());
    const std::string key(path.substr(start, end - start));
    start = end + 1;
    if (key.empty() || std::all_of(key.begin(), key.end(), ::isdigit)) continue;
    const auto hit = text.find("\"" + key + "\"", pos);
    if (hit == std::string_view::npos) break;
    pos = hit;
  }
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  explicit Reader(std::vector<std::string> path) : path_(std::move(path)) {}

  Reader child(const std::string& key) const {
    auto p = path_;
    p.push_back(key);
    return Reader(std::move(p));
  }

  [[noreturn]] void fail(const std::string& key, const std::string& reason) const {
    auto p = path_;
    if (!key.empty()) p.push_back(key);
    throw FieldProblem{dotted(p), reason};
  }

  void only(const json& node, std::initializer_list<std::string_view> keys) const {
    if (!node.is_object()) fail("", "expected an object");
    for (const auto& [k, _] : node.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(k, "unknown key");
    }
  }

  double quantity(const json& value, const std::string& key,
                  std::initializer_list<std::string_view> family) const {
    if (value.is_number()) return value.get<double>();
    if (!value.is_string()) fail(key, "expected a number or a quantity string");
    try {
      const auto q = units::split_quantity(value.get<std::string>());
      if (!q.unit.empty() && std::find(family.begin(), family.end(), q.unit) == family.end()) {
        fail(key, "unit '" + std::string(q.unit) + "' does not fit this field");
      }
      return q.number * units::unit_scale(q.unit);
    } catch (const ConfigError& e) {
      fail(key, e.what());
    }
  }

  void read(const json& node, const std::string& key, double& target,
            std::initializer_list<std::string_view> family) const {
    if (node.contains(key)) target = quantity(node.at(key), key, family);
  }

  void read(const json& node, const std::string& key, bool& target) const {
    if (!node.contains(key)) return;
    if (!node.at(key).is_boolean()) fail(key, "expected true or false");
    target = node.at(key).get<bool>();
  }

  void read_count(const json& node, const std::string& key, std::size_t& target) const {
    if (!node.contains(key)) return;
    const auto& v = node.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "expected a non-negative integer");
    target = v.get<std::size_t>();
  }

  void read(const json& node, const std::string& key, std::string& target) const {
    if (!node.contains(key)) return;
    if (!node.at(key).is_string()) fail(key, "expected a string");
    target = node.at(key).get<std::string>();
  }

  field::Vec3 vec3(const json& value, const std::string& key,
                   std::initializer_list<std::string_view> family) const {
    if (!value.is_array() || value.size() != 3) fail(key, "expected an array of three quantities");
    const Reader r = child(key);
    field::Vec3 v;
    for (int i = 0; i < 3; ++i) v[i] = r.quantity(value.at(i), std::to_string(i), family);
    return v;
  }

 private:
  std::vector<std::string> path_;
};

template <typename Enum>
Enum read_enum(const Reader& r, const json& node, const std::string& key, Enum current,
               std::initializer_list<std::pair<std::string_view, Enum>> names) {
  if (!node.contains(key)) return current;
  if (!node.at(key).is_string()) r.fail(key, "expected a string");
  const auto text = node.at(key).get<std::string>();
  for (const auto& [name, value] : names) {
    if (name == text) return value;
  }
  r.fail(key, "unknown value '" + text + "'");
}

const std::initializer_list<std::pair<std::string_view, collider::ContactModel>> kContacts{
    {"grid_delta", collider::ContactModel::grid_delta}, {"gaussian", collider::ContactModel::gaussian}};
const std::initializer_list<std::pair<std::string_view, collider::Statistics>> kStatistics{
    {"symmetrized", collider::Statistics::symmetrized},
    {"distinguishable", collider::Statistics::distinguishable}};
const std::initializer_list<std::pair<std::string_view, spectrum::KineticOperator>> kKinetics{
    {"fourier", spectrum::KineticOperator::fourier},
    {"finite_difference", spectrum::KineticOperator::finite_difference}};

template <typename Enum>
std::string enum_text(Enum value, std::initializer_list<std::pair<std::string_view, Enum>> names) {
  for (const auto& [name, v] : names) {
    if (v == value) return std::string(name);
  }
  return "?";
}

RunConfig read_config(const json& root) {
  RunConfig c;
  const Reader top({});
  top.only(root, {"chip", "trap", "spectrum", "dynamics", "raman", "scheme", "outputs", "sweep"});

  if (root.contains("chip")) {
    const auto& n = root.at("chip");
    const Reader r = top.child("chip");
    r.only(n, {"wire_separation", "current", "alpha", "bias", "singularity_epsilon", "species"});
    r.read(n, "wire_separation", c.chip.wire_separation, kLength);
    r.read(n, "current", c.chip.current, kCurrent);
    r.read(n, "alpha", c.chip.alpha, kNone);
    r.read(n, "singularity_epsilon", c.chip.singularity_epsilon, kLength);
    if (n.contains("bias")) c.chip.bias = r.vec3(n.at("bias"), "bias", kField);
    if (n.contains("species")) {
      const auto& s = n.at("species");
      const Reader rs = r.child("species");
      rs.only(s, {"mass", "gF_mF", "magic_field", "hyperfine_freq"});
      rs.read(s, "mass", c.chip.species.mass, kMass);
      rs.read(s, "gF_mF", c.chip.species.gF_mF, kNone);
      rs.read(s, "magic_field", c.chip.species.magic_field, kField);
      rs.read(s, "hyperfine_freq", c.chip.species.hyperfine_freq, kFrequency);
    }
  }

  c.trap.seeds = trap::default_seeds();
  if (root.contains("trap")) {
    const auto& n = root.at("trap");
    const Reader r = top.child("trap");
    r.only(n, {"seeds", "tune_bias", "tune_component", "target_field"});
    if (n.contains("seeds")) {
      const auto& seeds = n.at("seeds");
      if (!seeds.is_array() || seeds.empty()) r.fail("seeds", "expected a non-empty array");
      c.trap.seeds.clear();
      const Reader rs = r.child("seeds");
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        c.trap.seeds.push_back(rs.vec3(seeds.at(i), std::to_string(i), kLength));
      }
    }
    r.read(n, "tune_bias", c.trap.tune_bias);
    std::string component(1, c.trap.tune_component);
    r.read(n, "tune_component", component);
    if (component != "x" && component != "y") r.fail("tune_component", "expected \"x\" or \"y\"");
    c.trap.tune_component = component[0];
    r.read(n, "target_field", c.trap.target_field, kField);
  }

  if (root.contains("spectrum")) {
    const auto& n = root.at("spectrum");
    const Reader r = top.child("spectrum");
    r.only(n, {"grid_n", "halfwidth", "n_states", "kinetic"});
    r.read_count(n, "grid_n", c.spectrum.grid_n);
    r.read(n, "halfwidth", c.spectrum.halfwidth, kLength);
    r.read_count(n, "n_states", c.spectrum.n_states);
    c.spectrum.kinetic = read_enum(r, n, "kinetic", c.spectrum.kinetic, kKinetics);
  }

  if (root.contains("dynamics")) {
    const auto& n = root.at("dynamics");
    const Reader r = top.child("dynamics");
    r.only(n, {"grid_n", "halfwidth", "n_states", "dt", "n_steps", "record_every",
               "scattering_length", "transverse_correction", "transverse_freq", "contact",
               "statistics", "window", "phase_tolerance", "leakage_threshold"});
    auto& d = c.dynamics;
    r.read_count(n, "grid_n", d.grid_n);
    r.read(n, "halfwidth", d.halfwidth, kLength);
    r.read_count(n, "n_states", d.n_states);
    r.read(n, "dt", d.dt, kTime);
    r.read_count(n, "n_steps", d.n_steps);
    r.read_count(n, "record_every", d.record_every);
    r.read(n, "scattering_length", d.scattering_length, kLength);
    r.read(n, "transverse_correction", d.transverse_correction);
    if (n.contains("transverse_freq")) {
      const auto& v = n.at("transverse_freq");
      d.transverse_freq = v == "auto" ? 0.0 : r.quantity(v, "transverse_freq", kFrequency);
    }
    d.contact = read_enum(r, n, "contact", d.contact, kContacts);
    d.statistics = read_enum(r, n, "statistics", d.statistics, kStatistics);
    if (n.contains("window")) {
      const auto& w = n.at("window");
      if (!w.is_array() || w.size() != 2) r.fail("window", "expected [start, end]");
      const Reader rw = r.child("window");
      d.window_start = rw.quantity(w.at(0), "0", kTime);
      d.window_end = rw.quantity(w.at(1), "1", kTime);
    }
    r.read(n, "phase_tolerance", d.phase_tolerance, kNone);
    r.read(n, "leakage_threshold", d.leakage_threshold, kNone);
  }

  if (root.contains("raman")) {
    const auto& n = root.at("raman");
    const Reader r = top.child("raman");
    r.only(n, {"rabi_frequency_1", "rabi_frequency_2", "detuning_freq", "microwave_trap_freq",
               "optical_wavelength", "etas", "n_levels"});
    auto& m = c.raman;
    r.read(n, "rabi_frequency_1", m.rabi_frequency_1, kFrequency);
    r.read(n, "rabi_frequency_2", m.rabi_frequency_2, kFrequency);
    r.read(n, "detuning_freq", m.detuning_freq, kFrequency);
    r.read(n, "microwave_trap_freq", m.microwave_trap_freq, kFrequency);
    r.read(n, "optical_wavelength", m.optical_wavelength, kLength);
    if (n.contains("etas")) {
      const auto& e = n.at("etas");
      if (!e.is_array() || e.empty()) r.fail("etas", "expected a non-empty array");
      m.etas.clear();
      const Reader re = r.child("etas");
      for (std::size_t i = 0; i < e.size(); ++i) m.etas.push_back(re.quantity(e.at(i), std::to_string(i), kNone));
    }
    r.read_count(n, "n_levels", m.n_levels);
  }

  if (root.contains("scheme")) {
    const auto& n = root.at("scheme");
    const Reader r = top.child("scheme");
    r.only(n, {"phase", "trials", "seed"});
    r.read(n, "phase", c.scheme.phase, kAngle);
    std::size_t trials = static_cast<std::size_t>(c.scheme.trials);
    r.read_count(n, "trials", trials);
    c.scheme.trials = static_cast<int>(trials);
    if (n.contains("seed")) {
      if (!n.at("seed").is_number_unsigned()) r.fail("seed", "expected a non-negative integer");
      c.scheme.seed = n.at("seed").get<std::uint64_t>();
    }
  }

  if (root.contains("outputs")) {
    const auto& n = root.at("outputs");
    const Reader r = top.child("outputs");
    r.only(n, {"directory", "plots"});
    r.read(n, "directory", c.outputs.directory);
    r.read(n, "plots", c.outputs.plots);
  }

  if (root.contains("sweep")) {
    const auto& n = root.at("sweep");
    const Reader r = top.child("sweep");
    r.only(n, {"parameter", "values", "stage"});
    SweepSpec s;
    r.read(n, "parameter", s.parameter);
    if (!n.contains("values") || !n.at("values").is_array()) r.fail("values", "expected an array");
    for (const auto& v : n.at("values")) s.values.push_back(v);
    std::string stage = "gate";
    r.read(n, "stage", stage);
    try {
      s.stage = parse_stage(stage);
    } catch (const ConfigError& e) {
      r.fail("stage", e.what());
    }
    c.sweep = std::move(s);
  }
  return c;
}

std::optional<FieldProblem> check(const RunConfig& c) {
  auto bad = [](std::string path, std::string reason) {
    return std::optional<FieldProblem>(FieldProblem{std::move(path), std::move(reason)});
  };
  const auto& chip = c.chip;
  if (!(chip.wire_separation > 0.0)) return bad("chip.wire_separation", "must be positive");
  if (!std::isfinite(chip.current) || chip.current == 0.0) return bad("chip.current", "must be finite and non-zero");
  if (!std::isfinite(chip.alpha)) return bad("chip.alpha", "must be finite");
  if (!chip.bias.allFinite()) return bad("chip.bias", "must be finite");
  if (!(chip.singularity_epsilon > 0.0)) return bad("chip.singularity_epsilon", "must be positive");
  if (!(chip.species.mass > 0.0)) return bad("chip.species.mass", "must be positive");
  if (!(chip.species.gF_mF > 0.0)) return bad("chip.species.gF_mF", "must be positive for a low-field seeker");
  if (!(chip.species.magic_field > 0.0)) return bad("chip.species.magic_field", "must be positive");
  if (!(chip.species.hyperfine_freq > 0.0)) return bad("chip.species.hyperfine_freq", "must be positive");
  if (c.trap.seeds.empty()) return bad("trap.seeds", "needs at least one seed");
  if (!(c.trap.target_field > 0.0)) return bad("trap.target_field", "must be positive");

  const auto& s = c.spectrum;
  if (s.grid_n < 64 || s.grid_n % 2) return bad("spectrum.grid_n", "must be an even number >= 64");
  if (!(s.halfwidth > 0.0)) return bad("spectrum.halfwidth", "must be positive");
  if (s.n_states < 4 || s.n_states > s.grid_n / 4) return bad("spectrum.n_states", "must lie in [4, grid_n / 4]");

  const auto& d = c.dynamics;
  if (d.grid_n < 64 || d.grid_n % 2) return bad("dynamics.grid_n", "must be an even number >= 64");
  if (!(d.halfwidth > 0.0)) return bad("dynamics.halfwidth", "must be positive");
  if (d.n_states < 4 || d.n_states > d.grid_n / 4) return bad("dynamics.n_states", "must lie in [4, grid_n / 4]");
  if (!(d.dt > 0.0)) return bad("dynamics.dt", "must be positive");
  if (d.n_steps < 1) return bad("dynamics.n_steps", "must be >= 1");
  if (d.record_every < 1) return bad("dynamics.record_every", "must be >= 1");
  if (!(d.scattering_length >= 0.0)) return bad("dynamics.scattering_length", "must be >= 0");
  if (!(d.transverse_freq >= 0.0)) return bad("dynamics.transverse_freq", "must be >= 0 (0 means auto)");
  if (!(d.window_start >= 0.0) || !(d.window_end > d.window_start)) {
    return bad("dynamics.window", "needs 0 <= start < end");
  }
  if (!(d.phase_tolerance > 0.0 && d.phase_tolerance <= 1.0)) return bad("dynamics.phase_tolerance", "must lie in (0, 1]");
  if (!(d.leakage_threshold > 0.0 && d.leakage_threshold <= 1.0)) return bad("dynamics.leakage_threshold", "must lie in (0, 1]");

  const auto& r = c.raman;
  if (!(r.rabi_frequency_1 > 0.0)) return bad("raman.rabi_frequency_1", "must be positive");
  if (!(r.rabi_frequency_2 > 0.0)) return bad("raman.rabi_frequency_2", "must be positive");
  if (!(std::abs(r.detuning_freq) >= 10.0 * std::max(r.rabi_frequency_1, r.rabi_frequency_2))) {
    return bad("raman.detuning_freq", "must be at least 10 times the larger Rabi frequency");
  }
  if (!(r.microwave_trap_freq > 0.0)) return bad("raman.microwave_trap_freq", "must be positive");
  if (!(r.optical_wavelength > 0.0)) return bad("raman.optical_wavelength", "must be positive");
  for (std::size_t i = 0; i < r.etas.size(); ++i) {
    if (!(r.etas[i] >= 0.0)) return bad("raman.etas." + std::to_string(i), "must be >= 0");
  }
  if (r.etas.empty()) return bad("raman.etas", "needs at least one value");
  if (r.n_levels < 3) return bad("raman.n_levels", "must be >= 3");
  if (2 * r.n_levels > s.n_states) return bad("raman.n_levels", "needs 2 * n_levels <= spectrum.n_states");

  if (!std::isfinite(c.scheme.phase)) return bad("scheme.phase", "must be finite");
  if (c.scheme.trials < 1) return bad("scheme.trials", "must be >= 1");
  if (c.outputs.directory.empty()) return bad("outputs.directory", "must not be empty");
  if (c.sweep) {
    if (c.sweep->parameter.empty()) return bad("sweep.parameter", "must not be empty");
    if (c.sweep->values.empty()) return bad("sweep.values", "needs at least one value");
  }
  return std::nullopt;
}

json vec_json(const field::Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::trap: return "trap";
    case Stage::spectrum: return "spectrum";
    case Stage::gate: return "gate";
    case Stage::raman: return "raman";
    case Stage::scheme: return "scheme";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::trap, Stage::spectrum, Stage::gate, Stage::raman, Stage::scheme}) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

RunConfig parse_config(std::string_view text, std::string_view source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
    throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  try {
    RunConfig c = read_config(root);
    if (auto problem = check(c)) throw *problem;
    return c;
  } catch (const FieldProblem& p) {
    throw ConfigError(std::string(source) + ":" + std::to_string(line_of(text, p.path)) + ": " +
                      p.path + ": " + p.reason);
  }
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void validate(const RunConfig& config) {
  if (auto problem = check(config)) throw ConfigError(problem->path + ": " + problem->reason);
}

json to_json(const RunConfig& c) {
  json j;
  j["chip"] = {{"wire_separation", c.chip.wire_separation},
               {"current", c.chip.current},
               {"alpha", c.chip.alpha},
               {"bias", vec_json(c.chip.bias)},
               {"singularity_epsilon", c.chip.singularity_epsilon},
               {"species",
                {{"mass", c.chip.species.mass},
                 {"gF_mF", c.chip.species.gF_mF},
                 {"magic_field", c.chip.species.magic_field},
                 {"hyperfine_freq", c.chip.species.hyperfine_freq}}}};
  json seeds = json::array();
  for (const auto& s : c.trap.seeds) seeds.push_back(vec_json(s));
  j["trap"] = {{"seeds", seeds},
               {"tune_bias", c.trap.tune_bias},
               {"tune_component", std::string(1, c.trap.tune_component)},
               {"target_field", c.trap.target_field}};
  j["spectrum"] = {{"grid_n", c.spectrum.grid_n},
                   {"halfwidth", c.spectrum.halfwidth},
                   {"n_states", c.spectrum.n_states},
                   {"kinetic", enum_text(c.spectrum.kinetic, kKinetics)}};
  const auto& d = c.dynamics;
  j["dynamics"] = {{"grid_n", d.grid_n},
                   {"halfwidth", d.halfwidth},
                   {"n_states", d.n_states},
                   {"dt", d.dt},
                   {"n_steps", d.n_steps},
                   {"record_every", d.record_every},
                   {"scattering_length", d.scattering_length},
                   {"transverse_correction", d.transverse_correction},
                   {"transverse_freq", d.transverse_freq},
                   {"contact", enum_text(d.contact, kContacts)},
                   {"statistics", enum_text(d.statistics, kStatistics)},
                   {"window", json::array({d.window_start, d.window_end})},
                   {"phase_tolerance", d.phase_tolerance},
                   {"leakage_threshold", d.leakage_threshold}};
  const auto& r = c.raman;
  j["raman"] = {{"rabi_frequency_1", r.rabi_frequency_1},
                {"rabi_frequency_2", r.rabi_frequency_2},
                {"detuning_freq", r.detuning_freq},
                {"microwave_trap_freq", r.microwave_trap_freq},
                {"optical_wavelength", r.optical_wavelength},
                {"etas", r.etas},
                {"n_levels", r.n_levels}};
  j["scheme"] = {{"phase", c.scheme.phase}, {"trials", c.scheme.trials}, {"seed", c.scheme.seed}};
  j["outputs"] = {{"directory", c.outputs.directory}, {"plots", c.outputs.plots}};
  if (c.sweep) {
    j["sweep"] = {{"parameter", c.sweep->parameter},
                  {"values", c.sweep->values},
                  {"stage", std::string(stage_name(c.sweep->stage))}};
  }
  return j;
}

RunConfig with_parameter(const RunConfig& config, const std::string& parameter, const json& value) {
  json j = to_json(config);
  std::string pointer = "/" + parameter;
  std::replace(pointer.begin(), pointer.end(), '.', '/');
  const json::json_pointer ptr(pointer);
  if (!j.contains(ptr)) throw ConfigError("parameter '" + parameter + "' does not name a config field");
  j[ptr] = value;
  return parse_config(j.dump(), "parameter " + parameter + "=" + value.dump());
}

std::vector<Stage> stage_closure(const std::set<Stage>& requested) {
  std::set<Stage> need = requested;
  if (need.count(Stage::gate) || need.count(Stage::raman)) need.insert(Stage::spectrum);
  if (need.count(Stage::spectrum)) need.insert(Stage::trap);
  std::vector<Stage> order;
  for (Stage s : {Stage::trap, Stage::spectrum, Stage::gate, Stage::raman, Stage::scheme}) {
    if (need.count(s)) order.push_back(s);
  }
  return order;
}

bool Manifest::ok() const {
  return std::all_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.status == "ok"; });
}

json Manifest::to_json() const {
  json j;
  j["config_sha256"] = config_sha256;
  j["complete"] = ok();
  j["stages"] = json::array();
  for (const auto& s : stages) {
    json e = {{"stage", std::string(stage_name(s.stage))}, {"status", s.status}, {"files", s.files}};
    if (!s.error.empty()) e["error"] = s.error;
    j["stages"].push_back(e);
  }
  j["files"] = json::array();
  for (const auto& [name, hash] : files) j["files"].push_back({{"name", name}, {"sha256", hash}});
  return j;
}

namespace {

using Metrics = std::map<std::string, double>;

struct TrapOutcome {
  field::ChipConfig chip;
  trap::TrapCharacterization trap;
  json report;
  Metrics metrics;
};

struct SpectrumOutcome {
  std::shared_ptr<const Grid1D> grid;
  spectrum::EigenSet eig;
  json report;
  Metrics metrics;
};

struct GateOutcome {
  collider::GateRun run;
  json report;
  Metrics metrics;
};

struct SimpleOutcome {
  json report;
  Metrics metrics;
};

TrapOutcome do_trap(const RunConfig& config) {
  TrapOutcome out;
  out.chip = config.chip;
  json tune = nullptr;
  if (config.trap.tune_bias) {
    trap::TuneOptions options;
    options.seeds = config.trap.seeds;
    const auto component = config.trap.tune_component == 'x' ? trap::BiasComponent::X : trap::BiasComponent::Y;
    const auto result = trap::tune_bias(config.chip, config.trap.target_field, component, options);
    out.chip = result.config;
    tune = {{"component", std::string(1, config.trap.tune_component)},
            {"target_field_T", config.trap.target_field},
            {"tuned_bias_T", vec_json(result.config.bias)},
            {"achieved_field_T", result.achieved_field}};
  }
  out.trap = trap::analyze(out.chip, config.trap.seeds);
  const auto& t = out.trap;
  json minima = json::array();
  for (const auto& m : t.minima) {
    minima.push_back({{"position_m", vec_json(m.position)},
                      {"field_T", m.field_magnitude},
                      {"potential_J", m.potential}});
  }
  out.report = {{"minima", minima},
                {"beta_rad", t.beta},
                {"hessian_axis_angle_rad", t.hessian_axis_angle},
                {"freqs_Hz", t.freqs},
                {"separation_m", t.separation},
                {"height_z0_m", t.height_z0},
                {"barrier_position_m", vec_json(t.barrier_position)},
                {"barrier_field_T", t.barrier_field},
                {"barrier_height_J", t.barrier_height},
                {"axis_center_m", vec_json(t.center)},
                {"axis_direction", vec_json(t.axis_direction)},
                {"bias_T", vec_json(out.chip.bias)},
                {"tuning", tune}};
  out.metrics = {{"min_field_T", 0.5 * (t.minima[0].field_magnitude + t.minima[1].field_magnitude)},
                 {"beta_rad", t.beta},
                 {"freq_long_Hz", t.freqs[0]},
                 {"freq_perp1_Hz", t.freqs[1]},
                 {"freq_perp2_Hz", t.freqs[2]},
                 {"separation_m", t.separation},
                 {"height_z0_m", t.height_z0},
                 {"barrier_field_T", t.barrier_field},
                 {"bias_x_T", out.chip.bias.x()},
                 {"bias_y_T", out.chip.bias.y()}};
  return out;
}

SpectrumOutcome do_spectrum(const RunConfig& config, const TrapOutcome& trap) {
  SpectrumOutcome out;
  out.grid = std::make_shared<const Grid1D>(
      trap::axis_potential(trap.chip, trap.trap, config.spectrum.halfwidth, config.spectrum.grid_n));
  out.eig = spectrum::solve_eigenstates(*out.grid, config.spectrum.n_states, config.spectrum.kinetic);
  const auto split = spectrum::doublet_splittings(out.eig);
  const auto& e = out.eig.energies;
  const double well_freq = (0.5 * (e[2] + e[3]) - 0.5 * (e[0] + e[1])) / constants::h;
  const std::size_t mid = out.grid->size() / 2;
  out.report = {{"energies_J", e},
                {"doublet_splittings_J", split},
                {"doublet_splittings_Hz", {split[0] / constants::h, split[1] / constants::h}},
                {"well_freq_Hz", well_freq},
                {"barrier_height_J", out.grid->values[mid]},
                {"grid", {{"n", out.grid->size()}, {"origin_m", out.grid->origin}, {"spacing_m", out.grid->spacing}}}};
  out.metrics = {{"splitting_g_Hz", split[0] / constants::h},
                 {"splitting_e_Hz", split[1] / constants::h},
                 {"well_freq_Hz", well_freq}};
  for (std::size_t k = 0; k < e.size(); ++k) out.metrics["E" + std::to_string(k) + "_J"] = e[k];
  return out;
}

double transverse_omega(const RunConfig& config, const TrapOutcome& trap) {
  if (config.dynamics.transverse_freq > 0.0) return 2.0 * pi * config.dynamics.transverse_freq;
  return 2.0 * pi * std::sqrt(trap.trap.freqs[1] * trap.trap.freqs[2]);
}

GateOutcome do_gate(const RunConfig& config, const TrapOutcome& trap, const PipelineOptions& options) {
  const auto& d = config.dynamics;
  auto grid = std::make_shared<const Grid1D>(trap::axis_potential(trap.chip, trap.trap, d.halfwidth, d.grid_n));
  const auto eig = spectrum::solve_eigenstates(*grid, d.n_states);
  const auto basis = spectrum::localized_basis(eig);

  collider::InteractionParams ip;
  ip.scattering_length = d.scattering_length;
  ip.omega_perp = transverse_omega(config, trap);
  ip.use_transverse_correction = d.transverse_correction;
  ip.mass = trap.chip.species.mass;
  const double g1d = collider::g1d_coupling(ip);

  collider::GateOptions go;
  go.dt = d.dt;
  go.n_steps = d.n_steps;
  go.record_every = d.record_every;
  go.statistics = d.statistics;
  go.contact = d.contact;
  go.execution = options.execution;
  go.concurrent_trajectories = options.concurrent;
  go.window_start = d.window_start;
  go.window_end = d.window_end;
  go.phase_tolerance = d.phase_tolerance;

  GateOutcome out;
  out.run = collider::run_gate(grid, basis, g1d, go);
  const auto& s = out.run.summary;
  std::vector<std::string> warnings;
  for (const auto* t : {&out.run.gg, &out.run.ge, &out.run.ee}) {
    warnings.insert(warnings.end(), t->warnings.begin(), t->warnings.end());
  }
  if (s.window_clipped) warnings.push_back("run ends before the gate window; tau searched over the whole run");
  auto energy_drift = [](const collider::Trajectory& t) {
    const auto [lo, hi] = std::minmax_element(t.energies.begin(), t.energies.end());
    return (*hi - *lo) / std::abs(t.energies.front());
  };
  out.report = {
      {"tau_s", s.tau},
      {"F_gg", s.F_gg},
      {"F_ge", s.F_ge},
      {"F_ee", s.F_ee},
      {"phi_rad", s.phi},
      {"phi_over_pi", s.phi / pi},
      {"phase_condition_met", s.phase_condition_met},
      {"window_clipped", s.window_clipped},
      {"min_F_gg", s.min_F_gg},
      {"max_P_phi_ge", s.max_P_ge},
      {"max_P_phi_ee", s.max_P_ee},
      {"leakage_below_threshold", s.max_P_ge < d.leakage_threshold && s.max_P_ee < d.leakage_threshold},
      {"energy_spread_relative", {energy_drift(out.run.gg), energy_drift(out.run.ge), energy_drift(out.run.ee)}},
      {"warnings", warnings},
      {"parameters",
       {{"g1d_J_m", g1d},
        {"omega_perp_rad_s", ip.omega_perp},
        {"scattering_length_m", d.scattering_length},
        {"transverse_correction", d.transverse_correction},
        {"dt_s", d.dt},
        {"n_steps", d.n_steps},
        {"record_every", d.record_every},
        {"grid_n", d.grid_n},
        {"halfwidth_m", d.halfwidth},
        {"contact", enum_text(d.contact, kContacts)},
        {"statistics", enum_text(d.statistics, kStatistics)},
        {"window_s", {d.window_start, d.window_end}},
        {"phase_tolerance", d.phase_tolerance},
        {"doublet_splittings_J", basis.doublet_splittings}}}};
  out.metrics = {{"tau_s", s.tau},
                 {"F_gg", s.F_gg},
                 {"F_ge", s.F_ge},
                 {"F_ee", s.F_ee},
                 {"phi_rad", s.phi},
                 {"phi_over_pi", s.phi / pi},
                 {"phase_condition_met", s.phase_condition_met ? 1.0 : 0.0},
                 {"min_F_gg", s.min_F_gg},
                 {"max_P_phi_ge", s.max_P_ge},
                 {"max_P_phi_ee", s.max_P_ee},
                 {"g1d_J_m", g1d}};
  return out;
}

SimpleOutcome do_raman(const RunConfig& config, const TrapOutcome& trap, const SpectrumOutcome& spec) {
  const auto& r = config.raman;
  const double mass = trap.chip.species.mass;
  const double nu_hf = trap.chip.species.hyperfine_freq;
  const double k_mw = 2.0 * pi * nu_hf / constants::c;
  const double k_opt = 2.0 * (2.0 * pi / r.optical_wavelength);
  const double omega_mw = 2.0 * pi * r.microwave_trap_freq;

  raman::RamanSetup setup;
  setup.rabi_1 = 2.0 * pi * r.rabi_frequency_1;
  setup.rabi_2 = 2.0 * pi * r.rabi_frequency_2;
  setup.detuning = 2.0 * pi * r.detuning_freq;
  setup.k_effective = k_mw;
  setup.trap_omega = omega_mw;
  setup.mass = mass;
  const auto chain = raman::rabi_chain(setup);

  const double eta_mw = raman::lamb_dicke(k_mw, omega_mw, mass);
  const double eta_opt = raman::lamb_dicke(k_opt, omega_mw, mass);
  const double nu_t = r.microwave_trap_freq;
  const double dk_dup = raman::sideband_condition(nu_t, nu_hf, raman::Scheme::duplication);
  const double dk_swap = raman::sideband_condition(nu_t, nu_hf, raman::Scheme::swap, raman::Branch::desired);
  const double dk_swap_u = raman::sideband_condition(nu_t, nu_hf, raman::Scheme::swap, raman::Branch::undesired);

  const auto localized = raman::localized_well_states(spec.eig, r.n_levels);
  const auto single = raman::single_well_states(*spec.grid, r.n_levels);
  json table = json::array();
  SimpleOutcome out;
  for (double eta : r.etas) {
    const auto pl = raman::sideband_probabilities(localized, eta, r.n_levels);
    const auto ps = raman::sideband_probabilities(single, eta, r.n_levels);
    table.push_back({{"eta", eta},
                     {"localized_P_n0", pl},
                     {"localized_ratio_P20_P10", pl[2] / pl[1]},
                     {"single_well_P_n0", ps},
                     {"single_well_ratio_P20_P10", ps[2] / ps[1]}});
    std::ostringstream key;
    key << "ratio_eta_" << eta;
    out.metrics[key.str()] = pl[2] / pl[1];
  }
  const double pi_pulse = pi / chain.sideband;
  out.report = {{"eta_microwave", eta_mw},
                {"eta_optical", eta_opt},
                {"k_microwave_1_m", k_mw},
                {"k_optical_1_m", k_opt},
                {"rabi_chain",
                 {{"carrier_rad_s", chain.carrier},
                  {"carrier_Hz", chain.carrier / (2.0 * pi)},
                  {"eta", chain.eta},
                  {"sideband_rad_s", chain.sideband},
                  {"sideband_Hz", chain.sideband / (2.0 * pi)},
                  {"sideband_pi_pulse_s", pi_pulse}}},
                {"sideband_conditions_1_m",
                 {{"duplication", dk_dup}, {"swap_desired", dk_swap}, {"swap_undesired", dk_swap_u}}},
                {"sideband_conditions_1_cm",
                 {{"duplication", dk_dup * 1e-2}, {"swap_desired", dk_swap * 1e-2}, {"swap_undesired", dk_swap_u * 1e-2}}},
                {"well_omega_rad_s", {{"localized", localized.omega}, {"single_well", single.omega}}},
                {"sideband_table", table}};
  out.metrics["eta_microwave"] = eta_mw;
  out.metrics["eta_optical"] = eta_opt;
  out.metrics["sideband_Hz"] = chain.sideband / (2.0 * pi);
  return out;
}

SimpleOutcome do_scheme(const RunConfig& config) {
  SimpleOutcome out;
  json schemes = json::object();
  const logic::Matrix4 gate = logic::phase_gate_matrix(config.scheme.phase);
  for (auto kind : {logic::SchemeKind::duplication, logic::SchemeKind::swap}) {
    const logic::Scheme scheme{kind, config.scheme.phase};
    const auto rep = logic::verify_scheme(scheme, config.scheme.trials, config.scheme.seed);
    const auto u = logic::scheme_unitary(scheme);
    double block_error = 0.0;
    for (int a = 0; a < 4; ++a) {
      logic::Vector4 e = logic::Vector4::Zero();
      e(a) = 1.0;
      block_error = std::max(block_error, (u * logic::embed(e) - logic::embed(gate * e)).norm());
    }
    const std::string name = kind == logic::SchemeKind::duplication ? "duplication" : "swap";
    schemes[name] = {{"max_deviation", rep.max_deviation},
                     {"unitarity_error", rep.unitarity_error},
                     {"storage_block_error", block_error},
                     {"intermediate_schmidt_rank", {{"min", rep.min_intermediate_rank}, {"max", rep.max_intermediate_rank}}}};
    out.metrics[name + "_max_deviation"] = rep.max_deviation;
  }
  out.report = {{"phase_rad", config.scheme.phase},
                {"trials", config.scheme.trials},
                {"seed", config.scheme.seed},
                {"schemes", schemes}};
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  void write(const std::string& name, const std::string& content, StageRecord& record) {
    output::write_atomic(root_, name, content);
    record.files.push_back(name);
    files_.emplace_back(name, output::sha256_hex(content));
  }

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [s](double x) { return x * s; });
  return out;
}

void write_spectrum(const RunConfig& config, const SpectrumOutcome& spec, ArtifactWriter& w, StageRecord& rec) {
  std::vector<output::Column> cols;
  cols.push_back({"x_m", spec.grid->coordinates()});
  cols.push_back({"V_J", spec.grid->values});
  for (std::size_t k = 0; k < spec.eig.states.size(); ++k) {
    cols.push_back({"psi" + std::to_string(k) + "_per_sqrt_m", spec.eig.states[k]});
  }
  w.write("eigenstates.csv", output::csv(cols), rec);
  w.write("spectrum_report.json", dump(spec.report), rec);
  if (!config.outputs.plots) return;
  output::Chart chart{"Double-well potential and levels", "x (um)", "E / h (kHz)", {}};
  const auto x_um = scaled(spec.grid->coordinates(), 1e6);
  const double to_khz = 1.0 / (constants::h * 1e3);
  const double top = 3.0 * spec.grid->values[spec.grid->size() / 2];
  std::vector<double> xs, vs;
  for (std::size_t i = 0; i < x_um.size(); ++i) {
    if (spec.grid->values[i] > top) continue;
    xs.push_back(x_um[i]);
    vs.push_back(spec.grid->values[i] * to_khz);
  }
  chart.series.push_back({"V(x)", xs, vs});
  for (std::size_t k = 0; k < spec.eig.energies.size(); k += 2) {
    const double e = 0.5 * (spec.eig.energies[k] + spec.eig.energies[std::min(k + 1, spec.eig.energies.size() - 1)]);
    chart.series.push_back({"doublet " + std::to_string(k / 2), {xs.front(), xs.back()}, {e * to_khz, e * to_khz}});
  }
  w.write("potential.svg", output::svg_line_chart(chart), rec);
}

void write_gate(const RunConfig& config, const GateOutcome& gate, ArtifactWriter& w, StageRecord& rec) {
  const auto& r = gate.run;
  const std::vector<output::Column> cols{{"t_s", r.times},         {"F_gg", r.F_gg},
                                         {"F_ge", r.F_ge},         {"F_ee", r.F_ee},
                                         {"phi_rad", r.phi},       {"P_phi_ge", r.P_ge},
                                         {"P_phi_ee", r.P_ee},     {"E_gg_J", r.gg.energies},
                                         {"E_ge_J", r.ge.energies}, {"E_ee_J", r.ee.energies}};
  w.write("gate_timeseries.csv", output::csv(cols), rec);
  w.write("summary.json", dump(gate.report), rec);
  if (!config.outputs.plots) return;
  const auto t_ms = scaled(r.times, 1e3);
  w.write("fidelity.svg",
          output::svg_line_chart({"Revival fidelities", "t (ms)", "F", {{"F_gg", t_ms, r.F_gg}, {"F_ge", t_ms, r.F_ge}, {"F_ee", t_ms, r.F_ee}}}),
          rec);
  w.write("phase.svg",
          output::svg_line_chart({"Gate phase", "t (ms)", "phi / pi", {{"phi", t_ms, scaled(r.phi, 1.0 / pi)}}}), rec);
  w.write("leakage.svg",
          output::svg_line_chart({"Same-well populations", "t (ms)", "P", {{"P_phi_ge", t_ms, r.P_ge}, {"P_phi_ee", t_ms, r.P_ee}}}),
          rec);
}

std::string config_hash(const RunConfig& config) {
  json j = to_json(config);
  j.erase("outputs");
  return output::sha256_hex(j.dump());
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const std::set<Stage>& requested,
                            const PipelineOptions& options) {
  validate(config);
  const fs::path root = config.outputs.directory;
  fs::create_directories(root);
  ArtifactWriter writer(root);
  PipelineResult result;
  result.manifest.config_sha256 = config_hash(config);

  std::optional<TrapOutcome> trap;
  std::optional<SpectrumOutcome> spec;
  for (Stage stage : stage_closure(requested)) {
    StageRecord rec;
    rec.stage = stage;
    const bool blocked = (stage == Stage::spectrum && !trap) ||
                         ((stage == Stage::gate || stage == Stage::raman) && !spec);
    if (blocked) {
      rec.status = "skipped";
      rec.error = "an upstream stage failed";
      result.manifest.stages.push_back(rec);
      continue;
    }
    try {
      switch (stage) {
        case Stage::trap:
          trap = do_trap(config);
          writer.write("trap_report.json", dump(trap->report), rec);
          result.reports["trap"] = trap->report;
          break;
        case Stage::spectrum:
          spec = do_spectrum(config, *trap);
          write_spectrum(config, *spec, writer, rec);
          result.reports["spectrum"] = spec->report;
          break;
        case Stage::gate: {
          const auto gate = do_gate(config, *trap, options);
          write_gate(config, gate, writer, rec);
          result.reports["gate"] = gate.report;
          break;
        }
        case Stage::raman: {
          const auto out = do_raman(config, *trap, *spec);
          writer.write("raman_report.json", dump(out.report), rec);
          result.reports["raman"] = out.report;
          break;
        }
        case Stage::scheme: {
          const auto out = do_scheme(config);
          writer.write("scheme_report.json", dump(out.report), rec);
          result.reports["scheme"] = out.report;
          break;
        }
      }
      rec.status = "ok";
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
    }
    result.manifest.stages.push_back(rec);
  }
  result.manifest.files = writer.files();
  output::write_atomic(root, "manifest.json", dump(result.manifest.to_json()));
  return result;
}

std::vector<SweepRow> sweep(const RunConfig& config, const SweepSpec& spec, const PipelineOptions& options) {
  if (spec.values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows(spec.values.size());
  PipelineOptions inner = options;
  const auto count = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(dynamic, 1) if (options.concurrent)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    row.value = spec.values[static_cast<std::size_t>(i)];
    try {
      const RunConfig c = with_parameter(config, spec.parameter, row.value);
      if (spec.stage == Stage::scheme) {
        row.metrics = do_scheme(c).metrics;
      } else {
        const auto t = do_trap(c);
        if (spec.stage == Stage::trap) {
          row.metrics = t.metrics;
        } else if (spec.stage == Stage::gate) {
          row.metrics = do_gate(c, t, inner).metrics;
        } else {
          const auto s = do_spectrum(c, t);
          row.metrics = spec.stage == Stage::spectrum ? s.metrics : do_raman(c, t, s).metrics;
        }
      }
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  return rows;
}

namespace {

double numeric_value(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return units::parse_quantity(v.get<std::string>());
    } catch (const ConfigError&) {
    }
  }
  return std::nan("");
}

}  // namespace

Manifest write_sweep(const RunConfig& config, const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  const fs::path root = config.outputs.directory;
  fs::create_directories(root);
  ArtifactWriter writer(root);
  StageRecord rec;
  rec.stage = spec.stage;

  std::set<std::string> names;
  for (const auto& r : rows) {
    for (const auto& [k, _] : r.metrics) names.insert(k);
  }
  std::vector<output::Column> cols{{"value_SI", {}}, {"ok", {}}};
  for (const auto& n : names) cols.push_back({n, {}});
  json table = json::array();
  for (const auto& r : rows) {
    cols[0].values.push_back(numeric_value(r.value));
    cols[1].values.push_back(r.ok ? 1.0 : 0.0);
    std::size_t c = 2;
    for (const auto& n : names) {
      const auto it = r.metrics.find(n);
      cols[c++].values.push_back(it == r.metrics.end() ? std::nan("") : it->second);
    }
    json row = {{"value", r.value}, {"ok", r.ok}, {"metrics", r.metrics}};
    if (!r.ok) row["error"] = r.error;
    table.push_back(row);
  }
  writer.write("sweep.csv", output::csv(cols), rec);
  writer.write("sweep.json",
               dump({{"parameter", spec.parameter}, {"stage", std::string(stage_name(spec.stage))}, {"rows", table}}),
               rec);
  const std::string key = spec.stage == Stage::gate ? "phi_over_pi" : spec.stage == Stage::trap ? "min_field_T" : "";
  if (config.outputs.plots && names.count(key)) {
    const auto it = std::find(names.begin(), names.end(), key);
    const auto& ys = cols[2 + static_cast<std::size_t>(std::distance(names.begin(), it))].values;
    writer.write("sweep.svg",
                 output::svg_line_chart({"Sweep of " + spec.parameter, spec.parameter + " (SI)", key, {{key, cols[0].values, ys}}}),
                 rec);
  }
  const bool all_ok = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; });
  rec.status = all_ok ? "ok" : "failed";
  if (!all_ok) rec.error = "one or more sweep rows failed";
  Manifest m;
  m.config_sha256 = config_hash(config);
  m.stages.push_back(rec);
  m.files = writer.files();
  output::write_atomic(root, "manifest.json", dump(m.to_json()));
  return m;
}

}  // namespace chipgate::conductor
