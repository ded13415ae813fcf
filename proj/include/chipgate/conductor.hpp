#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chipgate/chipfield.hpp"
#include "chipgate/collider2d.hpp"
#include "chipgate/kernels.hpp"
#include "chipgate/spectrum1d.hpp"
#include "chipgate/trapfinder.hpp"

namespace chipgate::conductor {

using nlohmann::json;

enum class Stage { trap, spectrum, gate, raman, scheme };

std::string_view stage_name(Stage stage);
/// Throws ConfigError for an unknown name.
Stage parse_stage(std::string_view name);

struct TrapSettings {
  std::vector<field::Vec3> seeds = trap::default_seeds();
  bool tune_bias = false;
  char tune_component = 'x';
  double target_field = 3.23e-4;  // T
};

struct SpectrumSettings {
  std::size_t grid_n = 1024;
  double halfwidth = 1.5e-6;  // m
  std::size_t n_states = 8;
  spectrum::KineticOperator kinetic = spectrum::KineticOperator::fourier;
};

struct DynamicsSettings {
  std::size_t grid_n = 256;
  double halfwidth = 1.5e-6;  // m
  std::size_t n_states = 8;
  double dt = 0.1e-6;         // s
  std::size_t n_steps = 220000;
  std::size_t record_every = 80;
  double scattering_length = 5.3e-9;  // m
  bool transverse_correction = false;
  double transverse_freq = 0.0;       // Hz, 0 = geometric mean of the trap's transverse pair
  collider::ContactModel contact = collider::ContactModel::grid_delta;
  collider::Statistics statistics = collider::Statistics::symmetrized;
  double window_start = 10e-3;  // s
  double window_end = 22e-3;    // s
  double phase_tolerance = 0.1;
  double leakage_threshold = 0.05;
};

struct RamanSettings {
  double rabi_frequency_1 = 20e6;   // Hz, Omega_1 / 2 pi
  double rabi_frequency_2 = 20e6;   // Hz
  double detuning_freq = 2e9;       // Hz, Delta / 2 pi
  double microwave_trap_freq = 10e3;  // Hz
  double optical_wavelength = 800e-9;  // m
  std::vector<double> etas{0.01, 0.02, 0.05};
  std::size_t n_levels = 4;
};

struct SchemeSettings {
  double phase = 3.141592653589793;  // rad
  int trials = 1000;
  std::uint64_t seed = 20021;
};

struct OutputSettings {
  std::string directory = "out";
  bool plots = true;
};

struct SweepSpec {
  std::string parameter;  // dotted path, e.g. "dynamics.scattering_length" or "chip.bias.0"
  std::vector<json> values;
  Stage stage = Stage::gate;
};

struct RunConfig {
  field::ChipConfig chip;
  TrapSettings trap;
  SpectrumSettings spectrum;
  DynamicsSettings dynamics;
  RamanSettings raman;
  SchemeSettings scheme;
  OutputSettings outputs;
  std::optional<SweepSpec> sweep;
};

/// Parses JSON text. Quantities may be plain SI numbers or strings with a
/// unit ("50 G", "0.25 us"). Missing keys keep their defaults; unknown keys
/// are rejected. Errors carry "<source>:<line>: <field>: <reason>".
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// All quantities as SI numbers; parse_config(to_json(c).dump()) reproduces c.
json to_json(const RunConfig& config);

/// Throws ConfigError naming the first invalid field.
void validate(const RunConfig& config);

/// Returns a copy with the dotted `parameter` set to `value`.
RunConfig with_parameter(const RunConfig& config, const std::string& parameter, const json& value);

/// How the work is scheduled. Never changes any artifact.
struct PipelineOptions {
  kernels::Execution execution = kernels::Execution::parallel;
  bool concurrent = true;
};

/// Requested stages plus everything they depend on, in execution order.
std::vector<Stage> stage_closure(const std::set<Stage>& requested);

struct StageRecord {
  Stage stage = Stage::trap;
  std::string status;  // "ok", "failed", "skipped"
  std::string error;
  std::vector<std::string> files;
};

struct Manifest {
  std::string config_sha256;
  std::vector<StageRecord> stages;
  std::vector<std::pair<std::string, std::string>> files;  // name, sha256
  bool ok() const;
  json to_json() const;
};

struct PipelineResult {
  Manifest manifest;
  std::map<std::string, json> reports;  // keyed by stage name
};

/// Runs the closure of `requested`, writes artifacts atomically into
/// config.outputs.directory and finishes with manifest.json. A failing stage
/// marks its dependents skipped; the manifest records how far it got.
PipelineResult run_pipeline(const RunConfig& config, const std::set<Stage>& requested,
                            const PipelineOptions& options = {});

struct SweepRow {
  json value;
  bool ok = false;
  std::string error;
  std::map<std::string, double> metrics;
};

/// One row per value; rows may run concurrently and never influence each
/// other. Failed rows keep their error and the sweep continues.
std::vector<SweepRow> sweep(const RunConfig& config, const SweepSpec& spec,
                            const PipelineOptions& options = {});

/// Writes sweep.csv, sweep.json, an optional plot and manifest.json.
Manifest write_sweep(const RunConfig& config, const SweepSpec& spec,
                     const std::vector<SweepRow>& rows);

}  // namespace chipgate::conductor
