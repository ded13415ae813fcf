#include <doctest.h>

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "chipgate/conductor.hpp"
#include "chipgate/error.hpp"
#include "chipgate/output.hpp"
#include "chipgate/units.hpp"

using namespace chipgate;
using namespace chipgate::conductor;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chipgate_test_" + name);
  fs::remove_all(p);
  return p;
}

// Fast settings: coarse grids and a short gate run.
RunConfig quick(const fs::path& out) {
  RunConfig c;
  c.spectrum.grid_n = 256;
  c.dynamics.grid_n = 64;
  c.dynamics.n_steps = 300;
  c.dynamics.record_every = 30;
  c.dynamics.window_start = 0.0;
  c.dynamics.window_end = 30e-6;
  c.scheme.trials = 50;
  c.outputs.directory = out.string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("quantities with units") {
  CHECK(units::parse_quantity("50 G") == doctest::Approx(5e-3).epsilon(1e-15));
  CHECK(units::parse_quantity("0.25 us") == doctest::Approx(0.25e-6).epsilon(1e-15));
  CHECK(units::parse_quantity("11.96 kHz") == doctest::Approx(11960.0).epsilon(1e-15));
  CHECK(units::parse_quantity("29.9mA") == doctest::Approx(29.9e-3).epsilon(1e-15));
  CHECK(units::parse_quantity("1.5e-6") == 1.5e-6);
  CHECK_THROWS_AS(units::parse_quantity("3 furlongs"), ConfigError);
  CHECK_THROWS_AS(units::parse_quantity("abc G"), ConfigError);
  const auto q = units::split_quantity(" -9.91 G ");
  CHECK(q.number == -9.91);
  CHECK(q.unit == "G");
}

TEST_CASE("output helpers") {
  CHECK(output::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const double v = 0.1 + 0.2;
  CHECK(std::stod(output::format_double(v)) == v);
  const std::string table = output::csv({{"t_s", {0.0, 1e-6}}, {"F", {1.0, 1.0 / 3.0}}});
  CHECK(table.rfind("t_s,F\n", 0) == 0);
  CHECK(table.find("0.33333333333333331") != std::string::npos);
  CHECK_THROWS(output::csv({{"a", {1.0}}, {"b", {1.0, 2.0}}}));
  const auto svg = output::svg_line_chart({"t", "x", "y", {{"s", {0.0, 1.0}, {0.0, 1.0}}}});
  CHECK(svg.find("<svg") != std::string::npos);
}

TEST_CASE("atomic writes stay inside the output directory") {
  const auto root = scratch_dir("atomic");
  fs::create_directories(root);
  output::write_atomic(root, "a.txt", "hello");
  CHECK(slurp(root / "a.txt") == "hello");
  CHECK_THROWS(output::write_atomic(root, "../escape.txt", "x"));
  CHECK_THROWS(output::write_atomic(root, "/tmp/escape.txt", "x"));
  CHECK_FALSE(fs::exists(root.parent_path() / "escape.txt"));
  for (const auto& e : fs::directory_iterator(root)) CHECK(e.path().filename() == "a.txt");
}

TEST_CASE("the shipped configuration loads and round-trips") {
  const auto c = load_config(CHIPGATE_SOURCE_DIR "/configs/paper.json");
  CHECK(c.chip.current == doctest::Approx(29.9e-3).epsilon(1e-15));
  CHECK(c.chip.bias.x() == doctest::Approx(-9.91e-4).epsilon(1e-15));
  CHECK(c.dynamics.dt == doctest::Approx(0.1e-6).epsilon(1e-15));
  CHECK(c.dynamics.scattering_length == doctest::Approx(5.3e-9).epsilon(1e-15));
  const json once = to_json(c);
  const json twice = to_json(parse_config(once.dump()));
  CHECK(once == twice);
  CHECK(to_json(parse_config(once.dump(2))) == once);
}

TEST_CASE("config errors name the line and the field") {
  const std::string text = "{\n  \"chip\": {\n    \"current\": \"29.9 mA\",\n    \"curent\": 1\n  }\n}\n";
  try {
    parse_config(text, "bad.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("bad.json:4") != std::string::npos);
    CHECK(what.find("chip.curent") != std::string::npos);
  }

  const std::string unit = "{\n  \"dynamics\": {\n    \"dt\": \"3 G\"\n  }\n}\n";
  try {
    parse_config(unit, "unit.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("unit.json:3") != std::string::npos);
    CHECK(what.find("dynamics.dt") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_config("{ \"chip\": "), ConfigError);
}

TEST_CASE("validation rejects unphysical values") {
  RunConfig c;
  c.chip.wire_separation = -1.0;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("chip.wire_separation"), ConfigError);
  c = RunConfig{};
  c.raman.detuning_freq = 1e6;
  CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("raman.detuning_freq"), ConfigError);
  c = RunConfig{};
  c.dynamics.window_end = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK_NOTHROW(validate(RunConfig{}));
}

TEST_CASE("parameters by dotted path") {
  const RunConfig c;
  const auto d = with_parameter(c, "dynamics.scattering_length", "4 nm");
  CHECK(d.dynamics.scattering_length == doctest::Approx(4e-9).epsilon(1e-15));
  const auto b = with_parameter(c, "chip.bias.0", "-9.5 G");
  CHECK(b.chip.bias.x() == doctest::Approx(-9.5e-4).epsilon(1e-15));
  CHECK_THROWS_AS(with_parameter(c, "chip.nothing", 1.0), ConfigError);
}

TEST_CASE("stage dependencies") {
  CHECK(stage_closure({Stage::gate}) == std::vector<Stage>{Stage::trap, Stage::spectrum, Stage::gate});
  CHECK(stage_closure({Stage::scheme}) == std::vector<Stage>{Stage::scheme});
  CHECK(stage_closure({Stage::raman, Stage::scheme}) ==
        std::vector<Stage>{Stage::trap, Stage::spectrum, Stage::raman, Stage::scheme});
  CHECK(parse_stage("gate") == Stage::gate);
  CHECK_THROWS_AS(parse_stage("everything"), ConfigError);
}

TEST_CASE("scheme-only pipeline touches no field code") {
  const auto out = scratch_dir("scheme_only");
  const auto r = run_pipeline(quick(out), {Stage::scheme});
  CHECK(r.manifest.ok());
  CHECK(fs::exists(out / "scheme_report.json"));
  CHECK(fs::exists(out / "manifest.json"));
  CHECK_FALSE(fs::exists(out / "trap_report.json"));
  CHECK(r.manifest.stages.size() == 1);
}

TEST_CASE("full pipeline is reproducible across runs and schedules") {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  const std::set<Stage> all{Stage::trap, Stage::spectrum, Stage::gate, Stage::raman, Stage::scheme};
  const auto ra = run_pipeline(quick(a), all, {kernels::Execution::serial, false});
  const auto rb = run_pipeline(quick(b), all, {kernels::Execution::parallel, true});
  omp_set_num_threads(saved);
  REQUIRE(ra.manifest.ok());
  REQUIRE(rb.manifest.ok());
  CHECK(ra.manifest.files == rb.manifest.files);
  CHECK(ra.manifest.config_sha256 == rb.manifest.config_sha256);
  for (const char* f : {"trap_report.json", "eigenstates.csv", "gate_timeseries.csv", "summary.json",
                        "raman_report.json", "scheme_report.json", "manifest.json", "fidelity.svg"}) {
    CHECK_MESSAGE(fs::exists(a / f), f);
  }
  for (const auto& [name, hash] : ra.manifest.files) CHECK(output::sha256_hex(slurp(a / name)) == hash);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  const auto header = slurp(a / "gate_timeseries.csv").substr(0, 60);
  CHECK(header.rfind("t_s,F_gg,F_ge,F_ee,phi_rad,P_phi_ge,P_phi_ee", 0) == 0);
}

TEST_CASE("a failing stage skips its dependents and is recorded") {
  const auto out = scratch_dir("failing");
  auto c = quick(out);
  c.trap.seeds = {field::Vec3(0.0, 0.0, 50e-6)};
  const auto r = run_pipeline(c, {Stage::gate, Stage::scheme});
  CHECK_FALSE(r.manifest.ok());
  REQUIRE(r.manifest.stages.size() == 4);
  CHECK(r.manifest.stages[0].status == "failed");
  CHECK_FALSE(r.manifest.stages[0].error.empty());
  CHECK(r.manifest.stages[1].status == "skipped");
  CHECK(r.manifest.stages[2].status == "skipped");
  CHECK(r.manifest.stages[3].status == "ok");
  const auto m = json::parse(slurp(out / "manifest.json"));
  CHECK(m["complete"] == false);
}

TEST_CASE("sweeps") {
  const auto out = scratch_dir("sweep");
  const auto c = quick(out);

  SUBCASE("a single-value sweep matches the pipeline") {
    const auto rows = sweep(c, {"chip.current", {json(29.9e-3)}, Stage::trap});
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].ok);
    const auto r = run_pipeline(c, {Stage::trap});
    const auto& minima = r.reports.at("trap")["minima"];
    const double mean = 0.5 * (minima[0]["field_T"].get<double>() + minima[1]["field_T"].get<double>());
    CHECK(rows[0].metrics.at("min_field_T") == mean);
  }

  SUBCASE("failed rows are kept and the rest continue") {
    const auto rows = sweep(c, {"chip.wire_separation", {json("1.5 um"), json(-1.0), json("1.6 um")}, Stage::trap});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].ok);
    CHECK_FALSE(rows[1].ok);
    CHECK_FALSE(rows[1].error.empty());
    CHECK(rows[2].ok);
    const auto m = write_sweep(c, {"chip.wire_separation", {json("1.5 um"), json(-1.0), json("1.6 um")}, Stage::trap}, rows);
    CHECK_FALSE(m.ok());
    CHECK(fs::exists(out / "sweep.csv"));
  }

  SUBCASE("the x bias scan crosses the magic field exactly once") {
    std::vector<json> values;
    for (int k = 0; k < 11; ++k) values.push_back(-10.4e-4 + 1e-5 * k);
    const auto rows = sweep(c, {"chip.bias.0", values, Stage::trap});
    int crossings = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
      REQUIRE_MESSAGE(rows[k].ok, rows[k].value.dump(), " ", rows[k].error);
      const double a = rows[k - 1].metrics.at("min_field_T") - 3.23e-4;
      const double b = rows[k].metrics.at("min_field_T") - 3.23e-4;
      crossings += (a < 0.0) != (b < 0.0);
    }
    CHECK(crossings == 1);
  }
}
