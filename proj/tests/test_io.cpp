#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lnpr/cli.hpp"
#include "lnpr/config.hpp"
#include "lnpr/csv.hpp"
#include "lnpr/error.hpp"
#include "support.hpp"

namespace lnpr {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

const fs::path kExample = fs::path(LNPR_SOURCE_DIR) / "config" / "example.yaml";

TEST(ConfigParse, EmptyDocumentGivesDefaults) {
  const auto loaded = parse_config_string("{}", true);
  EXPECT_EQ(loaded.config, default_config());
  EXPECT_FALSE(loaded.defaulted_keys.empty());
  EXPECT_TRUE(loaded.warnings.empty());
}

TEST(ConfigParse, OverlayReplacesOnlyGivenKeys) {
  const auto loaded = parse_config_string("fpi:\n  length_mm: 20\n", true);
  EXPECT_EQ(loaded.config.fpi.length_mm, 20.0);
  EXPECT_EQ(loaded.config.fpi.facet_reflectivity_probe, default_config().fpi.facet_reflectivity_probe);
}

TEST(ConfigParse, DegenerateSaturationLawNamesPhotorefraction) {
  const std::string text =
      "photorefraction:\n"
      "  - {temperature_c: 30, a: 1.0e-3, b_mw: 0, c: 0}\n";
  const std::string msg = error_of([&] { parse_config_string(text, true); });
  EXPECT_NE(msg.find("photorefraction"), std::string::npos) << msg;
}

TEST(ConfigParse, UnknownKeysStrictAndLenient) {
  const std::string text = "fpi:\n  length_mm: 15\n  lenght_mm: 16\n";
  const std::string msg = error_of([&] { parse_config_string(text, true); });
  EXPECT_NE(msg.find("lenght_mm"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  const auto lenient = parse_config_string(text, false);
  ASSERT_EQ(lenient.warnings.size(), 1u);
  EXPECT_NE(lenient.warnings.front().find("lenght_mm"), std::string::npos);
}

TEST(ConfigParse, SyntaxErrorReportsLine) {
  const std::string msg = error_of([] { parse_config_string("fpi:\n  length_mm: [1, 2\nqpm: {", true); });
  EXPECT_NE(msg.find("line"), std::string::npos) << msg;
}

TEST(ConfigParse, WrongTypeRejected) {
  EXPECT_THROW(parse_config_string("fpi:\n  length_mm: long\n", true), ValidationError);
  EXPECT_THROW(parse_config_string("fpi:\n  facet_reflectivity_probe: 1.5\n", true), ValidationError);
  EXPECT_THROW(parse_config_string("run:\n  fpi_trace:\n    temperature_c: 45\n", true),
               ValidationError);
}

TEST(ConfigParse, ExampleRoundTripsThroughSerializer) {
  const auto loaded = parse_config(kExample, true);
  const std::string text = serialize_config(loaded.config);
  const auto again = parse_config_string(text, true);
  EXPECT_EQ(again.config, loaded.config);
  EXPECT_EQ(serialize_config(again.config), text);
  EXPECT_EQ(config_hash(again.config), config_hash(loaded.config));
}

TEST(ConfigParse, HashTracksContent) {
  const Config base = default_config();
  Config changed = base;
  changed.fpi.length_mm = 15.000000000000002;
  EXPECT_EQ(config_hash(base).size(), 64u);
  EXPECT_NE(config_hash(base), config_hash(changed));
  EXPECT_EQ(config_hash(base), config_hash(default_config()));
}

TEST(ConfigParse, MissingFile) {
  EXPECT_THROW(parse_config("/nonexistent/lnpr.yaml"), ValidationError);
}

TEST(Csv, TraceWithMaskAndComments) {
  const auto r = ingest_csv_string(
      "# bench run\ntime_s,transmission,masked\n0,1,0\n0.5,0.9,1\n1.0,0.8,0\n", CsvKind::trace);
  const auto& t = std::get<Trace>(r.data);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.value_name, "transmission");
  EXPECT_TRUE(t.is_masked(1));
  EXPECT_FALSE(t.is_masked(2));
}

TEST(Csv, RejectsMalformedInput) {
  auto msg = error_of([] { ingest_csv_string("time_s,v\n0,1\n1,2,3\n", CsvKind::trace); });
  EXPECT_NE(msg.find("row"), std::string::npos) << msg;
  msg = error_of([] { ingest_csv_string("time_s,v\n0,1\n0,2\n", CsvKind::trace); });
  EXPECT_NE(msg.find("increasing"), std::string::npos) << msg;
  EXPECT_THROW(ingest_csv_string("time_s,v\n0,nan\n", CsvKind::trace), ValidationError);
  EXPECT_THROW(ingest_csv_string("time_s,v\n0,abc\n", CsvKind::trace), ValidationError);
  EXPECT_THROW(ingest_csv_string("", CsvKind::trace), ValidationError);
  EXPECT_THROW(ingest_csv_string("p,R\n1,0.2\n1,0.3\n", CsvKind::sweep), ValidationError);
  EXPECT_THROW(ingest_trace("/nonexistent/trace.csv"), ValidationError);
}

TEST(Csv, UnsortedSweepIsSortedWithWarning) {
  const auto r = ingest_csv_string("pump_power_mW,R,sigma\n2,0.3,0.01\n0,0.1,0.01\n1,0.2,0.01\n",
                                   CsvKind::sweep);
  const auto& s = std::get<SweepData>(r.data);
  EXPECT_EQ(s.abscissa, (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(s.value, (std::vector<double>{0.1, 0.2, 0.3}));
  ASSERT_TRUE(s.sigma.has_value());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Csv, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Trace t;
  double time = 0.0;
  for (int i = 0; i < 500; ++i) {
    time += std::abs(u(rng)) + 1e-3;
    t.time_s.push_back(time);
    t.value.push_back(u(rng) * std::pow(10.0, 20.0 * u(rng)));
  }
  t.value[7] = std::numeric_limits<double>::denorm_min();
  t.value[8] = -0.0;
  t.mask_interval(t.time_s[100], t.time_s[120]);
  const auto back = std::get<Trace>(ingest_csv_string(to_csv(t, {"note"}), CsvKind::trace).data);
  EXPECT_EQ(back, t);
  EXPECT_TRUE(std::signbit(back.value[8]));

  SweepData s;
  s.abscissa = {0.0, 0.1, 1.0 / 3.0};
  s.value = {0.156850218915864, 2.0 / 7.0, 1e-300};
  s.sigma = std::vector<double>{1e-3, 2e-3, 3e-3};
  const auto sb = std::get<SweepData>(ingest_csv_string(to_csv(s), CsvKind::sweep).data);
  EXPECT_EQ(sb.abscissa, s.abscissa);
  EXPECT_EQ(sb.value, s.value);
  EXPECT_EQ(sb.sigma, s.sigma);
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto path = dir / "config.yaml";
  write_text_file(path, text);
  return path;
}

TEST(Cli, HomodyneUnsqueezedIsShotNoise) {
  const auto dir = testing::scratch_dir("cli_homodyne");
  const auto cfg = write_config(dir, "run:\n  homodyne: {reflectivity: 0.5, squeezing_db: 0}\n");
  RunFlags flags{cfg, dir / "out", std::nullopt, true, true};
  ASSERT_EQ(run_subcommand("homodyne", flags), kExitOk);
  const auto summary = read_json(dir / "out" / "homodyne" / "summary.json");
  EXPECT_NEAR(summary["result"]["noise_dB"].get<double>(), 0.0, 1e-12);
  const auto manifest = read_json(dir / "out" / "homodyne" / "run_manifest.json");
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["config_sha256"].get<std::string>().size(), 64u);
}

TEST(Cli, ValidationFailureWritesManifest) {
  const auto dir = testing::scratch_dir("cli_fail");
  const auto cfg = write_config(dir, "photorefraction:\n  - {temperature_c: 30, a: 1e-3, b_mw: 0, c: 0}\n");
  RunFlags flags{cfg, dir / "out", std::nullopt, true, true};
  EXPECT_EQ(run_subcommand("coupler-sweep", flags), kExitValidation);
  const auto manifest = read_json(dir / "out" / "coupler-sweep" / "run_manifest.json");
  EXPECT_EQ(manifest["status"], "failed");
  EXPECT_EQ(manifest["exit_code"], kExitValidation);
  EXPECT_NE(manifest["error"].get<std::string>().find("photorefraction"), std::string::npos);

  RunFlags missing{dir / "nope.yaml", dir / "out", std::nullopt, false, true};
  EXPECT_EQ(run_subcommand("homodyne", missing), kExitValidation);
  EXPECT_EQ(run_subcommand("no-such-command", flags), kExitValidation);
}

TEST(Cli, DataErrorInFitInput) {
  const auto dir = testing::scratch_dir("cli_fit_input");
  write_text_file(dir / "bad.csv", "pump_power_mW,R\n0,0.157\n1,0.05\n2,0.2\n3,0.3\n");
  const auto cfg = write_config(dir, "run:\n  fit_dn:\n    sweeps:\n      - {temperature_c: 30, path: bad.csv}\n");
  RunFlags flags{cfg, dir / "out", std::nullopt, true, true};
  EXPECT_EQ(run_subcommand("fit-dn", flags), kExitValidation);
}

TEST(Cli, SqueezeBudgetOrdering) {
  const auto dir = testing::scratch_dir("cli_budget");
  RunFlags flags{kExample, dir, std::nullopt, true, true};
  ASSERT_EQ(run_subcommand("squeeze-budget", flags), kExitOk);
  const auto summary = read_json(dir / "squeeze-budget" / "summary.json")["result"];
  double previous = 0.0;
  for (const auto& level : summary["measured"]) {
    const double at_max = level["at_max_residual_power_dB"].get<double>();
    EXPECT_GT(at_max, level["initial_dB"].get<double>());
    EXPECT_LT(at_max, previous);
    previous = at_max;
  }
  EXPECT_GT(summary["photorefractive_at_max_power_dB"].get<double>(),
            summary["ideal_at_max_power_dB"].get<double>());
}

TEST(Cli, SeedChangesSyntheticDataOnly) {
  const auto dir = testing::scratch_dir("cli_seed");
  RunFlags a{kExample, dir / "a", std::uint64_t{1}, true, true};
  RunFlags b{kExample, dir / "b", std::uint64_t{2}, true, true};
  ASSERT_EQ(run_subcommand("fit-dn", a), kExitOk);
  ASSERT_EQ(run_subcommand("fit-dn", b), kExitOk);
  EXPECT_NE(slurp(dir / "a" / "fit-dn" / "synthetic_reflectivity_30C.csv"),
            slurp(dir / "b" / "fit-dn" / "synthetic_reflectivity_30C.csv"));
  EXPECT_EQ(read_json(dir / "a" / "fit-dn" / "run_manifest.json")["seed"], 1);
}

}  // namespace
}  // namespace lnpr
