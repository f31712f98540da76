#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "csp_mimo/cli.hpp"

using namespace csp;
using namespace csp::cli;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(ConfigText, EmptyDocumentGivesDefaults) {
  const ExperimentSpec spec = parse_config_text("");
  EXPECT_EQ(spec.config, RadarConfig{});
  EXPECT_EQ(spec.config.receivers, 8u);
  EXPECT_EQ(spec.config.transmitters, 10u);
  EXPECT_EQ(spec.config.samples, 20u);
  EXPECT_EQ(spec.config.cr1, 4.0);
  EXPECT_EQ(spec.config.cr2, 2.0);
  EXPECT_EQ(spec.config.cnr_db, 30.0);
  EXPECT_EQ(spec.config.grid_deg, make_grid(-50, 50, 2));
}

TEST(ConfigText, ValidationErrorQuotesInvariant) {
  EXPECT_NE(error_of("cr1 = 0").find("cr1 >= 1"), std::string::npos);
  EXPECT_NE(error_of("trials = 0").find("trials >= 1"), std::string::npos);
}

TEST(ConfigText, UnknownKeyIsNamed) {
  EXPECT_NE(error_of("recievers = 8").find("'recievers'"), std::string::npos);
  EXPECT_NE(error_of("just text").find("line 1"), std::string::npos);
  EXPECT_NE(error_of("seed = -1").find("'seed'"), std::string::npos);
  EXPECT_NE(error_of("refit = maybe").find("'refit'"), std::string::npos);
}

TEST(ConfigText, CommentsRangesAndLists) {
  const ExperimentSpec spec = parse_config_text(
      "# comment\n"
      "grid_deg = -10:5:10   # trailing comment\n"
      "targets = 1, 3,5\n"
      "cnr_db = -inf\n"
      "snr_db = inf\n"
      "estimators = omp, csp\n"
      "detection_pfa = 0.01\n");
  EXPECT_EQ(spec.config.grid_deg, (std::vector<double>{-10, -5, 0, 5, 10}));
  EXPECT_EQ(spec.params.targets, (std::vector<std::size_t>{1, 3, 5}));
  EXPECT_TRUE(std::isinf(spec.config.cnr_db) && spec.config.cnr_db < 0);
  EXPECT_TRUE(std::isinf(spec.config.snr_db) && spec.config.snr_db > 0);
  EXPECT_EQ(spec.params.estimators, (std::vector<Estimator>{Estimator::Omp, Estimator::Csp}));
  ASSERT_TRUE(spec.params.detection_pfa.has_value());
  EXPECT_EQ(*spec.params.detection_pfa, 0.01);
  EXPECT_EQ(spec.overrides.at("targets"), "1, 3,5");
}

TEST(ConfigText, RoundTripIsExact) {
  ExperimentSpec spec = parse_config_text(
      "kind = cr-match\nsnr_db = 0.1\ncr1 = 3.3333333333333335\nclutter_min_deg = -7.25\n"
      "grid_deg = -50:2.5:50\npfa_grid = 0.001, 0.0123456789012345\nrefit = ls\ntrials = 77\n");
  const ExperimentSpec back = parse_config_text(emit_config(spec));
  EXPECT_EQ(back.kind, spec.kind);
  EXPECT_EQ(back.config, spec.config);
  EXPECT_EQ(back.params, spec.params);
  EXPECT_EQ(back.trials, spec.trials);
  EXPECT_EQ(emit_config(back), emit_config(spec));
  const ExperimentSpec defaults = parse_config_text("");
  EXPECT_EQ(parse_config_text(emit_config(defaults)).params, defaults.params);
}

TEST(Csv, NineSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_number(123456789012.0), "1.23456789e+11");
  CsvTable t({"a", "b"});
  t.row().add(1.5).add(std::size_t{3});
  EXPECT_EQ(t.render(42), "# seed=42 schema=1\na,b\n1.5,3\n");
}

TEST(Run, SingleRunNoiselessFindsTheTarget) {
  ExperimentSpec spec = parse_config_text(
      "kind = single-run\nnoiseless = true\ntarget_angles_deg = 24\ntarget_amplitude = 500\n");
  const RunResult r = run_tables(spec, {});
  const std::string csv = r.tables.at("single-run").render(spec.config.seed);
  std::istringstream in(csv);
  std::string comment, header, row;
  std::getline(in, comment);
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "detected,t_hat,angle_deg,statistic,eta,d");
  EXPECT_EQ(row.substr(0, row.find(',', 5)), "true,37");  // 24 deg is cell 37
}

TEST(Run, RocSchemaAndFiles) {
  ExperimentSpec spec = parse_config_text("kind = roc\ntrials = 100\npfa_grid = 0.01, 0.1\n");
  spec.output = (std::filesystem::temp_directory_path() / "csp_mimo_cli_roc").string();
  std::filesystem::remove_all(spec.output);
  const auto written = run(spec, {});
  ASSERT_EQ(written.size(), 2u);
  const std::string csv = read_file(std::filesystem::path(spec.output) / "roc.csv");
  EXPECT_EQ(csv.rfind("# seed=1 schema=1\npfa,pd_emp,pd_theory,stderr\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto manifest = nlohmann::json::parse(read_file(std::filesystem::path(spec.output) / "roc.manifest.json"));
  EXPECT_EQ(manifest["seed"], 1);
  EXPECT_EQ(manifest["config"]["trials"], "100");
  EXPECT_EQ(manifest["outputs"][0], "roc.csv");
}

TEST(Run, SameSpecSameBytes) {
  for (const std::string kind : {"roc", "estimate", "resolvability", "cr-match"}) {
    ExperimentSpec spec = parse_config_text(
        "kind = " + kind +
        "\ntrials = 30\nsnr_db = 10\nclutter_min_deg = -10\nclutter_max_deg = 10\ntargets = 2\n"
        "cr1_grid = 2, 8\ndelta_grid = 4, 10\n");
    RunOptions one, three;
    three.threads = 3;
    const auto a = run_tables(spec, one);
    const auto b = run_tables(spec, one);
    const auto c = run_tables(spec, three);
    for (const auto& [stem, table] : a.tables) {
      EXPECT_EQ(table.render(1), b.tables.at(stem).render(1)) << kind;
      EXPECT_EQ(table.render(1), c.tables.at(stem).render(1)) << kind;
    }
  }
}
