#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "qfb/cli.hpp"

using namespace qfb;
namespace fs = std::filesystem;

namespace {

RunConfig config(std::initializer_list<std::pair<const char*, const char*>> kv) {
  RunConfig c;
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

class CliBinary : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("qfb_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(QFB_CLI_PATH) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST(ConfigParse, KeyValueLinesAndComments) {
  const RunConfig c = parse_config_text("# comment\nmodel = dicke   # trailing\n\n omega_over_Gamma=0.38\n");
  EXPECT_EQ(c.get_or("model", ""), "dicke");
  EXPECT_DOUBLE_EQ(c.number("omega_over_Gamma", 0.0), 0.38);
  EXPECT_EQ(c.entries().size(), 2u);
  EXPECT_THROW(parse_config_text("model dicke\n"), ConfigError);
}

TEST(ConfigParse, LaterValuesOverrideEarlier) {
  const RunConfig c = parse_config_text("seed = 1\nseed = 2\n");
  EXPECT_EQ(c.get_or("seed", ""), "2");
  EXPECT_EQ(c.entries().size(), 1u);
}

TEST(ConfigParse, SymbolicPi) {
  constexpr double pi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(RunConfig::parse_number("x", "pi"), pi);
  EXPECT_DOUBLE_EQ(RunConfig::parse_number("x", "-pi/2"), -pi / 2);
  EXPECT_DOUBLE_EQ(RunConfig::parse_number("x", "2pi"), 2 * pi);
  EXPECT_DOUBLE_EQ(RunConfig::parse_number("x", "0.5*pi"), pi / 2);
  EXPECT_DOUBLE_EQ(RunConfig::parse_number("x", "-1.25e-1"), -0.125);
  EXPECT_THROW(RunConfig::parse_number("x", "pie"), ConfigError);
  EXPECT_THROW(RunConfig::parse_number("x", "1.0x"), ConfigError);
  EXPECT_THROW(RunConfig::parse_number("x", "inf"), ConfigError);
}

TEST(ConfigModel, DefaultsAndUnits) {
  const ModelSpec s = model_from_config(config({{"model", "jump_fb"}, {"omega_over_Gamma", "0.5"}, {"lambda_tilde", "pi/2"}}));
  EXPECT_EQ(s.kind, ModelKind::JumpFB);
  EXPECT_EQ(s.feedback.measurement, Measurement::Photodetection);
  EXPECT_EQ(s.feedback.generator, GeneratorKind::LocalSigmaX);
  EXPECT_DOUBLE_EQ(s.feedback.strength, std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(s.big_gamma, 1.0);
  EXPECT_EQ(s.gamma1, 0.0);
  const ModelSpec f = model_from_config(config({{"model", "full_nonadiabatic"}, {"g_over_gamma", "40"}, {"kappa_over_gamma", "16"}}));
  EXPECT_EQ(*f.fock_cutoff, 8u);
  EXPECT_DOUBLE_EQ(f.gamma1, 1.0);
  EXPECT_DOUBLE_EQ(f.collective_rate(), 100.0);
}

TEST(ConfigModel, RejectsUnknownOrMisplacedKeys) {
  EXPECT_THROW(model_from_config(config({{"model", "dicke"}, {"omgea_over_Gamma", "1"}})), ConfigError);
  EXPECT_THROW(model_from_config(config({{"model", "dicke"}, {"omega_over_gamma", "1"}})), ConfigError);
  EXPECT_THROW(model_from_config(config({{"model", "homodyne_fb"}, {"lambda_tilde", "1"}})), ConfigError);
  EXPECT_THROW(model_from_config(config({{"model", "nope"}})), ConfigError);
  EXPECT_THROW(model_from_config(config({{"model", "jump_fb"}, {"generator", "sigma_z"}})), ConfigError);
  EXPECT_THROW(model_from_config(config({{"model", "jump_fb_ineff"}, {"eta", "1.2"}})), ConfigError);
  EXPECT_THROW(model_from_config(config({{"model", "full_nonadiabatic"}, {"kappa_over_gamma", "1"}, {"fock_cutoff", "2.5"}})),
               ConfigError);
}

TEST(ConfigModel, CustomGenerator) {
  const ModelSpec s = model_from_config(
      config({{"model", "jump_fb"}, {"generator", "custom"}, {"custom_generator", "0 1 1 0  1 0 0 1  1 0 0 1  0 1 1 0"}}));
  EXPECT_LT((s.feedback.custom - atomic_ops().j_x).max_abs(), 1e-15);
  EXPECT_THROW(model_from_config(config({{"model", "jump_fb"}, {"generator", "custom"}, {"custom_generator", "1 2 3"}})),
               ConfigError);
  // non-Hermitian
  EXPECT_THROW(model_from_config(config({{"model", "jump_fb"},
                                         {"generator", "custom"},
                                         {"custom_generator", "0 0:1 0 0 0:1 0 0 0 0 0 0 0 0 0 0 0"}})),
               ConfigError);
}

TEST(ConfigAxis, ParsesNameRangeCount) {
  const Axis a = parse_axis("lambda:-pi:pi:5", ModelKind::JumpFB);
  EXPECT_EQ(a.name, "lambda");
  EXPECT_EQ(a.unit, "lambda_tilde");
  ASSERT_EQ(a.values.size(), 5u);
  EXPECT_DOUBLE_EQ(a.values.front(), -std::numbers::pi);
  EXPECT_EQ(parse_axis("omega_over_Gamma:0:1:3", ModelKind::Dicke).name, "omega");
  EXPECT_THROW(parse_axis("omega:0:1", ModelKind::Dicke), ConfigError);
  EXPECT_THROW(parse_axis("omega:0:1:2.5", ModelKind::Dicke), ConfigError);
  EXPECT_THROW(parse_axis("colour:0:1:3", ModelKind::Dicke), ConfigError);
}

TEST(ConfigSeed, UnsignedSixtyFourBit) {
  EXPECT_EQ(parse_seed("18446744073709551615"), 18446744073709551615ull);
  EXPECT_THROW(parse_seed("-1"), ConfigError);
  EXPECT_THROW(parse_seed("12abc"), ConfigError);
}

TEST(Csv, HeaderRoundTripReproducesOutput) {
  const RunConfig cfg = config({{"model", "jump_fb"}, {"omega_over_Gamma", "0.5"}, {"lambda_tilde", "1"}});
  const auto first = cmd_steady(cfg);
  const RunConfig header = parse_config_text(first[0].content, true);
  EXPECT_EQ(header.get_or("command", ""), "steady");
  EXPECT_EQ(header.get_or("code_version", ""), std::string(kCodeVersion));
  EXPECT_EQ(header.get_or("rng", ""), std::string(kRngName));
  RunConfig again = header;
  again.erase("command");
  EXPECT_EQ(cmd_steady(again)[0].content, first[0].content);
}

TEST(Csv, SteadyRowContents) {
  const auto out = cmd_steady(config({{"model", "jump_fb"}, {"omega_over_Gamma", "0.5"}, {"lambda_tilde", "1"}}));
  const std::string& text = out[0].content;
  std::istringstream in(text);
  std::string line, columns, row;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) {
      if (columns.empty()) columns = line;
      else row = line;
    }
  EXPECT_NE(columns.find("concurrence,rho11,rho22,rho33,rho44,purity,fidelity_bell4"), std::string::npos);
  EXPECT_NE(row.find(",1,"), std::string::npos);
  EXPECT_EQ(row.substr(row.size() - 2), "ok");
}

TEST(Csv, OneDimensionalSweepHasOneRowPerNode) {
  const auto out = cmd_sweep(config({{"model", "dicke"}, {"method", "from"}, {"from_state", "gg"}, {"axis1", "omega:0:1.5:7"}}), 1);
  std::istringstream in(out[0].content);
  std::string line;
  int data = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (first) {
      EXPECT_EQ(line, "omega_over_Gamma,concurrence,rho11,rho22,rho33,rho44,photon_number,status,error");
      first = false;
    } else {
      ++data;
    }
  }
  EXPECT_EQ(data, 7);
}

TEST(Csv, FailedNodesAreMarked) {
  // sigma_x1 feedback breaks the symmetric subspace
  const auto out = cmd_sweep(config({{"model", "jump_fb"}, {"method", "symmetric_subspace"}, {"lambda_tilde", "1"}, {"axis1", "omega:0.1:0.2:2"}}), 1);
  EXPECT_NE(out[0].content.find(",error,"), std::string::npos);
  EXPECT_NE(out[0].content.find("nan"), std::string::npos);
}

TEST(OutputPath, SuffixGoesBeforeExtension) {
  EXPECT_EQ(output_path("out/run.csv", "_ensemble"), "out/run_ensemble.csv");
  EXPECT_EQ(output_path("out.d/run", "_ge"), "out.d/run_ge");
  EXPECT_EQ(output_path("run.csv", ""), "run.csv");
}

TEST(ExitCodes, MapErrorKinds) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), exit_code::config);
  EXPECT_EQ(exit_code_for(InvalidSpec("x")), exit_code::config);
  EXPECT_EQ(exit_code_for(DegenerateSteadyState("x")), exit_code::degenerate);
  EXPECT_EQ(exit_code_for(CutoffSaturated("x")), exit_code::cutoff);
  EXPECT_EQ(exit_code_for(NoConvergence("x")), exit_code::other);
}

TEST(Figures, EveryRecipeHasAValidConfig) {
  for (const auto& [name, recipe] : figure_recipes()) {
    RunConfig c;
    for (const auto& [k, v] : recipe.defaults) c.set(k, v);
    c.set("figure", name);
    EXPECT_NO_THROW(canonical_config(recipe.command, c)) << name;
  }
  EXPECT_THROW(cmd_figure("fig9", RunConfig{}, 1), ConfigError);
}

TEST_F(CliBinary, SteadyToStdout) {
  EXPECT_EQ(run("steady --set model=jump_fb --set omega_over_Gamma=0.5 --set lambda_tilde=1"), 0);
  const std::string out = read_file(path("stdout"));
  EXPECT_NE(out.find("# command = steady"), std::string::npos);
  EXPECT_NE(out.find("concurrence"), std::string::npos);
}

TEST_F(CliBinary, ConfigFileAndOverrides) {
  const std::string cfg = write("run.cfg", "model = jump_fb\nomega_over_Gamma = 0.5\nlambda_tilde = 0\n");
  EXPECT_EQ(run("steady --config " + cfg + " --set lambda_tilde=1 --out " + path("a.csv")), 0);
  EXPECT_NE(read_file(path("a.csv")).find("# lambda_tilde = 1\n"), std::string::npos);
}

TEST_F(CliBinary, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("steady --set model=dicke --set bogus=1"), 2);
  EXPECT_EQ(run("steady --config " + path("missing.cfg")), 2);
  EXPECT_EQ(run("sweep --set model=dicke"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("steady --jobs 0 --set model=dicke"), 2);
  EXPECT_EQ(run("figure fig99"), 2);
  EXPECT_EQ(run("traj --set model=dicke"), 1);
}

TEST_F(CliBinary, DegenerateExitsThree) {
  EXPECT_EQ(run("steady --set model=dicke --set omega_over_Gamma=0.38"), 3);
  EXPECT_NE(read_file(path("stderr")).find("error:"), std::string::npos);
  EXPECT_EQ(run("steady --set model=dicke --set omega_over_Gamma=0.38 --set method=from --set from_state=gg"), 0);
}

TEST_F(CliBinary, SaturatedCutoffExitsFour) {
  EXPECT_EQ(run("traj --set model=full_nonadiabatic --set g_over_gamma=20 --set kappa_over_gamma=1 "
                "--set omega_over_gamma=40 --set lambda_tilde=1 --set fock_cutoff=2 --set t_final=1 --set sample_dt=0.1 "
                "--out " + path("t.csv")),
            4);
}

TEST_F(CliBinary, SameSeedByteIdenticalOutputs) {
  const std::string args = "traj --set model=jump_fb_ineff --set eta=0.6 --set omega_over_Gamma=0.5 --set lambda_tilde=1 "
                           "--set gamma_over_Gamma=0.05 --set t_final=3 --set sample_dt=0.05 --set ntraj=40 ";
  ASSERT_EQ(run(args + "--seed 123 --jobs 1 --out " + path("a.csv")), 0);
  ASSERT_EQ(run(args + "--seed 123 --jobs 3 --out " + path("b.csv")), 0);
  ASSERT_EQ(run(args + "--seed 124 --jobs 1 --out " + path("c.csv")), 0);
  EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
  EXPECT_EQ(read_file(path("a_ensemble.csv")), read_file(path("b_ensemble.csv")));
  EXPECT_NE(read_file(path("a.csv")), read_file(path("c.csv")));
  EXPECT_NE(read_file(path("a.csv")).find("# seed = 123\n"), std::string::npos);
}

TEST_F(CliBinary, OutputHeaderIsARunnableConfig) {
  ASSERT_EQ(run("sweep --set model=jump_fb --set generator=jx --set method=symmetric_subspace "
                "--set axis1=omega:-1:1:5 --set axis2=lambda:-pi:pi:5 --out " + path("s.csv")),
            0);
  const RunConfig header = parse_config_text(read_file(path("s.csv")), true);
  std::string cfg;
  for (const auto& [k, v] : header.entries())
    if (k != "command") cfg += k + " = " + v + "\n";
  write("again.cfg", cfg);
  ASSERT_EQ(run("sweep --config " + path("again.cfg") + " --out " + path("s2.csv")), 0);
  EXPECT_EQ(read_file(path("s.csv")), read_file(path("s2.csv")));
}
