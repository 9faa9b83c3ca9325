#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = DUALVP_CLI;
const std::string kConfigs = DUALVP_CONFIGS;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dualvp_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& sub, const std::string& config, const fs::path& out,
        const std::string& extra = "") {
  const std::string cmd = kCli + " " + sub + " --config " + config + " --out " + out.string() + " " +
                          extra + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json manifest(const fs::path& out) { return nlohmann::json::parse(slurp(out / "manifest.json")); }

std::string config(const std::string& name) { return kConfigs + "/" + name + ".json"; }

fs::path write_config(const std::string& name, const nlohmann::json& j) {
  const fs::path p = fs::temp_directory_path() / ("dualvp_cli_cfg_" + name + ".json");
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST(Cli, IntegrateWritesTableAndManifest) {
  const fs::path out = scratch("integrate");
  ASSERT_EQ(run("integrate", config("lorenz_integrate"), out), 0);
  const auto m = manifest(out);
  EXPECT_EQ(m["subcommand"], "integrate");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_TRUE(m.contains("config"));
  EXPECT_TRUE(m.contains("versions"));
  EXPECT_TRUE(m.contains("timings"));
  for (const auto& f : m["outputs"]) EXPECT_TRUE(fs::exists(out / f.get<std::string>())) << f;
}

TEST(Cli, OutputsAreDeterministic) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("dual-solve", config("lorenz_dual"), a), 0);
  ASSERT_EQ(run("dual-solve", config("lorenz_dual"), b), 0);
  for (const char* f : {"dual.csv", "primal.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, ManifestEchoReruns) {
  const fs::path a = scratch("echo_a"), b = scratch("echo_b");
  ASSERT_EQ(run("integrate", config("lorenz_integrate"), a), 0);
  const fs::path echo = write_config("echo", manifest(a)["config"]);
  ASSERT_EQ(run("integrate", echo.string(), b), 0);
  EXPECT_EQ(slurp(a / "trajectory.csv"), slurp(b / "trajectory.csv"));
}

TEST(Cli, MalformedConfigLeavesNoOutput) {
  const fs::path out = scratch("malformed");
  EXPECT_EQ(run("dual-solve", config("malformed"), out), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, MissingConfigFile) {
  const fs::path out = scratch("missing");
  EXPECT_EQ(run("integrate", "/nonexistent/config.json", out), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, UnknownSubcommand) {
  EXPECT_EQ(run("levitate", config("lorenz_integrate"), scratch("unknown")), 2);
}

TEST(Cli, SmallCIsASingularity) {
  const fs::path out = scratch("small_c");
  EXPECT_EQ(run("dual-solve", config("lorenz_small_c"), out), 4);
  const auto m = manifest(out);
  EXPECT_EQ(m["exit_code"], 4);
  EXPECT_TRUE(m.contains("error"));
  EXPECT_EQ(run("dtp-check", config("lorenz_small_c"), scratch("small_c_dtp")), 4);
}

TEST(Cli, NonConvergenceExitsThree) {
  auto j = nlohmann::json::parse(slurp(config("lorenz_dual")));
  j["dual"]["max_iter"] = 1;
  j["dual"]["tol"] = 1e-15;
  const fs::path out = scratch("nonconv");
  EXPECT_EQ(run("dual-solve", write_config("nonconv", j).string(), out), 3);
  EXPECT_EQ(manifest(out)["results"]["converged"], false);
}

TEST(Cli, HamiltonianRejectsTimeVaryingBase) {
  auto j = nlohmann::json::parse(slurp(config("lorenz_hamiltonian")));
  j["dual"]["base"] = "oracle";
  const fs::path out = scratch("ham_oracle");
  EXPECT_EQ(run("hamiltonian", write_config("ham_oracle", j).string(), out), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, EverySubcommandRuns) {
  const std::pair<const char*, const char*> jobs[] = {
      {"dual-solve", "pars_reduced_dual"}, {"dtp-check", "lorenz_dual"},
      {"hamiltonian", "lorenz_hamiltonian"}, {"reduce", "pars_reduce"},
      {"periodic", "harmonic_periodic"},  {"periodic", "vanderpol_periodic"},
      {"compare", "pars_laws"},           {"compare", "lorenz_gauge"},
      {"compare", "pars_reduce"},         {"integrate", "pars_damped"}};
  for (const auto& [sub, cfg] : jobs) {
    const fs::path out = scratch(std::string(sub) + "_" + cfg);
    EXPECT_EQ(run(sub, config(cfg), out), 0) << sub << " " << cfg;
    EXPECT_EQ(manifest(out)["status"], "ok") << sub << " " << cfg;
  }
}

TEST(Cli, PlotDataOnRequest) {
  const fs::path out = scratch("plot");
  ASSERT_EQ(run("integrate", config("lorenz_integrate"), out, "--emit-plot-data"), 0);
  EXPECT_TRUE(fs::exists(out / "plot" / "trajectory_x.csv"));
  const fs::path plain = scratch("noplot");
  ASSERT_EQ(run("integrate", config("lorenz_integrate"), plain), 0);
  EXPECT_FALSE(fs::exists(plain / "plot"));
}
