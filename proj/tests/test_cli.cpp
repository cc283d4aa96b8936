#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sqmle/cli.hpp"
#include "sqmle/config.hpp"

using namespace sqmle;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sqmle");
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sqmle_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Cli, Constants) {
  const auto r = cli({"constants", "--beta", "1.5"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 4), "1.5,");
  double b, ca, cg;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "%lf,%lf,%lf", &b, &ca, &cg), 3);
  EXPECT_NEAR(ca, 0.4281, 5e-3);
  EXPECT_NEAR(cg, 0.9556, 5e-3);
  const auto one = cli({"constants", "--beta", "1"});
  EXPECT_EQ(one.out, "1,0.5000000000,0.5000000000\n");
  EXPECT_EQ(cli({"constants", "--beta", "2.5"}).code, 2);
  EXPECT_EQ(cli({"constants"}).code, 1);
}

TEST(Cli, UsageErrors) {
  const auto missing = cli({"fit", "--config", "/no/such/file.ini", "--data", "x.csv"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("/no/such/file.ini"), std::string::npos) << missing.err;
  const auto unknown = cli({"simulate", "--set", "simulate.steps=10"});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("simulate.steps"), std::string::npos) << unknown.err;
  EXPECT_EQ(cli({"frobnicate"}).code, 1);
  EXPECT_EQ(cli({"simulate", "--preset", "nope"}).code, 1);
  EXPECT_EQ(cli({"mc", "--preset", "nig-1d"}).code, 1);  // --out required
}

TEST(Cli, HelpListsPresetsAndKeys) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const auto& p : preset_names()) EXPECT_NE(r.out.find(p), std::string::npos) << p;
  for (const auto& k : config_keys()) EXPECT_NE(r.out.find(k.key), std::string::npos) << k.key;
  EXPECT_NE(config_reference().find("fit.restarts"), std::string::npos);
}

TEST(Cli, SimulateIsReproducible) {
  const auto d = temp_dir("sim");
  const std::vector<std::string> args{"simulate", "--preset", "nig-1d", "--set", "simulate.n=50", "--set",
                                      "simulate.fine_factor=4", "--seed", "77"};
  const auto a = cli(args);
  const auto b = cli(args);
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, 4), "t,x\n");
  auto c_args = args;
  c_args.back() = "78";
  EXPECT_NE(cli(c_args).out, a.out);

  auto file_args = args;
  file_args.insert(file_args.end(), {"--out", (d / "obs.csv").string()});
  EXPECT_EQ(cli(file_args).code, 0);
  EXPECT_EQ(slurp(d / "obs.csv"), a.out);
  const auto side = nlohmann::json::parse(slurp(d / "obs.csv.json"));
  EXPECT_EQ(side["seed"], 77);
  EXPECT_EQ(side["n_fine"], 200);
  EXPECT_EQ(side["fine_factor"], 4);
  EXPECT_EQ(side["model"], "trig-1d");
  fs::remove_all(d);
}

TEST(Cli, FitWritesReport) {
  const auto d = temp_dir("fit");
  ASSERT_EQ(cli({"simulate", "--preset", "nig-1d", "--set", "simulate.n=300", "--set", "simulate.fine_factor=5",
                 "--out", (d / "obs.csv").string()})
                .code,
            0);
  const std::vector<std::string> args{"fit",      "--preset", "nig-1d", "--data", (d / "obs.csv").string(),
                                      "--set",    "fit.restarts=2"};
  const auto a = cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, cli(args).out);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_TRUE(j.contains("theta_hat"));
  EXPECT_TRUE(j.contains("studentized"));
  EXPECT_TRUE(j.contains("observed_information"));
  EXPECT_TRUE(j.contains("loglik"));
  fs::remove_all(d);
}

TEST(Cli, FitModelViolationExitsTwo) {
  const auto d = temp_dir("viol");
  {
    std::ofstream o(d / "obs.csv");
    o << "t,x\n0,0\n0.5,0.1\n1,0.3\n";
  }
  const auto r = cli({"fit", "--data", (d / "obs.csv").string(), "--set", "model.name=expr", "--set",
                      "model.drift=alpha1*x", "--set", "model.scale=gamma1", "--set", "model.lower=-1,-2", "--set",
                      "model.upper=1,-0.5", "--set", "fit.restarts=2"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("model violation"), std::string::npos) << r.err;
  fs::remove_all(d);
}

TEST(Cli, McAndLltWriteFilesReproducibly) {
  const auto a = temp_dir("mc_a"), b = temp_dir("mc_b");
  for (const auto& dir : {a, b}) {
    const auto r = cli({"mc", "--preset", "stable15-1d", "--set", "mc.designs=5:50:10", "--set", "fit.restarts=2",
                        "--replicates", "3", "--seed", "9", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"replicates.csv", "summary.json", "histograms.csv", "boxplot.csv", "config.ini"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  for (const auto& dir : {a, b}) {
    const auto r = cli({"llt", "--set", "llt.kind=nig", "--set", "llt.half_width=20", "--set", "llt.spacing=0.05",
                        "--set", "llt.h_count=4", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(a / "rates.csv"), slurp(b / "rates.csv"));
  EXPECT_EQ(slurp(a / "rates.csv").substr(0, 5), "h,l1\n");
  EXPECT_EQ(slurp(a / "rates.json"), slurp(b / "rates.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, McFailureExitsThree) {
  const auto d = temp_dir("mc_fail");
  const auto r = cli({"mc", "--preset", "nig-1d", "--set", "mc.designs=1:50:2", "--set", "fit.max_iter=1", "--set",
                      "fit.restarts=1", "--replicates", "2", "--out", d.string()});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(fs::exists(d / "replicates.csv"));
  fs::remove_all(d);
}
