#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

using Json = nlohmann::ordered_json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = opsys::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string tmp(const std::string& name) { return "cli_test_" + name; }

void write(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("gram report") {
  const Run r = run({"gram", "--kind", "sic", "-d", "3"});
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["command"] == "gram");
  CHECK(j.contains("wall_time_s"));
  CHECK(j.contains("version"));
  CHECK(j["config"]["d"] == "3");
  CHECK(j["result"]["rank"] == 9);
  const auto& m = j["result"]["matrix"];
  REQUIRE(m.size() == 9);
  for (int i = 0; i < 9; ++i)
    for (int k = 0; k < 9; ++k)
      CHECK(std::abs(m[i][k].get<double>() - (i == k ? 1.0 / 3 : 1.0 / 12)) <= 1e-14);
}

TEST_CASE("gram csv") {
  const Run r = run({"gram", "-d", "2", "--format", "csv"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++rows;
  CHECK(rows == 4);
}

TEST_CASE("thresholds report") {
  const Run r = run({"thresholds", "-d", "2"});
  REQUIRE(r.code == 0);
  const double beta = std::sqrt(7.0) / 3;
  const double gam = beta / std::sqrt(2.0);
  const double a = 1.0 / 6;
  const double b3 = (2 * gam + std::sqrt(4 * gam * gam + 4 * a * beta * beta)) / (2 * a);
  CHECK(std::abs(Json::parse(r.out)["result"]["t_star"].get<double>() - b3) <= 1e-12);
  CHECK(std::abs(b3 - 8.0622) <= 1e-3);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 4);
  CHECK(run({"nonsense"}).code == 4);
  CHECK(run({"gram", "--kind", "qubit"}).code == 4);
  CHECK(run({"gram", "--unknown-flag"}).code == 4);
  CHECK(run({"mub-gen", "-d", "4"}).code == 4);
  CHECK(run({"build-cone", "--rule", "explicit", "--tvalues", "3,2"}).code == 4);
  CHECK(run({"member", "--label", "p9"}).code == 4);
  CHECK(run({"member", "--format", "csv"}).code == 4);
  write(tmp("bad.cfg"), "bogus = 1\n");
  const Run r = run({"gram", "--config", tmp("bad.cfg")});
  CHECK(r.code == 4);
  CHECK(r.err.find("bogus") != std::string::npos);
  std::remove(tmp("bad.cfg").c_str());
}

TEST_CASE("config precedence and replay") {
  write(tmp("m.cfg"), "# member query\nkind = sic\nd = 2\nnmax = 3\nlabel = p1\nscale = -1\n");
  const Run a = run({"member", "--config", tmp("m.cfg")});
  REQUIRE(a.code == 0);
  const Json ja = Json::parse(a.out);
  CHECK(ja["result"]["membership"]["verdict"] == "outside");
  CHECK(ja["result"]["validated"] == true);
  // Flags win over the file.
  const Run b = run({"member", "--config", tmp("m.cfg"), "--scale", "1"});
  CHECK(Json::parse(b.out)["result"]["membership"]["verdict"] == "inside");
  // A report replays itself.
  write(tmp("m.json"), a.out);
  const Run c = run({"member", "--config", tmp("m.json")});
  REQUIRE(c.code == 0);
  const Json jc = Json::parse(c.out);
  CHECK(jc["config"] == ja["config"]);
  CHECK(jc["result"].dump() == ja["result"].dump());
  std::remove(tmp("m.cfg").c_str());
  std::remove(tmp("m.json").c_str());
}

TEST_CASE("seed from the environment") {
  setenv("OPSYS_SEED", "42", 1);
  CHECK(Json::parse(run({"thresholds", "-d", "2"}).out)["seed"] == 42);
  CHECK(Json::parse(run({"thresholds", "-d", "2", "--seed", "5"}).out)["seed"] == 5);
  setenv("OPSYS_SEED", "x", 1);
  CHECK(run({"thresholds", "-d", "2"}).code == 4);
  unsetenv("OPSYS_SEED");
}

TEST_CASE("instances, verification and pi-check") {
  const Run m = run({"mub-gen", "-d", "3", "--out", tmp("mub.json")});
  REQUIRE(m.code == 0);
  CHECK(run({"verify", "--kind", "mub", "-d", "3", "--instance", tmp("mub.json"), "--tol", "1e-10"}).code == 0);
  CHECK(run({"verify", "--kind", "sic", "-d", "3", "--instance", tmp("mub.json")}).code == 4);

  // A perturbed instance fails verification.
  std::ifstream in(tmp("mub.json"));
  Json j = Json::parse(in);
  j["result"]["instance"]["vectors"][0][0][0] = 0.9;
  write(tmp("mub_bad.json"), j.dump());
  CHECK(run({"verify", "--kind", "mub", "-d", "3", "--instance", tmp("mub_bad.json"), "--tol", "1e-10"}).code == 2);

  CHECK(run({"pi-check", "--kind", "sic", "-d", "2", "--nmax", "4", "--tol", "1e-9"}).code == 0);
  CHECK(run({"pi-check", "--kind", "sic", "-d", "2", "--t0", "0.01", "--slope", "0.01", "--tol", "1e-9"}).code == 2);
  std::remove(tmp("mub.json").c_str());
  std::remove(tmp("mub_bad.json").c_str());
}

TEST_CASE("membership subcommands") {
  const Run r = run({"member", "--label", "p2", "--level", "2", "--shift", "-0.5", "--oracle", "concrete"});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["result"]["membership"]["verdict"] == "outside");
  const Run c = run({"cnp", "--p", "p1", "--label", "p2", "--nmax", "3"});
  REQUIRE(c.code == 0);
  CHECK(Json::parse(c.out)["result"]["membership"]["verdict"] == "inside");
  const Run rel = run({"relation", "--p", "p1", "--xl", "p2", "--oracle", "concrete"});
  REQUIRE(rel.code == 0);
  CHECK(Json::parse(rel.out)["result"]["relation"]["holds"] == "yes");
  const Run dm = run({"dmin-refute", "--oracle", "concrete", "--label", "p1", "--scale", "-1", "--level", "3",
                      "--restarts", "2", "--steps", "20"});
  REQUIRE(dm.code == 0);
  CHECK(Json::parse(dm.out)["result"]["outcome"]["refuted"] == true);
}

TEST_CASE("probe and iterate exit codes") {
  const Run p = run({"probe", "--nmax", "3", "--directions", "50", "--ascent-starts", "1", "--ascent-steps", "10"});
  CHECK(p.code == 0);
  CHECK(Json::parse(p.out)["result"]["result"] == "NoneFound");

  const Run it = run({"iterate", "--t0", "8.07", "--nmax", "3", "--stages", "1", "--seed", "7", "--out", tmp("it.json")});
  REQUIRE(it.code == 0);
  std::ifstream in(tmp("it.json"));
  const Json rep = Json::parse(in);
  CHECK(rep["result"]["stages_completed"] == 1);
  CHECK(rep["result"]["stages"].size() == 2);
  CHECK(rep["result"].contains("timing"));
  const Run s = run({"soundness", "--report", tmp("it.json")});
  CHECK(s.code == 0);
  CHECK(Json::parse(s.out)["result"]["violations"] == 0);
  std::remove(tmp("it.json").c_str());
}
