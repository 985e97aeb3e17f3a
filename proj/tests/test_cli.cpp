#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "srgeom/cli.hpp"

using nlohmann::json;
namespace cli = srg::cli;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("srgeom_test_" + name)).string();
}

}  // namespace

TEST_CASE("validate on the Heisenberg model") {
  const Result r = run({"validate", "--model", "heisenberg", "--points", "100", "--tol", "1e-9"});
  CHECK(r.code == cli::kExitPass);
  const json doc = json::parse(r.out);
  CHECK(doc["pass"] == true);
  CHECK(doc["tool"] == "srgeom");
  CHECK(doc["seed"] == 1);
  CHECK(doc["config_hash"].get<std::string>().size() == 16);
  CHECK(doc["rows"].size() == 100);
}

TEST_CASE("constants for su2") {
  const Result r = run({"constants", "--model", "su2", "--format", "json"});
  CHECK(r.code == cli::kExitPass);
  const json doc = json::parse(r.out);
  CHECK(doc["result"]["D"].get<double>() == doctest::Approx(8.0));
  CHECK(doc["result"]["diameter"].get<double>() == doctest::Approx(26.657).epsilon(1e-4));
  CHECK(doc["result"]["lambda1_bound"].get<double>() == doctest::Approx(1.6));

  const json h = json::parse(run({"constants", "--model", "heisenberg"}).out);
  CHECK(h["result"]["diameter"] == "inf");
  CHECK(h["result"]["lambda1_bound"]["value"].is_null());
}

TEST_CASE("verify-bochner on the sphere") {
  const Result r = run({"verify-bochner", "--model", "sphere2", "--fields", "50", "--points", "20"});
  CHECK(r.code == cli::kExitPass);
  const json doc = json::parse(r.out);
  CHECK(doc["rows"].size() == 1000);
  CHECK(doc["result"]["max_horizontal"].get<double>() <= 1e-9);

  const Result fd = run({"verify-bochner", "--model", "su2", "--backend", "fd", "--fields", "3", "--points", "3"});
  CHECK(fd.code == cli::kExitPass);
  CHECK(json::parse(fd.out)["result"]["tol"].get<double>() == 1e-5);
}

TEST_CASE("verdict failures exit with 1") {
  CHECK(run({"certify", "--model", "heisenberg", "--rho1", "0.1", "--points", "5"}).code == cli::kExitFail);
  CHECK(run({"certify", "--model", "heisenberg", "--points", "5"}).code == cli::kExitPass);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"frobnicate"}).code == cli::kExitUsage);
  CHECK(run({"validate", "--model", "torus"}).code == cli::kExitUsage);
  CHECK(run({"validate", "--format", "xml"}).code == cli::kExitUsage);
  CHECK(run({"validate", "--points", "-3"}).code == cli::kExitUsage);
  CHECK(run({"validate", "--bogus"}).code == cli::kExitUsage);
  CHECK(run({"lambda1", "--model", "euclidean"}).code == cli::kExitUsage);
  CHECK(run({"distance", "--model", "heisenberg"}).code == cli::kExitUsage);
  CHECK(run({"distance", "--model", "heisenberg", "--to", "1,2"}).code == cli::kExitUsage);
  CHECK(run({"validate", "--help"}).code == cli::kExitPass);
  CHECK(run({"--version"}).code == cli::kExitPass);
}

TEST_CASE("malformed structure files are usage errors") {
  const std::string path = temp_path("bad.json");
  {
    std::ofstream f(path);
    f << "{\"format\": \"srs-v1\", \"custom\": 3";
  }
  const Result r = run({"validate", "--structure", path});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("srgeom:") != std::string::npos);
  CHECK(run({"validate", "--structure", temp_path("missing.json")}).code == cli::kExitUsage);
  std::filesystem::remove(path);
}

TEST_CASE("reports are byte-deterministic and independent of the thread count") {
  const std::vector<std::string> base{"verify-bochner", "--model", "su2", "--fields", "6", "--points", "4", "--seed", "9"};
  auto with = [&](std::string threads) {
    auto a = base;
    a.push_back("--threads");
    a.push_back(threads);
    return run(a).out;
  };
  const std::string one = with("1");
  CHECK(one == with("1"));
  CHECK(one == with("3"));
  const Result sim1 = run({"simulate", "--model", "heisenberg", "--paths", "2000", "--dt", "0.01", "--threads", "1"});
  const Result sim2 = run({"simulate", "--model", "heisenberg", "--paths", "2000", "--dt", "0.01", "--threads", "2"});
  CHECK(sim1.out == sim2.out);
  // a different seed changes the hash and the header
  const std::string other = run({"verify-bochner", "--model", "su2", "--fields", "6", "--points", "4", "--seed", "10"}).out;
  CHECK(json::parse(other)["config_hash"] != json::parse(one)["config_hash"]);
}

TEST_CASE("csv and text formats carry the run header") {
  const Result csv = run({"geodesic", "--model", "heisenberg", "--u0", "1,0", "--a", "2", "--steps", "50", "--format", "csv"});
  CHECK(csv.code == cli::kExitPass);
  CHECK(csv.out.rfind("# srgeom 1.0.0 command=geodesic config_hash=", 0) == 0);
  CHECK(csv.out.find("\nt,x0,x1,x2,u0,u1,a0\n") != std::string::npos);
  const Result text = run({"constants", "--model", "sphere2", "--format", "text"});
  CHECK(text.out.find("version: 1.0.0") != std::string::npos);
  CHECK(text.out.find("lambda1_bound: 2") != std::string::npos);
}

TEST_CASE("output files and ensembles") {
  const std::string out = temp_path("report.json");
  const std::string ens = temp_path("ens.srhe");
  const Result r = run({"simulate", "--model", "euclidean", "--paths", "500", "--dt", "0.1", "--out", out, "--ensemble", ens});
  CHECK(r.code == cli::kExitPass);
  CHECK(r.out.empty());
  std::ifstream f(out);
  const json doc = json::parse(f);
  CHECK(doc["result"]["Pt1"] == 1.0);
  std::ifstream e(ens, std::ios::binary);
  char magic[4];
  e.read(magic, 4);
  CHECK(std::string(magic, 4) == "SRHE");
  std::filesystem::remove(out);
  std::filesystem::remove(ens);
}

TEST_CASE("distance, volume and lambda1 subcommands") {
  const json d = json::parse(run({"distance", "--model", "heisenberg", "--from", "0,0,0", "--to", "1,0,0"}).out);
  CHECK(d["result"]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(d["result"]["closed_form"].get<double>() == doctest::Approx(1.0));

  const Result v = run({"volume", "--model", "euclidean", "--radii", "1,2,4,8", "--samples", "4000"});
  CHECK(v.code == cli::kExitPass);
  CHECK(json::parse(v.out)["result"]["exponent"].get<double>() == doctest::Approx(2.0).epsilon(0.05));

  const Result l = run({"lambda1", "--model", "sphere2"});
  CHECK(l.code == cli::kExitPass);
  CHECK(json::parse(l.out)["result"]["lambda1"].get<double>() == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("the SRC_THREADS fallback") {
  setenv("SRC_THREADS", "2", 1);
  const Result a = run({"validate", "--model", "sphere2", "--points", "5"});
  unsetenv("SRC_THREADS");
  const Result b = run({"validate", "--model", "sphere2", "--points", "5"});
  CHECK(a.code == cli::kExitPass);
  CHECK(a.out == b.out);
}
