#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fluidprobe/cli.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fluidprobe;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) {
  const char* dir = std::getenv("FLUIDPROBE_DATA");
  return (fs::path(dir ? dir : "data") / name).string();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "fluidprobe_cli_test" / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("missing scene file exits 1 and names the path") {
  const Result r = run({"simulate", "--scene", "/no/such/scene.json", "-o", scratch("missing").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("/no/such/scene.json") != std::string::npos);
}

TEST_CASE("bad usage exits 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"simulate", "--no-such-flag"}).code == 1);
  CHECK(run({"simulate", "--scene", data("block_clean.json"), "--set", "simulation.bogus=1"}).code == 1);
  CHECK(run({"simulate", "--scene", data("block_clean.json"), "--direction", "+y"}).code == 1);
}

TEST_CASE("default simulate writes 76 snapshots and a summary") {
  const fs::path out = scratch("simulate");
  const Result r = run({"simulate", "--scene", data("block_clean.json"), "-o", out.string(), "--check"});
  REQUIRE(r.code == 0);
  std::size_t csv = 0, vtk = 0;
  for (const auto& e : fs::directory_iterator(out / "snapshots")) {
    csv += e.path().extension() == ".csv";
    vtk += e.path().extension() == ".vtk";
  }
  CHECK(csv == 76);
  CHECK(vtk == 76);
  const auto j = read_json(out / "summary.json");
  CHECK(j["snapshots"] == 76);
  CHECK(j["escaped_particles"] == 0);
  CHECK(j["total_fluid_mass_initial"] == j["total_fluid_mass_final"]);
  CHECK(fs::exists(out / "config.ini"));
  CHECK(lines(out / "snapshots" / "fluid_000000.csv").front() == "x,y,z,vx,vy,vz,divergence,type");
}

TEST_CASE("top-down run starts at rest") {
  const fs::path out = scratch("topdown");
  const Result r = run({"simulate", "--scene", data("block_clean.json"), "-o", out.string(), "--direction", "-y",
                        "--velocity", "0", "--steps", "20"});
  REQUIRE(r.code == 0);
  const auto j = read_json(out / "summary.json");
  CHECK(j["direction"] == "-y");
  CHECK(j["speed"] == 0.0);
  const auto rows = lines(out / "snapshots" / "fluid_000000.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[1].find(",0,0,0,") != std::string::npos);
}

TEST_CASE("failed physical checks exit 3") {
  const Result r = run({"simulate", "--scene", data("block_clean.json"), "-o", scratch("check").string(), "--steps", "30",
                        "--set", "simulation.max_iterations=2", "--set", "simulation.divergence_tolerance=1e-12",
                        "--check"});
  CHECK(r.code == 3);
}

TEST_CASE("probe subset, row count and byte-identical replay") {
  const fs::path a = scratch("probe_a"), b = scratch("probe_b");
  const std::vector<std::string> common{"probe", "--scene", data("block_clean.json"), "--ics", "x,-x", "--steps", "100"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"-o", a.string()});
  args_b.insert(args_b.end(), {"-o", b.string()});
  REQUIRE(run(args_a).code == 0);
  REQUIRE(run(args_b).code == 0);
  const auto j = read_json(a / "summary.json");
  CHECK(j["initial_conditions"].size() == 2);
  const auto rows = lines(a / "gaussians.csv");
  CHECK(rows.size() == 1 + j["gaussians"].get<std::size_t>());
  CHECK(rows.front() == "gaussian_index,D_g,D_g_+x,D_g_-x,D_g_+z,D_g_-z,D_g_-y,count,s_g,r_g");
  CHECK(slurp(a / "gaussians.csv") == slurp(b / "gaussians.csv"));

  // The serialized config alone reproduces the run.
  const fs::path c = scratch("probe_c");
  REQUIRE(run({"probe", "--config", (a / "config.ini").string(), "-o", c.string()}).code == 0);
  CHECK(slurp(a / "gaussians.csv") == slurp(c / "gaussians.csv"));

  SUBCASE("score reuses the probe") {
    const fs::path s = scratch("score");
    REQUIRE(run({"score", "--scene", data("block_clean.json"), "--poses", data("orbit_poses.json"), "--probe-csv",
                 (a / "gaussians.csv").string(), "-o", s.string()})
                .code == 0);
    const auto sc = lines(s / "scores.csv");
    REQUIRE(sc.size() == 25);
    CHECK(sc.front() == "view_id,visible,S,C,S_per_visible");
    double prev = 1e300;
    for (std::size_t i = 1; i < sc.size(); ++i) {
      std::stringstream ss(sc[i]);
      std::string id, vis, sv;
      std::getline(ss, id, ',');
      std::getline(ss, vis, ',');
      std::getline(ss, sv, ',');
      CHECK(std::stod(sv) <= prev);
      prev = std::stod(sv);
    }
    const fs::path u = scratch("score_unweighted");
    REQUIRE(run({"score", "--scene", data("block_clean.json"), "--poses", data("orbit_poses.json"), "--probe-csv",
                 (a / "gaussians.csv").string(), "-o", u.string(), "--unweighted"})
                .code == 0);
    CHECK(slurp(u / "scores.csv") != slurp(s / "scores.csv"));
  }
}

TEST_CASE("perturbed bundled scene reports larger geometry divergence") {
  const fs::path a = scratch("probe_clean"), b = scratch("probe_perturbed");
  REQUIRE(run({"probe", "--scene", data("block_clean.json"), "-o", a.string()}).code == 0);
  REQUIRE(run({"probe", "--scene", data("block_perturbed.json"), "-o", b.string()}).code == 0);
  const double clean = read_json(a / "summary.json")["geometry_divergence"];
  const double perturbed = read_json(b / "summary.json")["geometry_divergence"];
  CHECK(perturbed > clean);
}

TEST_CASE("nbv runs eight rounds and replays") {
  const auto go = [](const fs::path& out) {
    return run({"nbv", "--scene", data("block_clean.json"), "--poses", data("orbit_poses.json"), "--steps", "30",
                "--ics", "-x", "--proposer", "farthest", "-o", out.string()});
  };
  const fs::path a = scratch("nbv_a"), b = scratch("nbv_b");
  REQUIRE(go(a).code == 0);
  REQUIRE(go(b).code == 0);
  const auto j = read_json(a / "acquisition_log.json");
  CHECK(j["rounds"].size() == 8);
  CHECK(j["acquired"].size() == 10);
  CHECK(j["acquired"] == read_json(b / "acquisition_log.json")["acquired"]);
}

TEST_CASE("sweep with identical geometry") {
  const fs::path out = scratch("sweep");
  REQUIRE(run({"sweep", "--scene", data("block_clean.json"), "--baseline", data("block_clean.json"), "--steps", "5",
               "--ics", "-x", "-o", out.string()})
              .code == 0);
  const auto rows = lines(out / "gap.csv");
  REQUIRE(rows.size() == 11);
  CHECK(rows.front() == "U,Re,dt,D_baseline,D_ours,gap");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::stringstream ss(rows[i]);
    std::vector<std::string> f;
    std::string t;
    while (std::getline(ss, t, ',')) f.push_back(t);
    REQUIRE(f.size() == 6);
    CHECK(std::stod(f[2]) == doctest::Approx(0.006 / std::stod(f[0])));
    CHECK(std::stod(f[5]) == 0.0);
  }
}
