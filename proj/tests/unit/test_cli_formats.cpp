#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "palms/eval.hpp"

using namespace palms;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("palms_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + PALMS_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SuiteSpec tiny_suite() {
  SuiteSpec s;
  WorldSpec w;
  w.generator = WorldGenerator::rooms_off_corridor;
  w.extent_x = 36.0;
  w.extent_y = 18.0;
  w.seed = 4;
  s.worlds = {w};
  s.starts_per_world = 1;
  s.paths_per_start = 2;
  s.path_length = 30.0;
  s.seed = 4;
  return s;
}

}  // namespace

TEST_CASE("scenario files round trip") {
  const fs::path dir = scratch("manifest");
  const auto scs = build_suite(tiny_suite());
  const fs::path manifest = write_scenarios(scs, dir);
  CHECK(fs::exists(manifest));
  const auto back = load_manifest(manifest);
  REQUIRE(back.size() == scs.size());
  for (std::size_t i = 0; i < scs.size(); ++i) {
    CHECK(back[i].id == scs[i].id);
    CHECK(save_floorplan(back[i].plan) == save_floorplan(scs[i].plan));
    CHECK(save_observation(back[i].observation) == save_observation(scs[i].observation));
    CHECK(save_odometry(back[i].odometry) == save_odometry(scs[i].odometry));
    CHECK(save_truth(back[i].truth) == save_truth(scs[i].truth));
  }

  // A trial on the reloaded scenario is the same trial.
  PipelineParams params;
  params.filter.n_particles = 300;
  const auto a = prepare_scenario(std::make_shared<const Scenario>(scs[0]), params);
  const auto b = prepare_scenario(std::make_shared<const Scenario>(back[0]), params);
  CHECK(records_csv(std::vector<TrialRecord>{run_trial(a, Method::palms, params, 3)}) ==
        records_csv(std::vector<TrialRecord>{run_trial(b, Method::palms, params, 3)}));
  fs::remove_all(dir);
}

TEST_CASE("manifest errors") {
  const fs::path dir = scratch("bad_manifest");
  std::ofstream(dir / "m.json") << R"({"format": "palms-manifest/1", "scenarios": [{"id": "x"}]})";
  CHECK_THROWS_AS(load_manifest(dir / "m.json"), ParseError);
  std::ofstream(dir / "n.json") << R"({"format": "palms-manifest/0", "scenarios": []})";
  CHECK_THROWS_AS(load_manifest(dir / "n.json"), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("parameter description lists every setting") {
  const std::string d = describe(PipelineParams{});
  for (const char* key : {"alpha", "sigma", "ces_shrink", "resolution", "orientations", "top_fraction",
                          "particles", "bandwidth", "label_dominance", "cluster_dominance"}) {
    CHECK(d.find(key) != std::string::npos);
  }
}

TEST_CASE("command line end to end") {
  const fs::path dir = scratch("cli");
  const fs::path log = dir / "log.txt";
  REQUIRE(run_cli("synth --out \"" + (dir / "suite").string() +
                      "\" --generator rooms_off_corridor --extent-x 36 --extent-y 18 --starts 1 --paths 1 --length 30",
                  log) == 0);
  const fs::path manifest = dir / "suite" / "manifest.json";
  REQUIRE(fs::exists(manifest));
  const auto scs = load_manifest(manifest);
  REQUIRE(scs.size() == 1);

  const fs::path bench = dir / "bench";
  CHECK(run_cli("bench --manifest \"" + manifest.string() + "\" --out \"" + bench.string() +
                    "\" --trials 2 --particles 200 --workers 1",
                log) == 0);
  CHECK(fs::exists(bench / "records.csv"));
  CHECK(fs::exists(bench / "summary.csv"));
  CHECK(slurp(log).find("palms") != std::string::npos);

  // Scenario files sit next to the manifest.
  fs::path plan_file, scan_file, odo_file;
  for (const auto& e : fs::directory_iterator(dir / "suite")) {
    const std::string n = e.path().filename().string();
    if (n.ends_with(".plan.json")) plan_file = e.path();
    if (n.ends_with(".scan.json")) scan_file = e.path();
    if (n.ends_with(".odo.csv")) odo_file = e.path();
  }
  REQUIRE(!plan_file.empty());
  CHECK(run_cli("heatmap --plan \"" + plan_file.string() + "\" --scan \"" + scan_file.string() +
                    "\" --out \"" + (dir / "hm").string() + "\"",
                log) == 0);
  CHECK(fs::exists(dir / "hm" / "heatmap_report.txt"));
  // Exit 3 reports a trial that ran to the end without converging.
  const int rc = run_cli("localize --plan \"" + plan_file.string() + "\" --scan \"" + scan_file.string() +
                             "\" --odometry \"" + odo_file.string() + "\" --particles 300 --timeline \"" +
                             (dir / "timeline.csv").string() + "\"",
                         log);
  CHECK((rc == 0 || rc == 3));
  CHECK(slurp(dir / "timeline.csv").rfind("step,", 0) == 0);

  // Bad input: a plan with a zero-length wall.
  std::ofstream(dir / "bad.plan.json")
      << R"({"format": "palms-floorplan/1", "walls": [{"a": [0, 0], "b": [0, 0]}]})";
  CHECK(run_cli("heatmap --plan \"" + (dir / "bad.plan.json").string() + "\" --scan \"" +
                    scan_file.string() + "\" --out \"" + (dir / "hm2").string() + "\"",
                log) != 0);
  CHECK(slurp(log).find("walls[0]") != std::string::npos);
  fs::remove_all(dir);
}
