#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "stabsel/dataset.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() { return STABSEL_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("stabsel_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("datagen writes csv + sidecar; round-trip matches generate_dataset") {
  TempDir tmp;
  const std::string prefix = (tmp.path / "d").string();
  REQUIRE(run("datagen --n 50 --p 25 --s0 5 --snr 5 --seed 77 --out " + prefix) == 0);

  const std::string csv = slurp(prefix + ".csv");
  // Header + 50 rows.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  CHECK(csv.rfind("x1,x2,", 0) == 0);

  const stabsel::Dataset back = stabsel::read_dataset_csv(prefix + ".csv", prefix + ".json");
  const stabsel::Dataset direct = stabsel::generate_dataset(50, 25, 5, 5.0, 77);
  CHECK(back.support == direct.support);
  for (int i = 0; i < 50; ++i) CHECK(back.y[i] == doctest::Approx(direct.y[i]).epsilon(1e-14));
}

TEST_CASE("datagen column-zero attack lists attacked rows in the sidecar") {
  TempDir tmp;
  const std::string prefix = (tmp.path / "a").string();
  REQUIRE(run("datagen --n 50 --p 25 --s0 5 --seed 3 --attack column-zero --rows 2 --out " +
              prefix) == 0);
  const nlohmann::json side = nlohmann::json::parse(slurp(prefix + ".json"));
  REQUIRE(side.contains("attack"));
  CHECK(side["attack"]["scheme"] == "column-zero");
  CHECK(side["attack"]["rows"].size() == 2);
}

TEST_CASE("bdp echoes K and reproduces fixtures") {
  TempDir tmp;
  const std::string out = (tmp.path / "r.json").string();

  // Worked-example parameters: B=100, max_pi_plus - pi_thr = 0.2 -> K = 20.
  REQUIRE(run("bdp --rule threshold --resampling bootstrap --n 100 --n-sub 50 --B 100 --c 0.5 "
              "--m 10 --pi-thr 0.5 --max-pi-plus 0.7 --out " + out) == 0);
  nlohmann::json r = nlohmann::json::parse(slurp(out));
  CHECK(r["broken_model_threshold"] == 20);
  CHECK(r["method"] == "exact");

  // m = 0 -> value 0.
  REQUIRE(run("bdp --rule threshold --resampling subsample --n 50 --n-sub 25 --B 100 --c 0.5 "
              "--m 0 --pi-thr 0.5 --max-pi-plus 0.8 --out " + out) == 0);
  r = nlohmann::json::parse(slurp(out));
  CHECK(r["value"] == 0.0);

  // Enumerated 25/36 fixture.
  REQUIRE(run("bdp --rule threshold --resampling subsample --n 4 --n-sub 2 --B 2 --c 0.5 "
              "--m 2 --pi-thr 0.5 --max-pi-plus 1.0 --out " + out) == 0);
  r = nlohmann::json::parse(slurp(out));
  CHECK(r["value"].get<double>() == doctest::Approx(25.0 / 36.0).epsilon(1e-9));
}

TEST_CASE("bdp rejects incomplete queries with nonzero exit") {
  CHECK(run("bdp --rule rank --n 10 --n-sub 5 --B 4 --c 0.5 --m 1") != 0);  // no rank context
  CHECK(run("bdp --rule nonsense --n 10 --n-sub 5 --B 4 --c 0.5") != 0);
}

TEST_CASE("surplus: K=0 ratio 1; trimming uses the adjusted count") {
  TempDir tmp;
  const std::string out = (tmp.path / "s.json").string();
  REQUIRE(run("surplus --rule threshold --resampling bootstrap --n 20 --n-sub 8 --B 10 --c 0.5 "
              "--m 4 --pi-thr 0.5 --max-pi-plus 0.5 --out " + out) == 0);
  nlohmann::json s = nlohmann::json::parse(slurp(out));
  REQUIRE(s["defined"] == true);
  CHECK(s["value"].get<double>() == doctest::Approx(1.0));

  // Composition: the surplus equals the ratio of two bdp calls with the
  // broken-model count overridden (numerator K = ceil(10*0.4) = 4, baseline 0).
  REQUIRE(run("surplus --rule threshold --resampling bootstrap --n 20 --n-sub 8 --B 10 --c 0.5 "
              "--m 4 --pi-thr 0.5 --max-pi-plus 0.9 --out " + out) == 0);
  s = nlohmann::json::parse(slurp(out));
  const std::string bdp_base = "bdp --rule threshold --resampling bootstrap --n 20 --n-sub 8 "
                               "--B 10 --c 0.5 --m 4 --pi-thr 0.5 --max-pi-plus 0.9 ";
  const std::string num_path = (tmp.path / "num.json").string();
  const std::string den_path = (tmp.path / "den.json").string();
  REQUIRE(run(bdp_base + "--k-override 4 --out " + num_path) == 0);
  REQUIRE(run(bdp_base + "--k-override 0 --out " + den_path) == 0);
  const double num = nlohmann::json::parse(slurp(num_path))["value"].get<double>();
  const double den = nlohmann::json::parse(slurp(den_path))["value"].get<double>();
  CHECK(s["value"].get<double>() == doctest::Approx(num / den).epsilon(1e-12));

  // Trimming flags replace the numerator count by the adjusted one:
  // 2 + ceil(8 * 4 / 10) = 6.
  REQUIRE(run("surplus --rule threshold --resampling bootstrap --n 20 --n-sub 8 --B 10 --c 0.5 "
              "--m 4 --pi-thr 0.5 --max-pi-plus 0.9 --gamma 0.2 --k-gamma 2 --out " + out) == 0);
  s = nlohmann::json::parse(slurp(out));
  REQUIRE(s["defined"] == true);
  CHECK(s["value"].get<double>() <= 1.0 + 1e-12);
  REQUIRE(run(bdp_base + "--k-override 6 --out " + num_path) == 0);
  const double trimmed_num = nlohmann::json::parse(slurp(num_path))["value"].get<double>();
  CHECK(s["value"].get<double>() == doctest::Approx(trimmed_num / den).epsilon(1e-12));
}

TEST_CASE("simulate: determinism across reruns and worker counts, resume completes") {
  TempDir tmp;
  const std::string cfg_path = (tmp.path / "cfg.json").string();
  std::ofstream(cfg_path) << R"({
    "schema_version": 1,
    "master_seed": 77,
    "replications": 4,
    "workers": 1,
    "scenarios": [
      {"name": "mini", "n": 30, "p": 10, "s0": 3, "snr": 5.0, "m_tilde": 2, "n_sub": 15,
       "rule": {"kind": "rank", "q": 3},
       "methods": [{"label": "SS", "B": 20, "gamma": 0.0},
                   {"label": "T", "B": 20, "gamma": 0.5}]}
    ]
  })";

  const std::string out1 = (tmp.path / "o1").string();
  const std::string out2 = (tmp.path / "o2").string();
  const std::string out3 = (tmp.path / "o3").string();
  REQUIRE(run("simulate --quiet --config " + cfg_path + " --out " + out1) == 0);
  REQUIRE(run("simulate --quiet --config " + cfg_path + " --out " + out2 + " --workers 8") == 0);
  REQUIRE(run("simulate --quiet --config " + cfg_path + " --out " + out3) == 0);

  CHECK(slurp(out1 + "/results.csv") == slurp(out2 + "/results.csv"));
  CHECK(slurp(out1 + "/results.csv") == slurp(out3 + "/results.csv"));
  CHECK(slurp(out1 + "/summary.csv") == slurp(out2 + "/summary.csv"));

  // Resume: drop the last replication's rows, rerun with --resume, compare.
  const std::string full = slurp(out1 + "/results.csv");
  std::string truncated;
  std::istringstream lines(full);
  std::string line;
  while (std::getline(lines, line))
    if (line.rfind("mini,SS,3", 0) != 0 && line.rfind("mini,T,3", 0) != 0)
      truncated += line + "\n";
  std::ofstream(out1 + "/results.csv") << truncated;
  REQUIRE(run("simulate --quiet --config " + cfg_path + " --out " + out1 + " --resume") == 0);
  const std::string resumed = slurp(out1 + "/results.csv");
  CHECK(std::count(resumed.begin(), resumed.end(), '\n') ==
        std::count(full.begin(), full.end(), '\n'));
  CHECK(slurp(out1 + "/summary.csv") == slurp(out2 + "/summary.csv"));

  // Invalid config: nonzero exit.
  const std::string bad_path = (tmp.path / "bad.json").string();
  std::ofstream(bad_path) << R"({"schema_version": 1, "scenarios": [], "bogus": true})";
  CHECK(run("simulate --config " + bad_path + " --out " + out1) != 0);
}
