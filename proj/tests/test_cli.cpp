#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "rrdps/cli.h"
#include "rrdps/csv.h"
#include "rrdps/keyrate.h"

using namespace rrdps;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("rrdps_cli_" + std::to_string(std::rand()) + "_" +
                                         std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST_CASE("keyrate command prints one row") {
  const Run r = run_cli({"keyrate", "--eta", "0.01", "--mu", "0.05", "--nu-th", "17", "--M", "10"});
  REQUIRE(r.code == cli::kExitOk);
  const auto lines = split(r.out, '\n');
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == csv::kKeyRateHeader);
  const auto cells = split(lines[1], ',');
  REQUIRE(cells.size() == 14);
  CHECK(cells[0] == "0.01");
  CHECK(cells[1] == "10");
  CHECK(cells[2] == "128");
  CHECK(cells[3] == "pnr");
  CHECK(cells[5] == "0.05");
  CHECK(cells[6] == "17");

  ProtocolParams p;
  p.transmission = 0.01;
  p.mean_photons = 0.05;
  p.photon_threshold = 17;
  p.blocks_per_sequence = 10;
  const KeyRateResult expected = key_rate(p);
  CHECK(std::stod(cells[13]) == expected.key_rate);
  CHECK(std::stod(cells[12]) == expected.key_rate_raw);
  CHECK(std::stod(cells[7]) == expected.detection_rate);
}

TEST_CASE("integer flags accept exact scientific notation") {
  const Run a = run_cli({"keyrate", "--eta", "1e-3", "--mu", "0.1", "--M", "1e3", "--c-d", "1.28e5"});
  const Run b = run_cli({"keyrate", "--eta", "1e-3", "--mu", "0.1", "--M", "1000", "--c-d", "128000"});
  CHECK(a.code == cli::kExitOk);
  CHECK(a.out == b.out);
  CHECK(run_cli({"keyrate", "--eta", "1e-3", "--mu", "0.1", "--M", "2.5"}).code == cli::kExitUsage);
}

TEST_CASE("exit codes") {
  SUBCASE("help") {
    const Run r = run_cli({"--help"});
    CHECK(r.code == cli::kExitOk);
    CHECK(r.out.find("keyrate") != std::string::npos);
    CHECK(run_cli({"curve", "--help"}).code == cli::kExitOk);
  }
  SUBCASE("usage errors") {
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"frobnicate"}).code == cli::kExitUsage);
    CHECK(run_cli({"keyrate", "--eta", "0.1"}).code == cli::kExitUsage);  // --mu missing
    CHECK(run_cli({"keyrate", "--eta", "0.1", "--mu", "0.1", "--bogus", "1"}).code == cli::kExitUsage);
    CHECK(run_cli({"keyrate", "--eta", "abc", "--mu", "0.1"}).code == cli::kExitUsage);
  }
  SUBCASE("invalid parameters name the field") {
    const Run r = run_cli({"keyrate", "--eta", "0.1", "--mu", "0.1", "--L", "1"});
    CHECK(r.code == cli::kExitInvalid);
    CHECK(r.err.find("L") != std::string::npos);
    CHECK(run_cli({"keyrate", "--eta", "1.5", "--mu", "0.1"}).code == cli::kExitInvalid);
    CHECK(run_cli({"keyrate", "--eta", "0.1", "--mu", "0.1", "--nu-th", "128"}).code == cli::kExitInvalid);
    CHECK(run_cli({"keyrate", "--eta", "0.1", "--mu", "0.1", "--detector", "spad"}).code == cli::kExitInvalid);
    CHECK(run_cli({"attack", "--n-measured", "98"}).code == cli::kExitInvalid);
    CHECK(run_cli({"mc-validate", "--eta", "0.1", "--mu", "0.1", "--mode", "x"}).code == cli::kExitInvalid);
    CHECK(run_cli({"curve", "--eta-min", "0"}).code == cli::kExitInvalid);
  }
}

TEST_CASE("output files are written atomically") {
  TempDir dir;
  const fs::path target = dir.path() / "rate.csv";

  const Run ok = run_cli({"keyrate", "--eta", "0.01", "--mu", "0.05", "--out", target.string()});
  REQUIRE(ok.code == cli::kExitOk);
  CHECK(ok.out.empty());
  const std::string written = slurp(target);
  CHECK(written.rfind(csv::kKeyRateHeader, 0) == 0);

  // A failing run leaves neither a new file nor a temporary behind.
  const fs::path other = dir.path() / "bad.csv";
  CHECK(run_cli({"keyrate", "--eta", "2", "--mu", "0.05", "--out", other.string()}).code == cli::kExitInvalid);
  CHECK_FALSE(fs::exists(other));
  CHECK_FALSE(fs::exists(dir.path() / "bad.csv.tmp"));

  // Nor does it clobber an existing result.
  CHECK(run_cli({"keyrate", "--eta", "2", "--mu", "0.05", "--out", target.string()}).code == cli::kExitInvalid);
  CHECK(slurp(target) == written);
}

TEST_CASE("config files") {
  TempDir dir;
  const fs::path config = dir.path() / "point.json";
  {
    std::ofstream f(config);
    f << R"({"command": "keyrate", "eta": 0.01, "mu": 0.05, "M": 10, "detector": "threshold", "c-d": 1000})";
  }
  const Run from_file = run_cli({"--config", config.string()});
  REQUIRE(from_file.code == cli::kExitOk);
  const Run explicit_flags =
      run_cli({"keyrate", "--eta", "0.01", "--mu", "0.05", "--M", "10", "--detector", "threshold", "--c-d", "1000"});
  CHECK(from_file.out == explicit_flags.out);

  // Command-line flags override the file.
  const Run overridden = run_cli({"keyrate", "--config", config.string(), "--M", "20"});
  REQUIRE(overridden.code == cli::kExitOk);
  CHECK(split(split(overridden.out, '\n')[1], ',')[1] == "20");
  CHECK(split(split(overridden.out, '\n')[1], ',')[3] == "threshold");

  const fs::path broken = dir.path() / "broken.json";
  {
    std::ofstream f(broken);
    f << "{ not json";
  }
  CHECK(run_cli({"keyrate", "--config", broken.string()}).code == cli::kExitUsage);
  CHECK(run_cli({"keyrate", "--config", (dir.path() / "missing.json").string()}).code == cli::kExitUsage);
}

TEST_CASE("optimize and curve rows are re-derivable") {
  const Run opt = run_cli({"optimize", "--eta", "0.01", "--M", "100", "--detector", "threshold"});
  REQUIRE(opt.code == cli::kExitOk);
  const auto cells = split(split(opt.out, '\n')[1], ',');
  ProtocolParams p;
  p.detector = Detector::kThreshold;
  p.transmission = std::stod(cells[0]);
  p.blocks_per_sequence = std::stoll(cells[1]);
  p.mean_photons = std::stod(cells[5]);
  p.photon_threshold = std::stoi(cells[6]);
  CHECK(key_rate(p).key_rate == std::stod(cells[13]));

  const Run curve = run_cli({"curve", "--M-list", "1,1000", "--eta-min", "1e-4", "--eta-max", "1e-2",
                             "--eta-per-decade", "2"});
  REQUIRE(curve.code == cli::kExitOk);
  const auto lines = split(curve.out, '\n');
  REQUIRE(lines.size() == 11);
  CHECK(split(lines[1], ',')[1] == "1");
  CHECK(split(lines[10], ',')[1] == "1000");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto c = split(lines[i], ',');
    ProtocolParams q;
    q.transmission = std::stod(c[0]);
    q.blocks_per_sequence = std::stoll(c[1]);
    q.mean_photons = std::stod(c[5]);
    q.photon_threshold = std::stoi(c[6]);
    CHECK(key_rate(q).key_rate == std::stod(c[13]));
  }

  const Run best_M = run_cli({"optimize", "--eta", "0.01", "--M-list", "1,10,100"});
  REQUIRE(best_M.code == cli::kExitOk);
  CHECK(split(split(best_M.out, '\n')[1], ',')[1] == "1");
}

TEST_CASE("stochastic commands are byte-identical across runs") {
  const std::vector<std::string> attack = {"attack", "--trials", "2000", "--seed", "5"};
  const Run a1 = run_cli(attack);
  const Run a2 = run_cli(attack);
  REQUIRE(a1.code == cli::kExitOk);
  CHECK(a1.out == a2.out);
  CHECK(a1.out.rfind(csv::kAttackHeader, 0) == 0);
  CHECK(run_cli({"attack", "--trials", "2000", "--seed", "6"}).out != a1.out);

  const std::vector<std::string> mc = {"mc-validate", "--L", "8", "--M", "4", "--eta", "0.05",
                                       "--mu", "0.02", "--trials", "20000", "--seed", "3"};
  const Run m1 = run_cli(mc);
  const Run m2 = run_cli(mc);
  REQUIRE(m1.code == cli::kExitOk);
  CHECK(m1.out == m2.out);
  const auto lines = split(m1.out, '\n');
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == csv::kMcHeader);
  CHECK(lines[1].rfind("Q,", 0) == 0);
  CHECK(lines[2].rfind("e_bit,", 0) == 0);
}
