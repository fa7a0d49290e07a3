#include "nnmon/cli.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run nnmon_run(std::vector<std::string> args) {
  args.insert(args.begin(), "nnmon");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = nnmon::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Value after "key: " on its own line.
double field(const std::string& text, const std::string& key) {
  const auto pos = text.find("\n" + key + ": ");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size() + 3));
}

const std::string kModel = nnmon::testing::fixture("mnist_mlp.json");
const std::string kImages = nnmon::testing::data_file("mnist/t10k-images-idx3-ubyte.gz");
const std::string kLabels = nnmon::testing::data_file("mnist/t10k-labels-idx1-ubyte.gz");
const std::string kOodImages = nnmon::testing::data_file("fashion/t10k-images-idx3-ubyte.gz");
const std::string kOodLabels = nnmon::testing::data_file("fashion/t10k-labels-idx1-ubyte.gz");

}  // namespace

TEST_CASE("box monitor build is reproducible byte for byte") {
  const auto dir = nnmon::testing::scratch_dir("cli_build");
  const auto a = (dir / "a.mon").string();
  const auto b = (dir / "b.mon").string();
  for (const auto& path : {a, b}) {
    const auto r = nnmon_run({"monitor", "build", "--model", kModel, "--images", kImages, "--labels", kLabels,
                              "--range", "0:500", "--kind", "box", "--layer", "2", "--delta", "0.05", "--out",
                              path});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("build_rejected: 0") != std::string::npos);
    CHECK(r.err.find("delta") != std::string::npos);
  }
  CHECK(read_text(a) == read_text(b));
  CHECK_FALSE(read_text(a).empty());

  SUBCASE("identical in and ood sets give chance-level AUROC") {
    const auto prefix = (dir / "eval_").string();
    const auto r = nnmon_run({"monitor", "eval", "--model", kModel, "--monitor", a, "--in-images", kImages,
                              "--in-labels", kLabels, "--in-range", "500:800", "--ood-images", kImages,
                              "--ood-labels", kLabels, "--ood-range", "500:800", "--out-prefix", prefix});
    REQUIRE(r.code == 0);
    CHECK(field(r.out, "auroc") == doctest::Approx(0.5).epsilon(0.04));
    CHECK(r.out.find("in-dist |") != std::string::npos);
    CHECK(read_text(prefix + "samples.csv").rfind("dataset,index,", 0) == 0);
    CHECK_FALSE(read_text(prefix + "summary.csv").empty());
  }

  SUBCASE("verify against an unsafe output set") {
    const auto unsafe = (dir / "unsafe.json").string();
    std::ofstream(unsafe) << R"({"constraints": [{"a": [0,0,0,0,0,0,0,0,0,0], "b": 1}]})";
    const auto r = nnmon_run({"verify", "--model", kModel, "--monitor", a, "--unsafe", unsafe});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("verdict: safe-verified") != std::string::npos);
    std::ofstream(unsafe) << R"({"constraints": [{"a": [1,0,0,0,0,0,0,0,0,0], "b": -1000}]})";
    const auto u = nnmon_run({"verify", "--model", kModel, "--monitor", a, "--unsafe", unsafe});
    REQUIRE(u.code == 0);
    CHECK(u.out.find("verdict: unknown") != std::string::npos);
  }
}

TEST_CASE("score command writes one row per sample") {
  const auto out = (nnmon::testing::scratch_dir("cli_score") / "odin.csv").string();
  const auto r = nnmon_run({"score", "--model", kModel, "--images", kImages, "--labels", kLabels, "--range",
                            "0:50", "--method", "odin", "--T", "3", "--tau", "0.6", "--out", out, "--ood-images",
                            kOodImages, "--ood-labels", kOodLabels, "--ood-range", "0:50"});
  REQUIRE(r.code == 0);
  const std::string csv = read_text(out);
  CHECK(csv.rfind("index,label,predicted,confidence,score,verdict\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  CHECK(r.out.find("auroc: ") != std::string::npos);
  CHECK(r.err.find("T") != std::string::npos);
}

TEST_CASE("report command") {
  const auto r = nnmon_run({"report", "--model", kModel, "--in-images", kImages, "--in-labels", kLabels,
                            "--in-range", "0:200", "--ood-images", kOodImages, "--ood-labels", kOodLabels,
                            "--ood-range", "0:200", "--temperatures", "1,3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("ood_overconfident") != std::string::npos);
}

TEST_CASE("exit codes") {
  SUBCASE("unknown option is a configuration error") {
    CHECK(nnmon_run({"score", "--model", kModel, "--bogus"}).code == nnmon::cli::kExitConfig);
  }
  SUBCASE("invalid hyperparameter") {
    const auto r = nnmon_run({"score", "--model", kModel, "--images", kImages, "--labels", kLabels, "--range",
                              "0:5", "--T", "-1"});
    CHECK(r.code == nnmon::cli::kExitConfig);
  }
  SUBCASE("bad pattern kappa") {
    const auto r = nnmon_run({"monitor", "build", "--model", kModel, "--images", kImages, "--labels", kLabels,
                              "--range", "0:20", "--kind", "pattern", "--layer", "2", "--kappa", "1000",
                              "--out", (nnmon::testing::scratch_dir("cli_exit") / "p.mon").string()});
    CHECK(r.code == nnmon::cli::kExitConfig);
  }
  SUBCASE("missing data file") {
    const auto r = nnmon_run({"score", "--model", kModel, "--images", "/nonexistent/img", "--labels", kLabels});
    CHECK(r.code == nnmon::cli::kExitData);
    CHECK_FALSE(r.err.empty());
  }
  SUBCASE("malformed model") {
    const auto bad = (nnmon::testing::scratch_dir("cli_exit") / "bad.json").string();
    std::ofstream(bad) << "{\"format\": \"nnmon-weights\"";
    const auto r = nnmon_run({"score", "--model", bad, "--images", kImages, "--labels", kLabels});
    CHECK(r.code == nnmon::cli::kExitData);
  }
}
