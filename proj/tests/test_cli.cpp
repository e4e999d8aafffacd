#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "facegen/eval.hpp"
#include "facegen/pipeline.hpp"
#include "test_util.hpp"

using namespace facegen;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string output;  // stdout and stderr
};

Run run_cli(const std::string& args) {
  const std::string command = std::string("\"") + FACEGEN_CLI + "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* kSmall = R"({"num_images": 3, "face_count_range": [1, 6], "render": {"target_resolution": [320, 240]}})";

}  // namespace

TEST_CASE("config errors exit 2 and name the key") {
  const fs::path dir = test_util::scratch_dir("cli_config");
  std::ofstream(dir / "bad.json") << R"({"seed": 1, "colour": "red"})";
  const Run r = run_cli("generate --config " + (dir / "bad.json").string() + " --out " + (dir / "out").string());
  CHECK(r.status == 2);
  CHECK(r.output.find("/colour") != std::string::npos);
  CHECK(fs::exists(dir / "out") == false);

  CHECK(run_cli("generate --preset s4 --out " + (dir / "x").string()).status == 2);
  CHECK(run_cli("generate --preset s1").status == 2);
  CHECK(run_cli("frobnicate").status == 2);
}

TEST_CASE("asset and io errors") {
  const fs::path dir = test_util::scratch_dir("cli_assets");
  std::ofstream(dir / "cfg.json") << R"({"assets": ")" + (dir / "missing.json").string() + R"("})";
  CHECK(run_cli("generate --config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string()).status == 3);

  std::ofstream(dir / "small.json") << kSmall;
  std::ofstream(dir / "blocker") << "a file where a directory should go";
  CHECK(run_cli("generate --config " + (dir / "small.json").string() + " --out " + (dir / "blocker").string()).status ==
        4);
}

TEST_CASE("validate reports per asset") {
  const Run ok = run_cli("validate");
  CHECK(ok.status == 0);
  CHECK(ok.output.find("FAIL") == std::string::npos);
  CHECK(ok.output.find("PASS model") != std::string::npos);
}

TEST_CASE("preview renders the generated image") {
  const fs::path dir = test_util::scratch_dir("cli_preview");
  std::ofstream(dir / "small.json") << kSmall;
  const std::string cfg = "--config " + (dir / "small.json").string() + " --seed 3";
  REQUIRE(run_cli("generate " + cfg + " --out " + (dir / "data").string()).status == 0);
  REQUIRE(run_cli("preview 2 " + cfg + " --out " + (dir / "p.png").string()).status == 0);
  CHECK(read_png(dir / "p.png") == read_png(dir / "data" / "images" / "000002.png"));
  REQUIRE(run_cli("preview 2 " + cfg + " --overlay --out " + (dir / "o.png").string()).status == 0);
  CHECK_FALSE(read_png(dir / "o.png") == read_png(dir / "p.png"));
  CHECK(run_cli("preview 3 " + cfg + " --out " + (dir / "q.png").string()).status == 2);
}

TEST_CASE("evaluate and stats commands") {
  const fs::path dir = test_util::scratch_dir("cli_eval");
  std::ofstream(dir / "small.json") << kSmall;
  REQUIRE(run_cli("generate --config " + (dir / "small.json").string() + " --out " + (dir / "data").string()).status == 0);
  const fs::path gt = dir / "data" / "annotations" / "wider.txt";
  const auto truth = read_annotations(gt);

  std::vector<Detection> perfect;
  std::size_t counted = 0;
  for (const auto& img : truth)
    for (const auto& f : img.faces) {
      perfect.push_back({img.path, f.box, 1.0});
      counted += !f.ignored;
    }
  {
    std::ofstream out(dir / "perfect.txt");
    write_detections(out, perfect);
  }
  const Run r = run_cli("evaluate " + (dir / "perfect.txt").string() + " " + gt.string() + " --out " + (dir / "rep").string());
  REQUIRE(r.status == 0);
  CHECK(r.output.find("overall,1,") != std::string::npos);
  CHECK(fs::exists(dir / "rep" / "pr_curve.csv"));

  std::ofstream(dir / "empty.txt") << "";
  const Run e = run_cli("evaluate " + (dir / "empty.txt").string() + " " + (dir / "data/annotations/coco.json").string());
  REQUIRE(e.status == 0);
  CHECK(e.output.find("overall,0," + std::to_string(counted) + ",0,0," + std::to_string(counted)) != std::string::npos);

  // noisy predictions: CLI and library agree
  test_util::Rng rng(3);
  std::vector<Detection> noisy;
  for (auto d : perfect) {
    d.box.x += rng.uniform_int(-3, 3);
    d.box.w += rng.uniform_int(-2, 2);
    d.score = rng.uniform(0, 1);
    noisy.push_back(d);
  }
  {
    std::ofstream out(dir / "noisy.txt");
    write_detections(out, noisy);
  }
  const Run n = run_cli("evaluate " + (dir / "noisy.txt").string() + " " + gt.string() + " --iou 0.6");
  REQUIRE(n.status == 0);
  std::ostringstream expected;
  write_report_csv(expected, evaluate(read_detections((dir / "noisy.txt").string()), ground_truth_from(truth), 0.6));
  CHECK(n.output == expected.str());

  const Run s = run_cli("stats " + gt.string());
  CHECK(s.status == 0);
  CHECK(s.output == slurp(dir / "data" / "stats.csv"));

  std::ofstream(dir / "broken.txt") << "images/000000.png\n1\n1 2 3\n";
  const Run b = run_cli("evaluate " + (dir / "broken.txt").string() + " " + gt.string());
  CHECK(b.status != 0);
  CHECK(b.output.find("broken.txt:3") != std::string::npos);
}
