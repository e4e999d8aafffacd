#include <doctest.h>

#include <cmath>
#include <sstream>

#include "facegen/errors.hpp"
#include "facegen/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace facegen;

namespace {

using Instance = test_util::EvalInstance;
using test_util::random_instance;

}  // namespace

TEST_CASE("IoU") {
  const Box a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box{10, 10, 10, 10}) == 0.0);
  CHECK(iou(a, Box{5, 0, 10, 10}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("hand-computed PR example") {
  const std::vector<GroundTruthBox> gt{{"a", {0, 0, 10, 10}, false}};
  const std::vector<Detection> one{{"a", {0, 0, 10, 10}, 1.0}};
  CHECK(evaluate(one, gt).ap == 1.0);

  const std::vector<Detection> two{{"a", {0, 0, 10, 10}, 0.9}, {"a", {50, 50, 10, 10}, 0.1}};
  const EvalReport r = evaluate(two, gt);
  REQUIRE(r.pr_curve.size() == 2);
  CHECK(r.pr_curve[0].recall == 1.0);
  CHECK(r.pr_curve[0].precision == 1.0);
  CHECK(r.pr_curve[1].recall == 1.0);
  CHECK(r.pr_curve[1].precision == 0.5);
  CHECK(r.ap == 1.0);
  CHECK(r.counts.tp == 1);
  CHECK(r.counts.fp == 1);
  CHECK(r.counts.fn == 0);
}

TEST_CASE("evaluation matches the brute-force oracle") {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 200; ++seed) {
    const Instance inst = random_instance(seed);
    if (std::none_of(inst.gts.begin(), inst.gts.end(), [](const auto& g) { return !g.ignored; })) {
      CHECK_THROWS_AS(evaluate(inst.dets, inst.gts), EmptyGroundTruthError);
      continue;
    }
    ++checked;
    for (double thr : {0.3, 0.5, 0.7}) {
      const EvalReport r = evaluate(inst.dets, inst.gts, thr);
      CHECK(std::abs(r.ap - oracle::brute_force_ap(inst.dets, inst.gts, thr)) < 1e-9);
      for (std::size_t i = 1; i < r.pr_curve.size(); ++i) CHECK(r.pr_curve[i].recall >= r.pr_curve[i - 1].recall);
      CHECK(r.counts.tp + r.counts.fn == r.counts.num_gt);
    }
  }
}

TEST_CASE("evaluation invariants") {
  const Instance inst = random_instance(1234);
  REQUIRE(!inst.gts.empty());
  const double base = evaluate(inst.dets, inst.gts).ap;

  Instance scaled = inst;
  for (auto& d : scaled.dets) d.score = std::exp(3.0 * d.score) - 7.0;
  CHECK(evaluate(scaled.dets, scaled.gts).ap == doctest::Approx(base).epsilon(1e-12));

  Instance extra = inst;
  extra.dets.push_back({inst.gts[0].image, {500, 500, 10, 10}, -1.0});
  CHECK(evaluate(extra.dets, extra.gts).ap <= base + 1e-12);

  const std::vector<GroundTruthBox> gt{{"a", {0, 0, 20, 20}, false}};
  const std::vector<Detection> dup{{"a", {0, 0, 20, 20}, 0.9}, {"a", {0, 0, 20, 20}, 0.8}, {"a", {1, 0, 20, 20}, 0.7}};
  const EvalReport r = evaluate(dup, gt);
  CHECK(r.counts.tp == 1);
  CHECK(r.counts.fp == 2);

  const std::vector<Detection> unknown{{"zzz", {0, 0, 20, 20}, 0.9}};
  CHECK(evaluate(unknown, gt).counts.fp == 1);
  CHECK(evaluate({}, gt).ap == 0.0);
  CHECK(evaluate({}, gt).counts.fn == 1);
}

TEST_CASE("ignored ground truth and per-bin scores") {
  const std::vector<GroundTruthBox> gt{{"a", {0, 0, 20, 20}, false}, {"a", {100, 100, 20, 20}, true}};
  const std::vector<Detection> dets{{"a", {100, 100, 20, 20}, 0.9}, {"a", {0, 0, 20, 20}, 0.5}};
  const EvalReport r = evaluate(dets, gt);
  CHECK(r.ap == 1.0);
  CHECK(r.counts.fp == 0);
  CHECK(r.counts.num_gt == 1);

  // single-bin dataset: bin AP equals overall AP
  const Instance inst = random_instance(77);
  std::vector<GroundTruthBox> medium;
  for (auto g : inst.gts) {
    g.box.h = 40;
    medium.push_back(g);
  }
  std::vector<Detection> dets2;
  for (auto d : inst.dets) {
    d.box.h = 40;
    dets2.push_back(d);
  }
  const EvalReport m = evaluate(dets2, medium);
  REQUIRE(m.bins[1].ap.has_value());
  CHECK(*m.bins[1].ap == doctest::Approx(m.ap).epsilon(1e-12));
  CHECK_FALSE(m.bins[0].ap.has_value());
  CHECK_FALSE(m.bins[2].ap.has_value());
}

TEST_CASE("prediction files") {
  const std::vector<Detection> dets{{"images/000000.png", {1, 2, 30, 40}, 0.75}, {"images/000001.png", {3, 4, 5.5, 6}, 0.1}};
  std::ostringstream out;
  write_detections(out, dets);
  std::istringstream in(out.str());
  const auto back = parse_detections(in, "pred.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[1].box == dets[1].box);
  CHECK(back[0].score == 0.75);

  std::istringstream bad("images/000000.png\n2\n1 2 3 4 0.5\n1 2 0 4 0.5\n");
  try {
    parse_detections(bad, "bad.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  std::istringstream short_line("images/000000.png\n1\n1 2 3 4\n");
  CHECK_THROWS_AS(parse_detections(short_line, "short.txt"), ParseError);
}

TEST_CASE("report CSV") {
  const std::vector<GroundTruthBox> gt{{"a", {0, 0, 20, 20}, false}};
  const std::vector<Detection> dets{{"a", {0, 0, 20, 20}, 0.9}};
  std::ostringstream csv;
  write_report_csv(csv, evaluate(dets, gt));
  CHECK(csv.str().rfind("scope,ap,num_gt,tp,fp,fn\noverall,1,1,1,0,0\n", 0) == 0);
}
