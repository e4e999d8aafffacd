#pragma once

// Detection scoring: IoU matching, precision/recall and average precision,
// overall and per scale bin.

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facegen/annotate.hpp"
#include "facegen/box.hpp"

namespace facegen {

struct Detection {
  std::string image;  // image path as written in the annotation files
  Box box;
  double score = 0.0;
};

struct GroundTruthBox {
  std::string image;
  Box box;
  bool ignored = false;
};

double iou(const Box& a, const Box& b);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct EvalCounts {
  std::size_t num_gt = 0;  // non-ignored ground truth
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct BinReport {
  std::optional<double> ap;  // nullopt when the bin holds no ground truth
  EvalCounts counts;
};

struct EvalReport {
  double ap = 0.0;
  EvalCounts counts;
  std::vector<PrPoint> pr_curve;  // one point per distinct score, descending
  std::array<BinReport, 3> bins;  // indexed by ScaleBin
};

// Per image, detections in descending score order each take the unmatched
// ground truth of highest IoU >= threshold (ties to the lower index). A match
// on an ignored box is neither TP nor FP. AP is the area under the
// all-points interpolated PR curve. Per-bin scores treat other bins' ground
// truth as ignored. Throws EmptyGroundTruthError without any counted truth.
EvalReport evaluate(std::span<const Detection> detections, std::span<const GroundTruthBox> ground_truth,
                    double iou_threshold = 0.5);

// Area under the all-points interpolated curve.
double average_precision(std::span<const PrPoint> curve);

std::vector<GroundTruthBox> ground_truth_from(std::span<const AnnotatedImage> images);

// Per image: path line, count line, then `x y w h score` lines.
std::vector<Detection> parse_detections(std::istream& in, const std::string& source);
std::vector<Detection> read_detections(const std::string& path);
void write_detections(std::ostream& out, std::span<const Detection> detections);

// scope,ap,num_gt,tp,fp,fn for overall and each bin.
void write_report_csv(std::ostream& out, const EvalReport& report);
// recall,precision
void write_pr_csv(std::ostream& out, const EvalReport& report);

}  // namespace facegen
