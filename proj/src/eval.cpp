#include "facegen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "facegen/errors.hpp"

namespace facegen {

namespace {

struct Scope {
  std::optional<ScaleBin> bin;
};

struct ScopeResult {
  EvalCounts counts;
  std::vector<PrPoint> curve;
};

ScopeResult score_scope(std::span<const Detection> detections, std::span<const GroundTruthBox> truth,
                        double threshold, Scope scope) {
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_image;
  std::vector<bool> ignored(truth.size());
  ScopeResult result;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    by_image[truth[i].image].push_back(i);
    ignored[i] = truth[i].ignored || (scope.bin && scale_bin(truth[i].box.h).bin != *scope.bin);
    if (!ignored[i]) ++result.counts.num_gt;
  }

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return detections[a].score > detections[b].score; });

  std::vector<bool> matched(truth.size(), false);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Detection& det = detections[order[k]];
    std::optional<std::size_t> best;
    double best_iou = threshold;
    if (const auto it = by_image.find(det.image); it != by_image.end()) {
      for (std::size_t g : it->second) {
        if (matched[g]) continue;
        const double o = iou(det.box, truth[g].box);
        if (o > best_iou || (!best && o >= best_iou)) {
          best = g;
          best_iou = o;
        }
      }
    }
    if (best) {
      matched[*best] = true;
      if (!ignored[*best]) ++result.counts.tp;
    } else {
      ++result.counts.fp;
    }
    // Tied scores share one operating point.
    const bool group_end = k + 1 == order.size() || detections[order[k + 1]].score != det.score;
    const std::size_t counted = result.counts.tp + result.counts.fp;
    if (!group_end || counted == 0) continue;
    const double tp = static_cast<double>(result.counts.tp);
    result.curve.push_back({result.counts.num_gt > 0 ? tp / result.counts.num_gt : 0.0, tp / counted});
  }
  result.counts.fn = result.counts.num_gt - result.counts.tp;
  return result;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

double to_number(const std::string& token, const std::string& source, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(source, line, "bad number '" + token + "'");
}

void write_ap(std::ostream& out, std::optional<double> ap) {
  if (ap) out << std::setprecision(17) << *ap;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double average_precision(std::span<const PrPoint> curve) {
  double ap = 0.0;
  double envelope = 0.0;
  // Walk backwards so `envelope` is the best precision at any recall >= r.
  for (std::size_t i = curve.size(); i-- > 0;) {
    envelope = std::max(envelope, curve[i].precision);
    const double prev = i > 0 ? curve[i - 1].recall : 0.0;
    ap += (curve[i].recall - prev) * envelope;
  }
  return ap;
}

EvalReport evaluate(std::span<const Detection> detections, std::span<const GroundTruthBox> ground_truth,
                    double iou_threshold) {
  EvalReport report;
  ScopeResult overall = score_scope(detections, ground_truth, iou_threshold, {});
  if (overall.counts.num_gt == 0) throw EmptyGroundTruthError("ground truth holds no counted (non-ignored) faces");
  report.counts = overall.counts;
  report.ap = average_precision(overall.curve);
  report.pr_curve = std::move(overall.curve);
  for (std::size_t b = 0; b < 3; ++b) {
    ScopeResult r = score_scope(detections, ground_truth, iou_threshold, {static_cast<ScaleBin>(b)});
    report.bins[b].counts = r.counts;
    if (r.counts.num_gt > 0) report.bins[b].ap = average_precision(r.curve);
  }
  return report;
}

std::vector<GroundTruthBox> ground_truth_from(std::span<const AnnotatedImage> images) {
  std::vector<GroundTruthBox> out;
  for (const AnnotatedImage& image : images)
    for (const FaceAnnotation& f : image.faces) out.push_back({image.path, f.box, f.ignored});
  return out;
}

std::vector<Detection> parse_detections(std::istream& in, const std::string& source) {
  std::vector<Detection> out;
  std::string line;
  int line_no = 0;
  auto next = [&](std::string& text) {
    while (std::getline(in, line)) {
      ++line_no;
      text = trim(line);
      if (!text.empty()) return true;
    }
    return false;
  };
  std::string text;
  while (next(text)) {
    const std::string image = text;
    if (!next(text)) throw ParseError(source, line_no, "missing detection count after '" + image + "'");
    const double count = to_number(text, source, line_no);
    if (count < 0 || count != std::floor(count)) throw ParseError(source, line_no, "bad detection count '" + text + "'");
    for (long i = 0; i < static_cast<long>(count); ++i) {
      if (!next(text)) throw ParseError(source, line_no, "expected " + std::to_string(static_cast<long>(count)) +
                                                             " detections for '" + image + "'");
      std::istringstream fields(text);
      std::vector<std::string> tokens;
      for (std::string t; fields >> t;) tokens.push_back(t);
      if (tokens.size() != 5) throw ParseError(source, line_no, "detection line needs `x y w h score`");
      Detection d;
      d.image = image;
      d.box = {to_number(tokens[0], source, line_no), to_number(tokens[1], source, line_no),
               to_number(tokens[2], source, line_no), to_number(tokens[3], source, line_no)};
      d.score = to_number(tokens[4], source, line_no);
      if (!(d.box.w > 0.0 && d.box.h > 0.0)) throw ParseError(source, line_no, "detection width and height must be positive");
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<Detection> read_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_detections(in, path);
}

void write_detections(std::ostream& out, std::span<const Detection> detections) {
  std::vector<std::string> images;
  std::map<std::string, std::vector<const Detection*>> grouped;
  for (const Detection& d : detections) {
    if (!grouped.contains(d.image)) images.push_back(d.image);
    grouped[d.image].push_back(&d);
  }
  out << std::setprecision(17);
  for (const std::string& image : images) {
    out << image << '\n' << grouped[image].size() << '\n';
    for (const Detection* d : grouped[image])
      out << d->box.x << ' ' << d->box.y << ' ' << d->box.w << ' ' << d->box.h << ' ' << d->score << '\n';
  }
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  auto row = [&](std::string_view scope, std::optional<double> ap, const EvalCounts& c) {
    out << scope << ',';
    write_ap(out, ap);
    out << ',' << c.num_gt << ',' << c.tp << ',' << c.fp << ',' << c.fn << '\n';
  };
  out << "scope,ap,num_gt,tp,fp,fn\n";
  row("overall", report.ap, report.counts);
  for (std::size_t b = 0; b < 3; ++b) row(to_string(static_cast<ScaleBin>(b)), report.bins[b].ap, report.bins[b].counts);
}

void write_pr_csv(std::ostream& out, const EvalReport& report) {
  out << "recall,precision\n" << std::setprecision(17);
  for (const PrPoint& p : report.pr_curve) out << p.recall << ',' << p.precision << '\n';
}

}  // namespace facegen
