#include "xrt/metrics.hpp"

#include <cmath>

namespace xrt {

double accuracy(std::span<const LabelIndex> preds, std::span<const LabelIndex> golds) {
  if (preds.size() != golds.size()) throw Error(ErrorCode::LengthMismatch, "accuracy: length mismatch");
  if (preds.empty()) throw Error(ErrorCode::Empty, "accuracy: no predictions");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == golds[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

MetricsReport macro_f1(std::span<const LabelIndex> preds, std::span<const LabelIndex> golds,
                       std::size_t num_classes) {
  if (preds.size() != golds.size()) throw Error(ErrorCode::LengthMismatch, "macro_f1: length mismatch");
  if (preds.empty()) throw Error(ErrorCode::Empty, "macro_f1: no predictions");

  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= num_classes || golds[i] >= num_classes)
      throw Error(ErrorCode::DimensionMismatch, "macro_f1: label outside the label space");
    if (preds[i] == golds[i]) {
      ++tp[preds[i]];
    } else {
      ++fp[preds[i]];
      ++fn[golds[i]];
    }
  }

  MetricsReport report;
  report.accuracy = accuracy(preds, golds);
  report.per_class.resize(num_classes);
  double sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& m = report.per_class[c];
    m.support = tp[c] + fn[c];
    m.precision = tp[c] + fp[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
    m.recall = m.support == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(m.support);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    sum += m.f1;
  }
  report.macro_f1 = num_classes == 0 ? 0.0 : sum / static_cast<double>(num_classes);
  return report;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace xrt
