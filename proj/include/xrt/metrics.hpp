#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "xrt/core.hpp"

namespace xrt {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

/// Fraction of positions where preds == golds. Throws LengthMismatch, Empty.
double accuracy(std::span<const LabelIndex> preds, std::span<const LabelIndex> golds);

/// Per-class P/R/F1 (zero on empty denominators) and their unweighted
/// mean over every class of the label space, observed or not.
MetricsReport macro_f1(std::span<const LabelIndex> preds, std::span<const LabelIndex> golds,
                       std::size_t num_classes);
inline MetricsReport macro_f1(std::span<const LabelIndex> preds, std::span<const LabelIndex> golds,
                              const LabelSpace& labels) {
  return macro_f1(preds, golds, labels.size());
}

struct Summary {
  double mean = 0.0;
  double stdev = 0.0;  // sample standard deviation; 0 for a single value
};

Summary summarize(std::span<const double> values);

}  // namespace xrt
