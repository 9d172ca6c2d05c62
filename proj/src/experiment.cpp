#include <algorithm>
#include <cstdio>

#include "xrt/harness.hpp"

namespace xrt {

std::string_view to_string(SweepParam param) {
  switch (param) {
    case SweepParam::K: return "k";
    case SweepParam::UnlabeledSize: return "unlabeled_size";
    case SweepParam::SourceTrainSize: return "source_train_size";
  }
  return "?";
}

SweepParam parse_sweep_param(std::string_view name) {
  if (name == "k") return SweepParam::K;
  if (name == "unlabeled_size") return SweepParam::UnlabeledSize;
  if (name == "source_train_size") return SweepParam::SourceTrainSize;
  throw Error(ErrorCode::InvalidArgument, "unknown sweep parameter '" + std::string(name) + "'");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.values.empty() || spec.seeds.empty())
    throw Error(ErrorCode::InvalidArgument, "run_experiment needs at least one value and one seed");
  auto values = spec.values;
  auto seeds = spec.seeds;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  ExperimentResult result;
  result.sweep = spec.sweep;
  for (const std::size_t value : values) {
    std::vector<double> acc, f1;
    for (const std::uint64_t seed : seeds) {
      PipelineConfig cfg = spec.base;
      cfg.set_seed(seed);
      cfg.run_skyline = false;
      cfg.run_finetune = false;
      switch (spec.sweep) {
        case SweepParam::K: cfg.xr.k = value; break;
        case SweepParam::UnlabeledSize: cfg.synth.unlabeled_size = value; break;
        case SweepParam::SourceTrainSize: cfg.synth.source_train_size = value; break;
      }
      const auto run = run_pipeline(cfg);
      result.rows.push_back({value, seed, run.xr});
      acc.push_back(run.xr.accuracy);
      f1.push_back(run.xr.macro_f1);
    }
    result.aggregate.push_back({value, seeds.size(), summarize(acc), summarize(f1)});
  }
  return result;
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string results_csv(const ExperimentResult& result) {
  std::string out = "# format_version=1\nsweep_param,value,seed,accuracy,macro_f1\n";
  const std::string param(to_string(result.sweep));
  for (const auto& r : result.rows)
    out += param + "," + std::to_string(r.value) + "," + std::to_string(r.seed) + "," + fixed(r.report.accuracy) +
           "," + fixed(r.report.macro_f1) + "\n";
  return out;
}

std::string aggregate_csv(const ExperimentResult& result) {
  std::string out =
      "# format_version=1\nsweep_param,value,runs,accuracy_mean,accuracy_stdev,macro_f1_mean,macro_f1_stdev\n";
  const std::string param(to_string(result.sweep));
  for (const auto& a : result.aggregate)
    out += param + "," + std::to_string(a.value) + "," + std::to_string(a.runs) + "," + fixed(a.accuracy.mean) + "," +
           fixed(a.accuracy.stdev) + "," + fixed(a.macro_f1.mean) + "," + fixed(a.macro_f1.stdev) + "\n";
  return out;
}

}  // namespace xrt
