#include "xrt/cli.hpp"

#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "xrt/harness.hpp"

namespace xrt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Flags shared by every command: a config file, key=value overrides
/// and the seed, applied in that order.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::map<std::string, std::string> settings() const {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = read_config_file(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + o + "'");
      kv[o.substr(0, eq)] = o.substr(eq + 1);
    }
    if (seed) kv["seed"] = std::to_string(*seed);
    return kv;
  }

  PipelineConfig pipeline() const {
    PipelineConfig c = PipelineConfig::defaults();
    apply_config(c, settings());
    return c;
  }
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw Error(ErrorCode::MissingFlag, "missing required flag " + flag);
}

/// Records how an output was produced. Deliberately free of timestamps
/// so reruns are byte-identical.
void write_manifest(const std::string& path, const std::string& command, const Common& common,
                    const std::map<std::string, std::string>& inputs, const std::vector<std::string>& outputs) {
  const auto config = common.pipeline();
  json doc = {{"format_version", kFormatVersion},
              {"kind", "manifest"},
              {"command", command},
              {"seed", config.synth.seed},
              {"settings", common.settings()},
              {"inputs", inputs},
              {"outputs", outputs}};
  write_file_atomic(path, doc.dump(2) + "\n");
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

json metrics_json(const MetricsReport& report, const LabelSpace& labels) {
  json per_class = json::object();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    per_class[labels.name(c)] = {
        {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  }
  return {{"accuracy", report.accuracy}, {"macro_f1", report.macro_f1}, {"per_class", per_class}};
}

ProportionTable estimate_from(const Classifier& source, const Dataset& data, double smoothing) {
  const ModelSourceClassifier cs(source);
  const auto noisy = label_with_source(cs, data.examples);
  return estimate_table(table_pairs(noisy), data.source_labels, data.target_labels, smoothing);
}

struct Command {
  CLI::App* app;
  std::function<void()> run;
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transfer learning from source-task labels to target-task label proportions", "xrt"};
  app.require_subcommand(1);
  Common common;
  std::map<std::string, Command> commands;

  auto add = [&](const std::string& name, const std::string& about) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("--config", common.config_path, "key=value config file");
    sub->add_option("--set", common.overrides, "config override key=value (repeatable)");
    sub->add_option("--seed", common.seed, "seed for every random stream");
    sub->add_option("--out", common.out, "output path");
    commands[name].app = sub;
    return sub;
  };

  // synth
  add("synth", "generate the synthetic benchmark datasets");
  commands["synth"].run = [&] {
    require(common.out, "--out");
    const auto config = common.pipeline();
    const auto corpus = gen_synthetic(config.synth);
    const fs::path dir(common.out);
    const std::vector<std::pair<std::string, const Dataset*>> files = {{"unlabeled.jsonl", &corpus.unlabeled},
                                                                       {"source_train.jsonl", &corpus.source_train},
                                                                       {"target_labeled.jsonl", &corpus.target_labeled},
                                                                       {"test.jsonl", &corpus.test}};
    std::vector<std::string> outputs;
    for (const auto& [name, data] : files) {
      write_dataset((dir / name).string(), *data);
      outputs.push_back(name);
    }
    write_manifest((dir / "manifest.json").string(), "synth", common, {}, outputs);
    out << "wrote " << files.size() << " datasets to " << dir.string() << "\n";
  };

  // train-source / select-source
  std::string train_path;
  std::size_t candidates = 0;
  auto source_command = [&](const std::string& name, std::size_t default_candidates) {
    auto* sub = add(name, name == "train-source" ? "train the sentence-level source classifier"
                                                  : "train candidates and keep one by the neutral-recall rule");
    sub->add_option("--train", train_path, "dataset with gold source labels");
    sub->add_option("--candidates", candidates, "number of candidate seeds");
    commands[name].run = [&, name, default_candidates] {
      require(train_path, "--train");
      require(common.out, "--out");
      auto config = common.pipeline();
      if (candidates > 0) config.source_candidates = candidates;
      else if (name == "select-source" && !common.settings().contains("source_candidates"))
        config.source_candidates = default_candidates;
      const auto data = read_dataset(train_path);
      const auto trained = train_source(data, config);
      save_checkpoint(common.out, trained.classifier);
      std::vector<std::string> outputs = {common.out};
      if (trained.selection) {
        const auto report_path = common.out + ".selection.json";
        json doc = {{"format_version", kFormatVersion},
                    {"kind", "source_selection"},
                    {"chosen", trained.selection->index},
                    {"neutral_recall", trained.selection->neutral_recall},
                    {"scores", trained.selection->scores}};
        write_file_atomic(report_path, doc.dump(2) + "\n");
        outputs.push_back(report_path);
        out << "chose candidate " << trained.selection->index << "\n";
      }
      write_manifest(manifest_path(common.out), name, common, {{"train", train_path}}, outputs);
    };
  };
  source_command("train-source", 1);
  source_command("select-source", 5);

  std::string source_path, data_path;
  // label
  {
    auto* sub = add("label", "attach source-classifier labels to a dataset");
    sub->add_option("--source", source_path, "source classifier checkpoint");
    sub->add_option("--data", data_path, "dataset to label");
    commands["label"].run = [&] {
      require(source_path, "--source");
      require(data_path, "--data");
      require(common.out, "--out");
      const ModelSourceClassifier cs(load_checkpoint(source_path));
      auto data = read_dataset(data_path);
      for (auto& e : data.examples) e.source_label = cs.classify(e);
      write_dataset(common.out, data);
      write_manifest(manifest_path(common.out), "label", common, {{"source", source_path}, {"data", data_path}},
                     {common.out});
    };
  }

  // estimate-props
  {
    auto* sub = add("estimate-props", "estimate the source-to-target proportion table");
    sub->add_option("--source", source_path, "source classifier checkpoint");
    sub->add_option("--data", data_path, "dataset with gold target labels");
    commands["estimate-props"].run = [&] {
      require(source_path, "--source");
      require(data_path, "--data");
      require(common.out, "--out");
      const auto config = common.pipeline();
      const auto table = estimate_from(load_checkpoint(source_path), read_dataset(data_path), config.smoothing);
      write_table(common.out, table);
      for (std::size_t j = 0; j < table.uniform_fallback.size(); ++j)
        if (table.uniform_fallback[j])
          err << "warning: no observations for source label '" << table.source_labels.name(j)
              << "', using a uniform row\n";
      write_manifest(manifest_path(common.out), "estimate-props", common,
                     {{"source", source_path}, {"data", data_path}}, {common.out});
    };
  }

  // partition
  {
    auto* sub = add("partition", "bucket an unlabeled dataset by source-classifier label");
    sub->add_option("--source", source_path, "source classifier checkpoint");
    sub->add_option("--data", data_path, "unlabeled dataset");
    commands["partition"].run = [&] {
      require(source_path, "--source");
      require(data_path, "--data");
      require(common.out, "--out");
      const ModelSourceClassifier cs(load_checkpoint(source_path));
      const auto data = read_dataset(data_path);
      const auto partition = partition_unlabeled(cs, data.examples, data.source_labels.size());
      json buckets = json::object();
      for (std::size_t j = 0; j < partition.buckets.size(); ++j) {
        json ids = json::array();
        for (const auto i : partition.buckets[j]) ids.push_back(data.examples[i].id);
        buckets[data.source_labels.name(j)] = std::move(ids);
      }
      json doc = {{"format_version", kFormatVersion},
                  {"kind", "partition"},
                  {"source_labels", data.source_labels.names()},
                  {"buckets", buckets}};
      write_file_atomic(common.out, doc.dump() + "\n");
      write_manifest(manifest_path(common.out), "partition", common,
                     {{"source", source_path}, {"data", data_path}}, {common.out});
    };
  }

  // fragment
  std::string partition_path, table_path;
  {
    auto* sub = add("fragment", "decompose partitioned sentences into fragment constraint sets");
    sub->add_option("--data", data_path, "unlabeled dataset with trees");
    sub->add_option("--partition", partition_path, "partition file");
    sub->add_option("--table", table_path, "proportion table file");
    commands["fragment"].run = [&] {
      require(data_path, "--data");
      require(partition_path, "--partition");
      require(table_path, "--table");
      require(common.out, "--out");
      const auto config = common.pipeline();
      const auto data = read_dataset(data_path);
      const auto table = read_table(table_path);

      std::unordered_map<std::string, std::size_t> position;
      for (std::size_t i = 0; i < data.examples.size(); ++i) position[data.examples[i].id] = i;
      Partition partition;
      try {
        const json doc = json::parse(read_file(partition_path));
        if (doc.value("kind", "") != "partition" || doc.value("format_version", 0) != kFormatVersion)
          throw Error(ErrorCode::MissingHeader, partition_path + " is not a partition file");
        const LabelSpace labels(doc.at("source_labels").get<std::vector<std::string>>());
        partition.buckets.resize(labels.size());
        for (const auto& [name, ids] : doc.at("buckets").items()) {
          auto& bucket = partition.buckets[labels.index_of(name)];
          for (const auto& id : ids) {
            const auto it = position.find(id.get<std::string>());
            if (it == position.end())
              throw Error(ErrorCode::MalformedRecord, "partition names unknown id '" + id.get<std::string>() + "'");
            bucket.push_back(it->second);
          }
        }
      } catch (const json::exception& ex) {
        throw Error(ErrorCode::MalformedRecord, partition_path + ": " + ex.what());
      }
      const auto fragments = decompose_all(data.examples, config.strategy);
      const auto sets = build_fragment_sets(partition, fragments, table);
      write_sets(common.out, sets.sets, table.source_labels, table.target_labels);
      for (const auto j : sets.dropped)
        err << "warning: source label '" << table.source_labels.name(j) << "' produced no fragments\n";
      write_manifest(manifest_path(common.out), "fragment", common,
                     {{"data", data_path}, {"partition", partition_path}, {"table", table_path}}, {common.out});
    };
  }

  // train-xr
  std::string sets_path, dev_path;
  {
    auto* sub = add("train-xr", "train the target classifier on constraint sets");
    sub->add_option("--sets", sets_path, "constraint sets file");
    sub->add_option("--dev", dev_path, "dataset with gold target labels for epoch selection");
    commands["train-xr"].run = [&] {
      require(sets_path, "--sets");
      require(dev_path, "--dev");
      require(common.out, "--out");
      const auto config = common.pipeline();
      auto file = read_sets(sets_path);
      const auto dev = labeled_fragments(read_dataset(dev_path).examples, config.strategy);
      TransferConfig tc;
      tc.source_labels = file.source_labels;
      tc.target_labels = file.target_labels;
      tc.model = config.model;
      tc.train = config.xr;
      tc.strategy = config.strategy;
      const auto result = train_on_sets({std::move(file.sets), {}}, dev, tc);
      save_checkpoint(common.out, result.classifier);
      out << "selected epoch " << result.report.selected_epoch << ", dev score " << result.report.best_score
          << "\n";
      write_manifest(manifest_path(common.out), "train-xr", common, {{"sets", sets_path}, {"dev", dev_path}},
                     {common.out});
    };
  }

  // finetune
  std::string model_path;
  {
    auto* sub = add("finetune", "fine-tune a target classifier on labeled fragments");
    sub->add_option("--model", model_path, "starting checkpoint");
    sub->add_option("--data", data_path, "dataset with gold target labels");
    commands["finetune"].run = [&] {
      require(model_path, "--model");
      require(data_path, "--data");
      require(common.out, "--out");
      const auto config = common.pipeline();
      const auto labeled = labeled_fragments(read_dataset(data_path).examples, config.strategy);
      save_checkpoint(common.out, finetune_classifier(load_checkpoint(model_path), labeled, config));
      write_manifest(manifest_path(common.out), "finetune", common, {{"model", model_path}, {"data", data_path}},
                     {common.out});
    };
  }

  // eval
  {
    auto* sub = add("eval", "score a target classifier on labeled fragments");
    sub->add_option("--model", model_path, "checkpoint");
    sub->add_option("--data", data_path, "dataset with gold target labels");
    commands["eval"].run = [&] {
      require(model_path, "--model");
      require(data_path, "--data");
      const auto config = common.pipeline();
      const auto model = load_checkpoint(model_path);
      const auto report =
          evaluate_fragments(model, labeled_fragments(read_dataset(data_path).examples, config.strategy));
      json doc = metrics_json(report, model.labels);
      doc["format_version"] = kFormatVersion;
      doc["kind"] = "metrics";
      if (!common.out.empty()) {
        write_file_atomic(common.out, doc.dump(2) + "\n");
        write_manifest(manifest_path(common.out), "eval", common, {{"model", model_path}, {"data", data_path}},
                       {common.out});
      }
      out << "accuracy " << report.accuracy << " macro_f1 " << report.macro_f1 << "\n";
    };
  }

  // sweep
  std::string param;
  std::vector<std::size_t> values;
  std::vector<std::uint64_t> seeds;
  {
    auto* sub = add("sweep", "run the synthetic pipeline over a parameter grid");
    sub->add_option("--param", param, "k | unlabeled_size | source_train_size");
    sub->add_option("--values", values, "comma-separated values")->delimiter(',');
    sub->add_option("--seeds", seeds, "comma-separated seeds")->delimiter(',');
    commands["sweep"].run = [&] {
      require(param, "--param");
      require(common.out, "--out");
      if (values.empty()) throw Error(ErrorCode::MissingFlag, "missing required flag --values");
      ExperimentSpec spec;
      spec.sweep = parse_sweep_param(param);
      spec.values = values;
      spec.seeds = seeds.empty() ? std::vector<std::uint64_t>{common.pipeline().synth.seed} : seeds;
      spec.base = common.pipeline();
      const auto result = run_experiment(spec);
      const fs::path dir(common.out);
      write_file_atomic((dir / "results.csv").string(), results_csv(result));
      write_file_atomic((dir / "aggregate.csv").string(), aggregate_csv(result));
      write_manifest((dir / "manifest.json").string(), "sweep", common, {}, {"results.csv", "aggregate.csv"});
      out << aggregate_csv(result);
    };
  }

  if (args.empty()) {
    err << "usage: xrt <command> [flags]; commands:";
    for (const auto& [name, _] : commands) err << " " << name;
    err << "\n";
    return kExitUsage;
  }
  if (!commands.contains(args[0]) && args[0] != "--help" && args[0] != "-h") {
    err << to_string(ErrorCode::UnknownCommand) << ": unknown command '" << args[0] << "'\n";
    return kExitUsage;
  }

  std::vector<std::string> argv_store = {"xrt"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "InvalidArgument: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    for (auto& [name, command] : commands)
      if (command.app->parsed()) command.run();
  } catch (const Error& e) {
    err << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::MissingFlag:
      case ErrorCode::InvalidArgument:
      case ErrorCode::UnknownCommand: return kExitUsage;
      case ErrorCode::Io: return kExitIo;
      default: return kExitFailure;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    err << "Io: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace xrt
