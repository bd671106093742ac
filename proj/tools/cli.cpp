#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowood/error.hpp"
#include "flowood/feature_set.hpp"
#include "flowood/geometry.hpp"
#include "flowood/metrics.hpp"
#include "flowood/npy.hpp"
#include "flowood/report_io.hpp"
#include "flowood/scores.hpp"
#include "flowood/serialize.hpp"
#include "flowood/synthetic.hpp"
#include "flowood/train.hpp"

namespace flowood::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

fs::path sidecar_path(const fs::path& out) {
  fs::path p = out;
  return p.replace_extension(".json");
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string features, val, ood_probe, out, history, arch = "glow";
  TrainConfig config;
  double val_fraction = 0.1;
  bool verbose = false;
};

void cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig config = a.config;
  if (a.arch == "glow") config.arch = FlowArch::kGlow;
  else if (a.arch == "realnvp") config.arch = FlowArch::kRealNvp;
  else throw ConfigError("--arch must be glow or realnvp");

  FeatureSet train_set = load_feature_set(a.features);
  FeatureSet val_set;
  if (!a.val.empty()) {
    val_set = load_feature_set(a.val);
  } else {
    auto parts = split(train_set, 1.0 - a.val_fraction, config.seed);
    train_set = std::move(parts.first);
    val_set = std::move(parts.second);
  }
  if (val_set.dim() != train_set.dim())
    throw DimensionError("--val has D=" + std::to_string(val_set.dim()) +
                         " but --features has D=" + std::to_string(train_set.dim()));
  std::optional<FeatureSet> probe;
  if (!a.ood_probe.empty()) {
    probe = load_feature_set(a.ood_probe);
    if (probe->dim() != train_set.dim())
      throw DimensionError("--ood-probe has D=" + std::to_string(probe->dim()) +
                           " but --features has D=" + std::to_string(train_set.dim()));
  }

  TrainObserver observer;
  if (a.verbose) {
    observer = [&err](const TrainRecord& r) {
      err << "epoch " << r.epoch << " step " << r.step << " train_nll " << r.train_nll
          << " val_nll " << r.val_nll;
      if (r.auroc) err << " auroc " << *r.auroc;
      err << '\n';
    };
  }
  const TrainResult result = train(train_set.features, val_set.features,
                                   probe ? &probe->features : nullptr, config, observer);

  const fs::path model_path = a.out;
  const fs::path dir = model_path.has_parent_path() ? model_path.parent_path() : fs::path(".");
  const fs::path history_path = a.history.empty() ? dir / "history.csv" : fs::path(a.history);
  save_model(model_path, result.model);
  write_text(history_path, result.history.to_csv());

  json cfg;
  cfg["command"] = "train";
  cfg["features"] = a.features;
  cfg["val"] = a.val.empty() ? json(nullptr) : json(a.val);
  cfg["val_fraction"] = a.val.empty() ? json(a.val_fraction) : json(nullptr);
  cfg["ood_probe"] = a.ood_probe.empty() ? json(nullptr) : json(a.ood_probe);
  cfg["out"] = a.out;
  cfg["history"] = history_path.string();
  cfg["epochs"] = config.epochs;
  cfg["lr"] = config.learning_rate;
  cfg["blocks"] = config.blocks;
  cfg["hidden"] = config.resolved_hidden(train_set.dim());
  cfg["batch"] = config.batch_size;
  cfg["seed"] = config.seed;
  cfg["normalize"] = config.normalize_features;
  cfg["arch"] = a.arch;
  cfg["eval_every"] = config.eval_every;
  cfg["n_train"] = train_set.size();
  cfg["n_val"] = val_set.size();
  cfg["dim"] = train_set.dim();
  const TrainRecord& last = result.history.records.back();
  cfg["final_val_nll"] = last.val_nll;
  if (last.auroc) cfg["final_auroc"] = *last.auroc;
  write_text(dir / "train_config.json", cfg.dump(2) + "\n");

  out << "wrote " << model_path.string() << " and " << history_path.string() << '\n';
}

// ---- score ----------------------------------------------------------------

struct ScoreArgs {
  std::string model, features, method = "fde", id_train, out;
  double temperature = 1.0;
  double react_percentile = 90.0;
  std::optional<double> clip;
  bool normalize = true;
};

void cmd_score(const ScoreArgs& a, std::ostream& out) {
  const ScoreMethod method = parse_score_method(a.method);
  const FeatureSet fset = load_feature_set(a.features);
  json params;
  ScoreVector scores;
  switch (method) {
    case ScoreMethod::kFde: {
      if (a.model.empty()) throw ConfigError("--method fde requires --model");
      const FlowModel model = load_model(a.model);
      scores = fde_score(model, fset, a.normalize);
      params["normalize"] = a.normalize;
      break;
    }
    case ScoreMethod::kMsp:
      if (!fset.logits)
        throw ConfigError("--method msp requires " + (fs::path(a.features) / "logits.npy").string());
      scores = msp_score(*fset.logits);
      break;
    case ScoreMethod::kEnergy:
      if (!fset.logits)
        throw ConfigError("--method energy requires " +
                          (fs::path(a.features) / "logits.npy").string());
      scores = energy_score(*fset.logits, a.temperature);
      params["temperature"] = a.temperature;
      break;
    case ScoreMethod::kReactEnergy: {
      if (!fset.head_weight)
        throw ConfigError("--method react requires " +
                          (fs::path(a.features) / "head_weight.npy").string());
      if (!fset.head_bias)
        throw ConfigError("--method react requires " +
                          (fs::path(a.features) / "head_bias.npy").string());
      double threshold = 0.0;
      if (a.clip) {
        threshold = *a.clip;
      } else {
        if (a.id_train.empty())
          throw ConfigError("--method react requires --id-train (or --clip)");
        threshold = fit_react_threshold(load_feature_set(a.id_train).features,
                                        a.react_percentile);
      }
      scores = react_energy_score(fset, threshold, a.temperature);
      params["temperature"] = a.temperature;
      params["react_percentile"] = a.react_percentile;
      params["clip_threshold"] = threshold;
      break;
    }
  }

  write_npy(a.out, to_npy(scores.values));

  json side;
  side["method"] = to_string(method);
  side["params"] = params;
  side["model_file"] = a.model.empty() ? json(nullptr) : json(a.model);
  side["feature_dir"] = a.features;
  side["n"] = scores.values.size();
  std::vector<double> norms(fset.size());
  for (std::size_t r = 0; r < fset.size(); ++r) {
    double sq = 0.0;
    for (float v : fset.features.row(r)) sq += static_cast<double>(v) * v;
    norms[r] = std::sqrt(sq);
  }
  side["norms"] = norms;
  if (fset.labels && fset.logits) {
    std::vector<int> correct(fset.size());
    for (std::size_t r = 0; r < fset.size(); ++r) {
      auto l = fset.logits->row(r);
      const auto argmax = std::max_element(l.begin(), l.end()) - l.begin();
      correct[r] = (argmax == (*fset.labels)[r]) ? 1 : 0;
    }
    side["correct"] = correct;
  }
  write_text(sidecar_path(a.out), side.dump(2) + "\n");
  out << "wrote " << a.out << " (" << scores.values.size() << " scores)\n";
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string id_scores, ood_scores, out, method;
  std::size_t bins = 50;
};

std::string method_from_sidecar(const fs::path& scores_file) {
  const fs::path side = sidecar_path(scores_file);
  if (!fs::exists(side)) return "";
  std::ifstream in(side);
  try {
    return nlohmann::json::parse(in).value("method", std::string{});
  } catch (const nlohmann::json::exception&) {
    return "";
  }
}

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto id = npy_to_reals(read_npy(a.id_scores), a.id_scores);
  const auto ood = npy_to_reals(read_npy(a.ood_scores), a.ood_scores);
  if (id.empty()) throw ConfigError(a.id_scores + " contains no scores");
  if (ood.empty()) throw ConfigError(a.ood_scores + " contains no scores");
  const std::string method = a.method.empty() ? method_from_sidecar(a.id_scores) : a.method;
  const EvalReport report = evaluate(id, ood, a.bins, method);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  auto j = json::parse(to_json(report));
  j["config"] = {{"command", "eval"},   {"id_scores", a.id_scores},
                 {"ood_scores", a.ood_scores}, {"bins", a.bins},
                 {"out", a.out}};
  write_text(dir / "report.json", j.dump(2) + "\n");
  write_text(dir / "id_histogram.csv", histogram_csv(report.id_histogram));
  write_text(dir / "ood_histogram.csv", histogram_csv(report.ood_histogram));
  out << "auroc " << report.auroc << '\n';
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
  std::string features, out;
  double t = 2.0;
};

void cmd_stats(const StatsArgs& a, std::ostream& out) {
  const FeatureSet fset = load_feature_set(a.features);
  const GeometryReport report = geometry(fset.features, fset.labels, a.t);
  auto j = json::parse(to_json(report));
  j["config"] = {{"command", "stats"}, {"features", a.features}, {"t", a.t}, {"out", a.out}};
  write_text(a.out, j.dump(2) + "\n");
  out << "uniformity " << report.uniformity;
  if (report.tolerance) out << " tolerance " << *report.tolerance;
  out << '\n';
}

// ---- sample ---------------------------------------------------------------

struct SampleArgs {
  std::string model, out;
  long long n = 1000;
  std::uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& a, std::ostream& out) {
  if (a.n < 1) throw ConfigError("--n must be >= 1");
  const FlowModel model = load_model(a.model);
  const Matrix samples = model.sample(static_cast<std::size_t>(a.n), a.seed);
  write_npy(a.out, to_npy(samples));
  json cfg = {{"command", "sample"}, {"model", a.model}, {"n", a.n},
              {"seed", a.seed},      {"out", a.out},
              {"normalized_space", model.trained_on_normalized()}};
  write_text(sidecar_path(a.out), cfg.dump(2) + "\n");
  out << "wrote " << a.out << '\n';
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  SyntheticSpec spec;
  std::string out;
};

void cmd_synth(const SynthArgs& a, std::ostream& out) {
  const SyntheticData data = generate_synthetic(a.spec);
  const fs::path dir = a.out;
  save_feature_set(dir / "id_train", data.id_train);
  save_feature_set(dir / "id_val", data.id_val);
  save_feature_set(dir / "ood", data.ood);
  const auto& s = a.spec;
  json cfg = {{"command", "synth"},
              {"dim", s.dim},
              {"id_clusters", s.id_clusters},
              {"ood_clusters", s.ood_clusters},
              {"per_cluster", s.samples_per_cluster},
              {"holdout_per_cluster", s.holdout_per_cluster()},
              {"spread", s.cluster_spread},
              {"norm_mean", s.norm_mean},
              {"norm_std", s.norm_std},
              {"seed", s.seed},
              {"out", a.out}};
  write_text(dir / "synth_config.json", cfg.dump(2) + "\n");
  out << "wrote " << (dir / "id_train").string() << ", " << (dir / "id_val").string()
      << ", " << (dir / "ood").string() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"flowood: out-of-distribution detection by feature density estimation", "flowood"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for all subcommands");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a flow on a feature directory");
  train_cmd->add_option("--features", train_args.features, "ID training feature dir")->required();
  train_cmd->add_option("--val", train_args.val, "ID validation feature dir");
  train_cmd->add_option("--val-fraction", train_args.val_fraction,
                        "Held-out fraction when --val is absent")
      ->capture_default_str();
  train_cmd->add_option("--ood-probe", train_args.ood_probe,
                        "OOD feature dir tracked in the history");
  train_cmd->add_option("--out", train_args.out, "Model file")->required();
  train_cmd->add_option("--history", train_args.history,
                        "History CSV (default: history.csv next to --out)");
  train_cmd->add_option("--epochs", train_args.config.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train_args.config.learning_rate)->capture_default_str();
  train_cmd->add_option("--blocks", train_args.config.blocks)->capture_default_str();
  train_cmd->add_option("--hidden", train_args.config.hidden_width,
                        "Coupling hidden width (0: feature dimension)")
      ->capture_default_str();
  train_cmd->add_option("--batch", train_args.config.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", train_args.config.seed)->capture_default_str();
  train_cmd->add_option("--normalize", train_args.config.normalize_features)
      ->capture_default_str();
  train_cmd->add_option("--arch", train_args.arch)
      ->check(CLI::IsMember({"glow", "realnvp"}))
      ->capture_default_str();
  train_cmd->add_option("--eval-every", train_args.config.eval_every, "In epochs")
      ->capture_default_str();
  train_cmd->add_flag("--verbose", train_args.verbose, "Print history rows to stderr");

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Score a feature directory");
  score_cmd->add_option("--model", score_args.model, "Model file (fde)");
  score_cmd->add_option("--features", score_args.features)->required();
  score_cmd->add_option("--method", score_args.method)
      ->check(CLI::IsMember({"fde", "msp", "energy", "react"}))
      ->capture_default_str();
  score_cmd->add_option("--temperature", score_args.temperature)->capture_default_str();
  score_cmd->add_option("--react-percentile", score_args.react_percentile)
      ->capture_default_str();
  score_cmd->add_option("--id-train", score_args.id_train,
                        "ID training features for the ReAct threshold");
  score_cmd->add_option("--clip", score_args.clip, "Explicit ReAct clip threshold");
  score_cmd->add_option("--normalize", score_args.normalize)->capture_default_str();
  score_cmd->add_option("--out", score_args.out, "scores.npy path")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "AUROC and histograms for ID vs OOD scores");
  eval_cmd->add_option("--id-scores", eval_args.id_scores)->required();
  eval_cmd->add_option("--ood-scores", eval_args.ood_scores)->required();
  eval_cmd->add_option("--bins", eval_args.bins)->capture_default_str();
  eval_cmd->add_option("--method", eval_args.method, "Label for the report");
  eval_cmd->add_option("--out", eval_args.out, "Output directory")->required();

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Uniformity and tolerance of a feature set");
  stats_cmd->add_option("--features", stats_args.features)->required();
  stats_cmd->add_option("--t", stats_args.t)->capture_default_str();
  stats_cmd->add_option("--out", stats_args.out)->required();

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Draw feature vectors from a flow");
  sample_cmd->add_option("--model", sample_args.model)->required();
  sample_cmd->add_option("--n", sample_args.n)->capture_default_str();
  sample_cmd->add_option("--seed", sample_args.seed)->capture_default_str();
  sample_cmd->add_option("--out", sample_args.out)->required();

  SynthArgs synth_args;
  auto& spec = synth_args.spec;
  auto* synth_cmd = app.add_subcommand("synth", "Generate clustered-hypersphere feature sets");
  synth_cmd->add_option("--dim", spec.dim)->capture_default_str();
  synth_cmd->add_option("--id-clusters", spec.id_clusters)->capture_default_str();
  synth_cmd->add_option("--ood-clusters", spec.ood_clusters)->capture_default_str();
  synth_cmd->add_option("--per-cluster", spec.samples_per_cluster)->capture_default_str();
  synth_cmd->add_option("--spread", spec.cluster_spread)->capture_default_str();
  synth_cmd->add_option("--norm-mean", spec.norm_mean)->capture_default_str();
  synth_cmd->add_option("--norm-std", spec.norm_std)->capture_default_str();
  synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_args.out)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  try {
    if (chosen == train_cmd) cmd_train(train_args, out, err);
    else if (chosen == score_cmd) cmd_score(score_args, out);
    else if (chosen == eval_cmd) cmd_eval(eval_args, out);
    else if (chosen == stats_cmd) cmd_stats(stats_args, out);
    else if (chosen == sample_cmd) cmd_sample(sample_args, out);
    else if (chosen == synth_cmd) cmd_synth(synth_args, out);
  } catch (const std::exception& e) {
    err << "error: " << name << ": " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace flowood::cli
