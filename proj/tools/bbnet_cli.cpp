#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bbnet/connectivity.hpp"
#include "bbnet/dataset.hpp"
#include "bbnet/experiment.hpp"
#include "bbnet/model.hpp"
#include "bbnet/nn/checkpoint.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bbnet;

namespace {

#ifndef BBNET_DATA_DIR
#define BBNET_DATA_DIR "data"
#endif

void print_error(const char* kind, const std::string& message, int code) {
  json rec = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << rec.dump() << "\n";
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SynthConfig cfg;
  std::optional<std::uint64_t> seed;
  int session = 1;
  std::string task = "synth";
  std::string output;
};

int cmd_synth(SynthArgs& a) {
  if (!a.seed) throw UsageError("synth requires an explicit --seed (datasets must be reproducible)");
  a.cfg.seed = *a.seed;
  if (a.session != 1 && a.session != 2) throw ParameterError("--session must be 1 or 2");
  a.cfg.session = a.session == 1 ? Session::I : Session::II;
  a.cfg.task = parse_task(a.task);
  const Dataset ds = generate_synthetic(a.cfg);
  save_dataset(ds, a.output);
  std::cout << json{{"output", a.output},
                    {"subjects", ds.subject_count},
                    {"trials", ds.trials.size()},
                    {"channels", ds.channels()},
                    {"samples", ds.samples()},
                    {"session", to_string(ds.session)},
                    {"task", to_string(ds.task)}}
                   .dump()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- connectivity

struct ConnectivityArgs {
  std::string dataset;
  std::size_t trial = 0;
  std::string measure = "cor";
  bool raw = false;
  bool no_preprocess = false;
  std::size_t rho_bins = 0;
  std::string pli = "signed";
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_connectivity(const ConnectivityArgs& a) {
  const Measure measure = parse_measure(a.measure);
  Dataset ds = load_dataset(a.dataset);
  if (a.trial >= ds.trials.size()) {
    throw ParameterError("trial index " + std::to_string(a.trial) + " out of range (dataset has " +
                         std::to_string(ds.trials.size()) + " trials)");
  }
  Trial trial = ds.trials[a.trial];
  if (!a.no_preprocess) trial = preprocess(trial, PreprocessConfig{});

  ConnectivityOptions opt;
  opt.rho_bins = a.rho_bins;
  if (a.pli == "absolute") {
    opt.pli = PliConvention::Absolute;
  } else if (a.pli != "signed") {
    throw ParameterError("--pli must be 'signed' or 'absolute'");
  }
  const auto adj = a.raw ? compute_adjacency(measure, trial, ds.layout, opt, a.seed)
                         : model_adjacency(measure, trial, ds.layout, opt, a.seed);

  std::ofstream file;
  if (!a.output.empty()) {
    file.open(a.output);
    if (!file) throw IoError("cannot open " + a.output + " for writing");
  }
  std::ostream& out = a.output.empty() ? std::cout : file;
  out << "channel";
  for (const auto& name : ds.layout.names) out << '\t' << name;
  out << '\n';
  char buf[40];
  for (std::size_t k = 0; k < adj.size(); ++k) {
    out << ds.layout.names[k];
    for (std::size_t l = 0; l < adj.size(); ++l) {
      std::snprintf(buf, sizeof buf, "\t%.17g", adj.weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)));
      out << buf;
    }
    out << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- run

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ParameterError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ParameterError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("bad value for '") + key + "': " + e.what());
  }
}

struct RunPlan {
  std::string protocol;
  std::vector<std::string> datasets;  // intra/subset: pooled when more than one
  std::string train_dataset;
  std::string test_dataset;
  std::vector<Measure> measures;
  std::vector<int> finetune_percent;
  std::string subset;
  std::string groups;
  std::string output_dir;
  bool save_checkpoints = false;
  ExperimentConfig exp;
};

json model_to_json(const ModelConfig& m) {
  return {{"variant", to_string(m.variant)},
          {"conv_kernel", m.conv_kernel},
          {"pool_window", m.pool_window},
          {"gconv_dims", m.gconv_dims},
          {"dense_dims", m.dense_dims},
          {"dropout", m.dropout},
          {"learning_rate", m.learning_rate},
          {"batch_size", m.batch_size},
          {"patience", m.patience},
          {"max_epochs", m.max_epochs},
          {"degree", m.degree == DegreeMode::Absolute ? "absolute" : "signed"},
          {"pli", m.connectivity.pli == PliConvention::Signed ? "signed" : "absolute"},
          {"rho_bins", m.connectivity.rho_bins},
          {"bn_momentum", m.batch_norm.momentum},
          {"bn_epsilon", m.batch_norm.epsilon}};
}

json plan_to_json(const RunPlan& p) {
  json j;
  j["protocol"] = p.protocol;
  std::vector<std::string> measures;
  for (Measure m : p.measures) measures.emplace_back(to_string(m));
  j["measures"] = measures;
  if (p.protocol == "intra" || p.protocol == "subset") {
    j["datasets"] = p.datasets;
  } else {
    j["train_dataset"] = p.train_dataset;
    j["test_dataset"] = p.test_dataset;
    j["finetune_percent"] = p.finetune_percent;
    j["repetitions"] = p.exp.repetitions;
  }
  if (p.protocol == "subset") {
    j["subset"] = p.subset;
    j["groups"] = p.groups;
  }
  j["output_dir"] = p.output_dir;
  j["seed"] = p.exp.seed;
  j["folds"] = p.exp.folds;
  j["validation_fraction"] = p.exp.validation_fraction;
  j["jobs"] = p.exp.jobs;
  j["save_checkpoints"] = p.save_checkpoints;
  j["preprocess"] = {{"enabled", p.exp.preprocess.enabled},
                     {"low_hz", p.exp.preprocess.low_hz},
                     {"high_hz", p.exp.preprocess.high_hz},
                     {"order", p.exp.preprocess.order},
                     {"target_hz", p.exp.preprocess.target_hz}};
  j["model"] = model_to_json(p.exp.model);
  return j;
}

RunPlan parse_plan(const json& j, const fs::path& config_dir) {
  reject_unknown(j,
                 {"protocol", "dataset", "datasets", "train_dataset", "test_dataset", "measure", "measures",
                  "finetune_percent", "subset", "groups", "output_dir", "seed", "folds", "repetitions",
                  "validation_fraction", "jobs", "save_checkpoints", "preprocess", "model"},
                 "run config");
  RunPlan p;
  const auto resolve = [&](const std::string& path) {
    if (path.empty()) return path;
    const fs::path fp(path);
    return fp.is_absolute() ? path : (config_dir / fp).lexically_normal().string();
  };

  p.protocol = get_or<std::string>(j, "protocol", "intra");
  static const std::set<std::string> protocols{"intra", "cross-session", "cross-task", "subset"};
  if (!protocols.count(p.protocol)) {
    throw ParameterError("protocol must be one of intra, cross-session, cross-task, subset; got '" + p.protocol + "'");
  }
  if (j.contains("dataset") && j.contains("datasets")) throw ParameterError("give either 'dataset' or 'datasets'");
  if (j.contains("dataset")) p.datasets.push_back(resolve(get_or<std::string>(j, "dataset", "")));
  for (const auto& d : get_or<std::vector<std::string>>(j, "datasets", {})) p.datasets.push_back(resolve(d));
  p.train_dataset = resolve(get_or<std::string>(j, "train_dataset", ""));
  p.test_dataset = resolve(get_or<std::string>(j, "test_dataset", ""));

  if (j.contains("measure") && j.contains("measures")) throw ParameterError("give either 'measure' or 'measures'");
  std::vector<std::string> names = get_or<std::vector<std::string>>(j, "measures", {});
  if (j.contains("measure")) names.push_back(get_or<std::string>(j, "measure", ""));
  if (names.empty()) names.push_back("cor");
  for (const auto& n : names) p.measures.push_back(parse_measure(n));

  p.finetune_percent = get_or<std::vector<int>>(j, "finetune_percent", {0});
  p.subset = get_or<std::string>(j, "subset", "");
  p.groups = resolve(get_or<std::string>(j, "groups", std::string(BBNET_DATA_DIR) + "/electrode_groups.json"));
  p.output_dir = resolve(get_or<std::string>(j, "output_dir", "run"));
  p.save_checkpoints = get_or<bool>(j, "save_checkpoints", false);

  p.exp.seed = get_or<std::uint64_t>(j, "seed", 0);
  p.exp.folds = get_or<std::size_t>(j, "folds", 5);
  p.exp.repetitions = get_or<std::size_t>(j, "repetitions", 5);
  p.exp.validation_fraction = get_or<double>(j, "validation_fraction", 0.125);
  p.exp.jobs = get_or<std::size_t>(j, "jobs", 1);

  if (j.contains("preprocess")) {
    const json& pj = j.at("preprocess");
    reject_unknown(pj, {"enabled", "low_hz", "high_hz", "order", "target_hz"}, "preprocess");
    auto& pp = p.exp.preprocess;
    pp.enabled = get_or<bool>(pj, "enabled", pp.enabled);
    pp.low_hz = get_or<double>(pj, "low_hz", pp.low_hz);
    pp.high_hz = get_or<double>(pj, "high_hz", pp.high_hz);
    pp.order = get_or<int>(pj, "order", pp.order);
    pp.target_hz = get_or<double>(pj, "target_hz", pp.target_hz);
  }
  if (j.contains("model")) {
    const json& mj = j.at("model");
    reject_unknown(mj,
                   {"variant", "conv_kernel", "pool_window", "gconv_dims", "dense_dims", "dropout", "learning_rate",
                    "batch_size", "patience", "max_epochs", "degree", "pli", "rho_bins", "bn_momentum", "bn_epsilon"},
                   "model");
    auto& m = p.exp.model;
    m.variant = parse_variant(get_or<std::string>(mj, "variant", std::string(to_string(m.variant))));
    m.conv_kernel = get_or<std::size_t>(mj, "conv_kernel", m.conv_kernel);
    m.pool_window = get_or<std::size_t>(mj, "pool_window", m.pool_window);
    m.gconv_dims = get_or<std::vector<std::size_t>>(mj, "gconv_dims", m.gconv_dims);
    m.dense_dims = get_or<std::vector<std::size_t>>(mj, "dense_dims", m.dense_dims);
    m.dropout = get_or<double>(mj, "dropout", m.dropout);
    m.learning_rate = get_or<double>(mj, "learning_rate", m.learning_rate);
    m.batch_size = get_or<std::size_t>(mj, "batch_size", m.batch_size);
    m.patience = get_or<std::size_t>(mj, "patience", m.patience);
    m.max_epochs = get_or<std::size_t>(mj, "max_epochs", m.max_epochs);
    const auto degree = get_or<std::string>(mj, "degree", "absolute");
    if (degree != "absolute" && degree != "signed") throw ParameterError("model.degree must be 'absolute' or 'signed'");
    m.degree = degree == "absolute" ? DegreeMode::Absolute : DegreeMode::Signed;
    const auto pli = get_or<std::string>(mj, "pli", "signed");
    if (pli != "absolute" && pli != "signed") throw ParameterError("model.pli must be 'signed' or 'absolute'");
    m.connectivity.pli = pli == "signed" ? PliConvention::Signed : PliConvention::Absolute;
    m.connectivity.rho_bins = get_or<std::size_t>(mj, "rho_bins", m.connectivity.rho_bins);
    m.batch_norm.momentum = get_or<double>(mj, "bn_momentum", m.batch_norm.momentum);
    m.batch_norm.epsilon = get_or<double>(mj, "bn_epsilon", m.batch_norm.epsilon);
  }
  return p;
}

void check_plan(const RunPlan& p) {
  if (p.protocol == "intra" || p.protocol == "subset") {
    if (p.datasets.empty()) throw ParameterError("protocol '" + p.protocol + "' needs 'dataset' or 'datasets'");
    if (p.protocol == "subset" && p.subset.empty()) throw ParameterError("protocol 'subset' needs 'subset'");
  } else {
    if (p.train_dataset.empty() || p.test_dataset.empty()) {
      throw ParameterError("protocol '" + p.protocol + "' needs 'train_dataset' and 'test_dataset'");
    }
    if (p.finetune_percent.empty()) throw ParameterError("finetune_percent must not be empty");
    for (int pct : p.finetune_percent) {
      if (pct < 0 || pct > 50 || pct % 5 != 0) {
        throw ParameterError("fine-tuning percentages must be multiples of 5 in [0, 50], got " + std::to_string(pct));
      }
    }
  }
  if (p.exp.jobs < 1) throw ParameterError("jobs must be >= 1");
}

std::string file_stem(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  }
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<int> parse_percent_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  std::vector<std::string> items;
  while (std::getline(ss, item, ',')) items.push_back(item);
  // "0,5,...,50" expands the arithmetic progression given by the first two terms.
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] == "...") {
      if (i < 2 || i + 1 >= items.size()) throw ParameterError("'...' needs two leading terms and an end value");
      const int step = out[out.size() - 1] - out[out.size() - 2];
      const int end = std::stoi(items[i + 1]);
      if (step <= 0) throw ParameterError("'...' needs an increasing progression");
      for (int v = out.back() + step; v < end; v += step) out.push_back(v);
      continue;
    }
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(items[i], &used));
      if (used != items[i].size()) throw std::invalid_argument(items[i]);
    } catch (const std::logic_error&) {
      throw ParameterError("bad fine-tuning percentage '" + items[i] + "'");
    }
  }
  return out;
}

struct RunArgs {
  std::string config;
  std::optional<std::size_t> jobs;
  std::optional<std::string> protocol;
  std::optional<std::string> measure;
  std::optional<std::string> finetune;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

Dataset load_pooled(const std::vector<std::string>& paths) {
  std::vector<Dataset> parts;
  for (const auto& p : paths) parts.push_back(load_dataset(p));
  return parts.size() == 1 ? std::move(parts.front()) : pool_datasets(parts);
}

int cmd_run(const RunArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw IoError("cannot open config " + a.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  const fs::path config_dir = fs::absolute(a.config).parent_path();
  RunPlan plan = parse_plan(j, config_dir);
  if (a.jobs) plan.exp.jobs = *a.jobs;
  if (a.protocol) plan.protocol = *a.protocol;
  if (a.measure) {
    plan.measures.clear();
    std::stringstream ss(*a.measure);
    std::string m;
    while (std::getline(ss, m, ',')) plan.measures.push_back(parse_measure(m));
  }
  if (a.finetune) plan.finetune_percent = parse_percent_list(*a.finetune);
  if (a.output_dir) plan.output_dir = fs::absolute(*a.output_dir).lexically_normal().string();
  if (a.seed) plan.exp.seed = *a.seed;
  check_plan(plan);

  const fs::path out_dir(plan.output_dir);
  fs::create_directories(out_dir / "history");
  if (plan.save_checkpoints) fs::create_directories(out_dir / "checkpoints");
  write_text(out_dir / "resolved_config.json", plan_to_json(plan).dump(2) + "\n");

  if (!a.quiet) plan.exp.log = [](const std::string& line) { std::cerr << line << "\n"; };

  std::vector<ExperimentReport> reports;
  std::vector<double> seconds;
  const auto timed = [&](const std::function<ExperimentReport()>& run, const std::string& stem) {
    if (plan.save_checkpoints) {
      plan.exp.on_model = [&out_dir, stem](std::size_t fold, TrainedModel& model) {
        save_checkpoint(out_dir / "checkpoints" / (stem + "_fold" + std::to_string(fold) + ".bbnet"), model.network);
      };
    }
    const auto start = std::chrono::steady_clock::now();
    reports.push_back(run());
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };

  if (plan.protocol == "intra" || plan.protocol == "subset") {
    const Dataset ds = load_pooled(plan.datasets);
    ElectrodeGroups groups;
    if (plan.protocol == "subset") groups = load_electrode_groups(plan.groups);
    for (Measure m : plan.measures) {
      const std::string stem = file_stem((plan.protocol == "subset" ? "subset_" + plan.subset : "intra-session") +
                                         "_" + std::string(to_string(m)));
      timed(
          [&] {
            return plan.protocol == "subset" ? run_electrode_subset(ds, groups, plan.subset, m, plan.exp)
                                             : run_intra_session(ds, m, plan.exp);
          },
          stem);
    }
  } else {
    const Dataset train = load_dataset(plan.train_dataset);
    const Dataset test = load_dataset(plan.test_dataset);
    for (Measure m : plan.measures) {
      for (int pct : plan.finetune_percent) {
        const double fraction = pct / 100.0;
        char stem[96];
        std::snprintf(stem, sizeof stem, "%s_%s_ft%02d", plan.protocol.c_str(), std::string(to_string(m)).c_str(), pct);
        timed(
            [&] {
              return plan.protocol == "cross-session" ? run_cross_session(train, test, fraction, m, plan.exp)
                                                      : run_cross_task(train, test, fraction, m, plan.exp);
            },
            file_stem(stem));
      }
    }
  }

  std::ostringstream report;
  write_report(report, reports);
  write_text(out_dir / "report.tsv", report.str());
  std::ostringstream summary;
  write_summary(summary, reports);
  write_text(out_dir / "summary.tsv", summary.str());

  std::ostringstream timing;
  timing << "protocol\tmeasure\tseconds\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    char line[256];
    std::snprintf(line, sizeof line, "%s\t%s\t%.3f\n", reports[i].protocol.c_str(),
                  std::string(to_string(reports[i].measure)).c_str(), seconds[i]);
    timing << line;
    for (const auto& f : reports[i].folds) {
      std::ostringstream h;
      write_history(h, f.history);
      write_text(out_dir / "history" /
                     (file_stem(reports[i].protocol + "_" + std::string(to_string(reports[i].measure))) + "_fold" +
                      std::to_string(f.fold) + ".tsv"),
                 h.str());
    }
  }
  write_text(out_dir / "timing.tsv", timing.str());
  std::cout << summary.str();
  return 0;
}

// ---------------------------------------------------------------- inspect-checkpoint

int cmd_inspect(const std::string& path, bool as_json) {
  const auto records = nn::read_checkpoint(path);
  std::size_t total = 0;
  json tensors = json::array();
  for (const auto& r : records) {
    double sq = 0.0;
    for (float v : r.values) sq += static_cast<double>(v) * v;
    total += r.values.size();
    tensors.push_back({{"name", r.name}, {"shape", r.shape}, {"count", r.values.size()}, {"l2", std::sqrt(sq)}});
  }
  if (as_json) {
    std::cout << json{{"path", path}, {"tensors", tensors}, {"parameters", total}}.dump(2) << "\n";
    return 0;
  }
  std::printf("%-28s %-16s %10s %14s\n", "name", "shape", "count", "l2");
  for (const auto& t : tensors) {
    std::printf("%-28s %-16s %10zu %14.6g\n", t["name"].get<std::string>().c_str(),
                nn::shape_string(t["shape"].get<nn::Shape>()).c_str(), t["count"].get<std::size_t>(),
                t["l2"].get<double>());
  }
  std::printf("%zu tensors, %zu values\n", records.size(), total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG brain-biometric graph network: data synthesis, connectivity, training and evaluation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic multi-subject dataset");
  s->add_option("--subjects", synth.cfg.subjects, "Number of subjects")->capture_default_str();
  s->add_option("--trials", synth.cfg.trials_per_subject, "Trials per subject")->capture_default_str();
  s->add_option("--channels", synth.cfg.channels, "Channels (first n of the 62-channel montage)")->capture_default_str();
  s->add_option("--samples", synth.cfg.samples, "Samples per trial")->capture_default_str();
  s->add_option("--rate", synth.cfg.sample_rate_hz, "Sample rate in Hz")->capture_default_str();
  s->add_option("--snr-db", synth.cfg.snr_db, "Source signal-to-noise ratio in dB")->capture_default_str();
  s->add_option("--sources", synth.cfg.sources, "Latent sources per subject")->capture_default_str();
  s->add_option("--oscillators", synth.cfg.oscillators, "Oscillators per source")->capture_default_str();
  s->add_option("--session-shift", synth.cfg.session_shift, "Session II perturbation strength")->capture_default_str();
  s->add_option("--session", synth.session, "Session (1 or 2)")->capture_default_str();
  s->add_option("--task", synth.task, "Task label (mi, erp, ssvep, synth)")->capture_default_str();
  s->add_option("--seed", synth.seed, "Random seed (required)");
  s->add_option("-o,--output", synth.output, "Output dataset file")->required();

  ConnectivityArgs conn;
  auto* c = app.add_subcommand("connectivity", "Write one trial's adjacency matrix as tab-separated text");
  c->add_option("dataset", conn.dataset, "Dataset file")->required();
  c->add_option("--trial", conn.trial, "Trial index")->capture_default_str();
  c->add_option("--measure", conn.measure, "dist, cor, plv, pli, rho, idn or rdm")->capture_default_str();
  c->add_flag("--raw", conn.raw, "Skip the [-1, 1] normalization");
  c->add_flag("--no-preprocess", conn.no_preprocess, "Use the stored samples without filtering or decimation");
  c->add_option("--rho-bins", conn.rho_bins, "Entropy bins for rho (0 = one per sample)")->capture_default_str();
  c->add_option("--pli", conn.pli, "signed or absolute phase differences")->capture_default_str();
  c->add_option("--seed", conn.seed, "Seed for rdm")->capture_default_str();
  c->add_option("-o,--output", conn.output, "Output file (default stdout)");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run an evaluation protocol from a JSON config");
  r->add_option("config", run.config, "Run configuration (JSON)")->required();
  r->add_option("--jobs", run.jobs, "Folds trained in parallel");
  r->add_option("--protocol", run.protocol, "Override: intra, cross-session, cross-task or subset");
  r->add_option("--measure", run.measure, "Override: comma-separated measures");
  r->add_option("--finetune", run.finetune, "Override: fine-tuning percentages, e.g. 0,5,...,50");
  r->add_option("--output-dir", run.output_dir, "Override the output directory");
  r->add_option("--seed", run.seed, "Override the run seed");
  r->add_flag("-q,--quiet", run.quiet, "No progress lines on stderr");

  std::string ckpt;
  bool ckpt_json = false;
  auto* k = app.add_subcommand("inspect-checkpoint", "List the tensors of a checkpoint");
  k->add_option("checkpoint", ckpt, "Checkpoint file")->required();
  k->add_flag("--json", ckpt_json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), 2);
    return 2;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*c) return cmd_connectivity(conn);
    if (*r) return cmd_run(run);
    if (*k) return cmd_inspect(ckpt, ckpt_json);
  } catch (const UsageError& e) {
    print_error(e.kind(), e.what(), 2);
    return 2;
  } catch (const Error& e) {
    print_error(e.kind(), e.what(), 1);
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), 1);
    return 1;
  }
  return 0;
}
