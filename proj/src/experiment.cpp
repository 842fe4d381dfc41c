#include "bbnet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

namespace bbnet {

namespace {

constexpr std::uint64_t kSplitStream = 0x51;
constexpr std::uint64_t kModelStream = 0x52;
constexpr std::uint64_t kGraphStream = 0x53;
constexpr std::uint64_t kFinetuneStream = 0x54;

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<GraphSample> gather(const std::vector<GraphSample>& samples, const std::vector<std::size_t>& idx) {
  std::vector<GraphSample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(samples[i]);
  return out;
}

/// Fits one model and scores it on `test`.
FoldResult train_and_score(std::size_t fold, const std::vector<GraphSample>& train,
                           const std::vector<GraphSample>& validation, const std::vector<GraphSample>& test,
                           const ModelConfig& model, const ExperimentConfig& config, const std::string& label) {
  const auto start = std::chrono::steady_clock::now();
  TrainedModel trained = fit(train, validation, model);
  const auto predicted = predict_all(trained, test);
  std::vector<int> truth;
  truth.reserve(test.size());
  for (const auto& s : test) truth.push_back(s.label);

  FoldResult r;
  r.fold = fold;
  r.n_test = test.size();
  for (std::size_t i = 0; i < truth.size(); ++i) r.n_correct += predicted[i] == truth[i] ? 1 : 0;
  r.crr = crr(predicted, truth);
  r.best_epoch = trained.best_epoch;
  r.history = trained.history;
  if (config.on_model) config.on_model(fold, trained);
  if (config.log) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[256];
    std::snprintf(line, sizeof line, "%s fold %zu: crr %.4f, %zu epochs (best %zu), %.1f s", label.c_str(), fold,
                  r.crr, trained.history.size(), trained.best_epoch, secs);
    config.log(line);
  }
  return r;
}

void require_same_roster(const Dataset& a, const Dataset& b) {
  if (a.channels() != b.channels() || a.samples() != b.samples()) {
    throw ParameterError("train and test sets differ in shape: " + std::to_string(a.channels()) + "x" +
                         std::to_string(a.samples()) + " vs " + std::to_string(b.channels()) + "x" +
                         std::to_string(b.samples()));
  }
  if (a.sample_rate_hz != b.sample_rate_hz) throw ParameterError("train and test sets differ in sample rate");
  if (a.layout.names != b.layout.names) throw ParameterError("train and test sets use different electrode layouts");
  const auto ids = [](const Dataset& d) {
    std::set<int> s;
    for (const auto& t : d.trials) s.insert(t.subject_id);
    return s;
  };
  if (a.subject_count != b.subject_count || ids(a) != ids(b)) {
    throw ParameterError("train and test sets must contain the same subjects");
  }
}

bool on_finetune_grid(double fraction) {
  const double steps = fraction / 0.05;
  return fraction >= 0.0 && fraction <= 0.5 + 1e-12 && std::abs(steps - std::round(steps)) < 1e-9;
}

ExperimentReport run_finetune(const Dataset& train_set, const Dataset& test_set, double fraction, Measure measure,
                              const ExperimentConfig& config, const std::string& protocol) {
  if (!on_finetune_grid(fraction)) {
    throw ParameterError("fine-tuning fraction " + std::to_string(fraction) + " is not on the grid {0, 0.05, ..., 0.5}");
  }
  require_same_roster(train_set, test_set);
  validate_dataset(train_set);
  validate_dataset(test_set);
  if (config.repetitions < 1) throw ParameterError("repetitions must be >= 1");

  const Dataset pre_train = preprocess_dataset(train_set, config.preprocess);
  const Dataset pre_test = preprocess_dataset(test_set, config.preprocess);
  const ModelConfig base = resolve_model(config.model, pre_train, measure);
  const auto train_samples = build_samples(pre_train, measure, base, derive_seed(config.seed, kGraphStream));
  const auto test_samples = build_samples(pre_test, measure, base, derive_seed(config.seed, kGraphStream + 1));
  const auto train_by_subject = pre_train.by_subject();
  const auto test_by_subject = pre_test.by_subject();

  ExperimentReport report;
  report.protocol = protocol;
  report.measure = measure;
  report.variant = base.variant;
  report.folds.resize(config.repetitions);

  parallel_for(config.repetitions, config.jobs, [&](std::size_t rep) {
    Rng rng(derive_seed(derive_seed(config.seed, kFinetuneStream), rep));
    std::vector<GraphSample> train;
    std::vector<GraphSample> validation;
    std::vector<GraphSample> test;
    for (std::size_t s = 0; s < pre_train.subject_count; ++s) {
      std::vector<std::size_t> target = test_by_subject[s];
      rng.shuffle(std::span<std::size_t>(target));
      const auto n_tune = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(target.size())));
      if (n_tune >= target.size()) throw ParameterError("fine-tuning leaves no test trials for subject " + std::to_string(s));

      std::vector<const GraphSample*> pool;
      for (std::size_t i : train_by_subject[s]) pool.push_back(&train_samples[i]);
      for (std::size_t i = 0; i < n_tune; ++i) pool.push_back(&test_samples[target[i]]);
      rng.shuffle(std::span<const GraphSample*>(pool));
      const auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(pool.size())));
      if (n_val == 0 || n_val >= pool.size()) {
        throw ParameterError("subject " + std::to_string(s) + " has too few trials for a validation split");
      }
      for (std::size_t i = 0; i < pool.size(); ++i) (i + n_val < pool.size() ? train : validation).push_back(*pool[i]);
      for (std::size_t i = n_tune; i < target.size(); ++i) test.push_back(test_samples[target[i]]);
    }
    ModelConfig model = base;
    model.seed = derive_seed(derive_seed(config.seed, kModelStream), rep);
    report.folds[rep] = train_and_score(rep, train, validation, test, model, config,
                                        protocol + " " + std::string(to_string(measure)));
  });
  return report;
}

}  // namespace

std::vector<FoldSplit> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                                        double validation_fraction) {
  if (k < 2) throw ParameterError("k-fold needs k >= 2");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ParameterError("validation fraction must lie in [0, 1)");
  }
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw ParameterError("labels must be non-negative");
    max_label = std::max(max_label, y);
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  std::vector<FoldSplit> folds(k);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    const std::size_t n = members.size();
    if (n < k) {
      throw ParameterError("class " + std::to_string(c) + " has " + std::to_string(n) + " trials, fewer than " +
                           std::to_string(k) + " folds");
    }
    Rng rng(derive_seed(seed, c));
    rng.shuffle(std::span<std::size_t>(members));
    std::vector<std::size_t> bounds{0};
    for (std::size_t f = 0; f < k; ++f) bounds.push_back(bounds.back() + n / k + (f < n % k ? 1 : 0));

    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (i >= bounds[f] && i < bounds[f + 1]) {
          folds[f].test.push_back(members[i]);
        } else {
          rest.push_back(members[i]);
        }
      }
      const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(rest.size())));
      if (validation_fraction > 0.0 && n_val == 0) {
        throw ParameterError("class " + std::to_string(c) + " has too few trials for a validation split");
      }
      if (n_val >= rest.size()) throw ParameterError("class " + std::to_string(c) + " leaves no training trials");
      folds[f].train.insert(folds[f].train.end(), rest.begin(), rest.end() - static_cast<std::ptrdiff_t>(n_val));
      folds[f].validation.insert(folds[f].validation.end(), rest.end() - static_cast<std::ptrdiff_t>(n_val), rest.end());
    }
  }
  return folds;
}

double crr(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("prediction and label counts differ");
  if (truth.empty()) throw ParameterError("CRR of an empty test set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double ExperimentReport::mean_crr() const {
  if (folds.empty()) return 0.0;
  double total = 0.0;
  for (const auto& f : folds) total += f.crr;
  return total / static_cast<double>(folds.size());
}

double ExperimentReport::sd_crr() const {
  if (folds.empty()) return 0.0;
  const double mean = mean_crr();
  double ss = 0.0;
  for (const auto& f : folds) ss += (f.crr - mean) * (f.crr - mean);
  return std::sqrt(ss / static_cast<double>(folds.size()));
}

double ExperimentReport::pooled_crr() const {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& f : folds) {
    hits += f.n_correct;
    total += f.n_test;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

ModelConfig resolve_model(const ModelConfig& base, const Dataset& preprocessed, Measure measure) {
  ModelConfig m = base;
  m.n_channels = preprocessed.channels();
  m.input_len = preprocessed.samples();
  m.n_classes = preprocessed.subject_count;
  m.measure = measure;
  validate(m);
  return m;
}

std::vector<GraphSample> build_samples(const Dataset& preprocessed, Measure measure, const ModelConfig& model,
                                       std::uint64_t seed) {
  std::vector<GraphSample> out;
  out.reserve(preprocessed.trials.size());
  for (std::size_t i = 0; i < preprocessed.trials.size(); ++i) {
    const Trial& tr = preprocessed.trials[i];
    const auto adj = model_adjacency(measure, tr, preprocessed.layout, model.connectivity, derive_seed(seed, i));
    out.push_back(GraphSample{tr.data, renormalize(adj, model.degree), tr.subject_id});
  }
  return out;
}

ExperimentReport run_intra_session(const Dataset& dataset, Measure measure, const ExperimentConfig& config) {
  validate_dataset(dataset);
  const Dataset pre = preprocess_dataset(dataset, config.preprocess);
  const ModelConfig base = resolve_model(config.model, pre, measure);
  const auto samples = build_samples(pre, measure, base, derive_seed(config.seed, kGraphStream));
  const auto labels = pre.labels();
  const auto splits = stratified_kfold(labels, config.folds, derive_seed(config.seed, kSplitStream),
                                       config.validation_fraction);

  ExperimentReport report;
  report.protocol = "intra-session";
  report.measure = measure;
  report.variant = base.variant;
  report.folds.resize(splits.size());
  parallel_for(splits.size(), config.jobs, [&](std::size_t f) {
    ModelConfig model = base;
    model.seed = derive_seed(derive_seed(config.seed, kModelStream), f);
    report.folds[f] = train_and_score(f, gather(samples, splits[f].train), gather(samples, splits[f].validation),
                                      gather(samples, splits[f].test), model, config,
                                      "intra-session " + std::string(to_string(measure)));
  });
  return report;
}

ExperimentReport run_cross_session(const Dataset& train_set, const Dataset& test_set, double finetune_fraction,
                                   Measure measure, const ExperimentConfig& config) {
  char label[64];
  std::snprintf(label, sizeof label, "cross-session:%.2f", finetune_fraction);
  return run_finetune(train_set, test_set, finetune_fraction, measure, config, label);
}

ExperimentReport run_cross_task(const Dataset& train_task_set, const Dataset& test_task_set, double finetune_fraction,
                                Measure measure, const ExperimentConfig& config) {
  char label[96];
  std::snprintf(label, sizeof label, "cross-task:%s->%s:%.2f", std::string(to_string(train_task_set.task)).c_str(),
                std::string(to_string(test_task_set.task)).c_str(), finetune_fraction);
  return run_finetune(train_task_set, test_task_set, finetune_fraction, measure, config, label);
}

ExperimentReport run_electrode_subset(const Dataset& dataset, const ElectrodeGroups& groups,
                                      const std::string& selection, Measure measure, const ExperimentConfig& config) {
  const auto channels = resolve_channels(dataset.layout, groups, selection);
  ExperimentReport report = run_intra_session(restrict_channels(dataset, channels), measure, config);
  report.protocol = "subset:" + selection;
  return report;
}

std::vector<double> finetune_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.05 * i);
  return grid;
}

void write_report(std::ostream& out, const std::vector<ExperimentReport>& reports) {
  out << "protocol\tmeasure\tfold\tcrr\n";
  char line[256];
  for (const auto& r : reports) {
    for (const auto& f : r.folds) {
      std::snprintf(line, sizeof line, "%s\t%s\t%zu\t%.6f\n", r.protocol.c_str(),
                    std::string(to_string(r.measure)).c_str(), f.fold, f.crr);
      out << line;
    }
  }
}

void write_summary(std::ostream& out, const std::vector<ExperimentReport>& reports) {
  out << "protocol\tvariant\tmeasure\tfolds\tmean_crr\tsd_crr\n";
  char line[256];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%s\t%s\t%s\t%zu\t%.6f\t%.6f\n", r.protocol.c_str(),
                  std::string(to_string(r.variant)).c_str(), std::string(to_string(r.measure)).c_str(), r.folds.size(),
                  r.mean_crr(), r.sd_crr());
    out << line;
  }
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("spearman needs two equal-length series (n >= 2)");
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace bbnet
