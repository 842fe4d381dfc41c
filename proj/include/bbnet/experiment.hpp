#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bbnet/dataset.hpp"
#include "bbnet/model.hpp"

namespace bbnet {

/// Index sets into one dataset.
struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Per-class k-fold plan. Each subject's trials are shuffled with `seed` and cut into k
/// contiguous blocks whose sizes differ by at most one; block f is the test set of fold f.
/// The remaining trials keep their shuffled order and the last
/// floor(validation_fraction * remaining) of them validate; the rest train.
std::vector<FoldSplit> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed,
                                        double validation_fraction = 0.125);

/// Fraction of predictions equal to the true label.
double crr(std::span<const int> predicted, std::span<const int> truth);

struct FoldResult {
  std::size_t fold = 0;
  double crr = 0.0;
  std::size_t n_test = 0;
  std::size_t n_correct = 0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

struct ExperimentReport {
  std::string protocol;  // e.g. "intra-session", "cross-session:0.25", "subset:emotiv"
  Measure measure = Measure::COR;
  Variant variant = Variant::EegBbnet;
  std::vector<FoldResult> folds;

  double mean_crr() const;
  /// Population standard deviation over folds.
  double sd_crr() const;
  /// CRR over the concatenated test predictions of all folds.
  double pooled_crr() const;
};

struct ExperimentConfig {
  ModelConfig model;  // channels, length, classes and measure are filled in from the data
  PreprocessConfig preprocess;
  std::size_t folds = 5;
  std::size_t repetitions = 5;
  double validation_fraction = 0.125;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  /// Progress lines (one per finished fit); may be empty.
  std::function<void(const std::string&)> log;
  /// Receives every trained fold model (fold index, model); may be empty.
  std::function<void(std::size_t, TrainedModel&)> on_model;
};

/// Graph samples for a preprocessed dataset. RDM graphs are drawn per trial from
/// derive_seed(seed, trial index).
std::vector<GraphSample> build_samples(const Dataset& preprocessed, Measure measure, const ModelConfig& model,
                                       std::uint64_t seed);

/// The model configuration used for `data` (shape and classes from the data).
ModelConfig resolve_model(const ModelConfig& base, const Dataset& preprocessed, Measure measure);

/// 5-fold 70:10:20 protocol on one session.
ExperimentReport run_intra_session(const Dataset& dataset, Measure measure, const ExperimentConfig& config);

/// Trains on session I plus `finetune_fraction` of every subject's session II trials and tests on
/// the remaining session II trials; `config.repetitions` seeded repetitions.
ExperimentReport run_cross_session(const Dataset& train_set, const Dataset& test_set, double finetune_fraction,
                                   Measure measure, const ExperimentConfig& config);

/// Same mechanics with two task-labelled sets.
ExperimentReport run_cross_task(const Dataset& train_task_set, const Dataset& test_task_set, double finetune_fraction,
                                Measure measure, const ExperimentConfig& config);

/// Intra-session protocol on a channel subset (group name or comma-separated channel names).
ExperimentReport run_electrode_subset(const Dataset& dataset, const ElectrodeGroups& groups,
                                      const std::string& selection, Measure measure, const ExperimentConfig& config);

/// {0, 0.05, ..., 0.50}
std::vector<double> finetune_grid();

/// Columns: protocol, measure, fold, crr.
void write_report(std::ostream& out, const std::vector<ExperimentReport>& reports);
/// Columns: protocol, variant, measure, folds, mean_crr, sd_crr.
void write_summary(std::ostream& out, const std::vector<ExperimentReport>& reports);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace bbnet
