#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bbnet/connectivity.hpp"
#include "bbnet/graph.hpp"
#include "bbnet/nn/adam.hpp"
#include "bbnet/nn/checkpoint.hpp"
#include "bbnet/nn/layers.hpp"

namespace bbnet {

enum class Variant : std::uint8_t {
  EegBbnet,  // convolutional front end -> graph convolution -> dense head
  GcnOnly,   // raw preprocessed signal as node features
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

struct ModelConfig {
  std::size_t n_channels = 62;
  std::size_t input_len = 1000;
  std::size_t n_classes = 2;
  Measure measure = Measure::COR;
  Variant variant = Variant::EegBbnet;
  std::size_t conv_kernel = 64;
  std::size_t pool_window = 32;
  std::vector<std::size_t> gconv_dims{64, 32};
  std::vector<std::size_t> dense_dims{256, 128};
  double dropout = 0.2;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t patience = 20;
  std::size_t max_epochs = 500;
  std::uint64_t seed = 0;
  DegreeMode degree = DegreeMode::Absolute;
  ConnectivityOptions connectivity{};
  nn::BatchNormOptions batch_norm{};
};

/// Throws ParameterError/ShapeError for unusable configurations.
void validate(const ModelConfig& config);

/// Node feature count produced by the front end: T - 2(kernel-1) - 2(pool-1),
/// or T itself for the GCN-only variant.
std::size_t feature_length(const ModelConfig& config);

/// One graph ready for the network: preprocessed signal, its operator, and the class label.
struct GraphSample {
  Matrix signal;
  NormalizedOperator op;
  int label = 0;
};

template <typename S>
struct Batch {
  nn::Tensor<S> signals;  // [B, N, T]
  nn::Tensor<S> ops;      // [B, N, N]
  std::vector<int> labels;
};

template <typename S>
Batch<S> make_batch(const std::vector<GraphSample>& samples, std::span<const std::size_t> indices);

/// EEG-BBNet: depthwise temporal convolutions, two graph convolutions and a dense classifier.
template <typename S>
class Network {
 public:
  explicit Network(const ModelConfig& config);
  // Parameters are shared handles; copying would alias them.
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Logits [B, M]. `dropout_seed` fixes every dropout mask of the pass.
  nn::Tensor<S> forward_logits(const nn::Tensor<S>& signals, const nn::Tensor<S>& ops, nn::Mode mode,
                               std::uint64_t dropout_seed);

  /// Node features H0 [B, N, F] from the front end (the signal itself for GcnOnly).
  nn::Tensor<S> node_features(const nn::Tensor<S>& signals, nn::Mode mode, Rng& rng);

  /// Softmax probabilities for one graph.
  std::vector<double> probabilities(const Matrix& signal, const NormalizedOperator& op, nn::Mode mode = nn::Mode::Eval,
                                    std::uint64_t dropout_seed = 0);

  /// N x F feature matrix of one trial.
  Matrix feature_matrix(const Matrix& signal, nn::Mode mode = nn::Mode::Eval, std::uint64_t dropout_seed = 0);

  std::vector<nn::Parameter<S>*> parameters();
  std::vector<nn::Buffer<S>> buffers();
  std::size_t parameter_count();

  std::vector<nn::TensorRecord> to_records();
  /// Loads values by name; names and shapes must match this network exactly.
  void load_records(const std::vector<nn::TensorRecord>& records);

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  nn::DepthwiseConv<S> conv1_;
  nn::BatchNorm<S> bn1_;
  nn::DepthwiseConv<S> conv2_;
  nn::BatchNorm<S> bn2_;
  std::vector<GraphConv<S>> gconv_;
  std::vector<nn::Dense<S>> dense_;
  nn::Dense<S> output_;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

/// Patience rule on validation loss: stop once `patience` consecutive epochs fail
/// to improve strictly on the best loss so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Records the loss of `epoch` (1-based); returns true when training should stop.
  bool update(std::size_t epoch, double val_loss);
  bool improved_last() const { return improved_last_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  double best_loss_ = 0.0;
  std::size_t since_best_ = 0;
  bool improved_last_ = false;
};

struct TrainedModel {
  ModelConfig config;
  Network<float> network;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

/// Minimizes the mean cross-entropy with Adam in shuffled mini-batches, evaluates the
/// validation loss after every epoch, stops on the patience rule or the epoch cap, and
/// restores the parameters of the best validation epoch.
TrainedModel fit(const std::vector<GraphSample>& train, const std::vector<GraphSample>& validation,
                 const ModelConfig& config);

/// Mean cross-entropy in eval mode.
double evaluate_loss(Network<float>& network, const std::vector<GraphSample>& samples);

/// Index of the largest probability; ties resolve to the lowest index.
int argmax_class(std::span<const double> probabilities);

int predict(TrainedModel& model, const GraphSample& sample);
std::vector<int> predict_all(TrainedModel& model, const std::vector<GraphSample>& samples);

/// One "epoch<TAB>train_loss<TAB>val_loss" line per record, with a header.
void write_history(std::ostream& out, const std::vector<EpochRecord>& history);

void save_checkpoint(const std::filesystem::path& path, Network<float>& network);
void load_checkpoint(const std::filesystem::path& path, Network<float>& network);

}  // namespace bbnet
