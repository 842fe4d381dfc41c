#include "bbnet/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace bbnet {

namespace {

constexpr std::uint64_t kInitStream = 0x1001;
constexpr std::uint64_t kShuffleStream = 0x2002;
constexpr std::uint64_t kDropoutStream = 0x3003;
constexpr std::size_t kEvalBatch = 64;

template <typename S>
std::vector<std::vector<S>> snapshot_buffers(std::vector<nn::Buffer<S>> buffers) {
  std::vector<std::vector<S>> out;
  for (const auto& b : buffers) out.push_back(*b.values);
  return out;
}

template <typename S>
void restore_buffers(std::vector<nn::Buffer<S>> buffers, const std::vector<std::vector<S>>& values) {
  for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].values = values[i];
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::EegBbnet ? "eegbbnet" : "gcn-only"; }

Variant parse_variant(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "eegbbnet" || lower == "eeg-bbnet") return Variant::EegBbnet;
  if (lower == "gcn-only" || lower == "gcn") return Variant::GcnOnly;
  throw ParameterError("unknown model variant '" + std::string(name) + "'");
}

std::size_t feature_length(const ModelConfig& config) {
  if (config.variant == Variant::GcnOnly) return config.input_len;
  const std::size_t shrink = 2 * (config.conv_kernel - 1) + 2 * (config.pool_window - 1);
  if (config.input_len <= shrink) {
    throw ShapeError("input length " + std::to_string(config.input_len) + " is too short for kernel " +
                     std::to_string(config.conv_kernel) + " and pool " + std::to_string(config.pool_window) +
                     " (needs at least " + std::to_string(shrink + 1) + " samples)");
  }
  return config.input_len - shrink;
}

void validate(const ModelConfig& config) {
  if (config.n_channels < 2) throw ParameterError("model needs at least 2 channels");
  if (config.n_classes < 2) throw ParameterError("model needs at least 2 classes");
  if (config.conv_kernel < 1 || config.pool_window < 1) throw ParameterError("kernel and pool sizes must be >= 1");
  if (config.gconv_dims.empty()) throw ParameterError("at least one graph convolution layer is required");
  for (std::size_t d : config.gconv_dims) {
    if (d == 0) throw ParameterError("graph convolution widths must be positive");
  }
  for (std::size_t d : config.dense_dims) {
    if (d == 0) throw ParameterError("dense widths must be positive");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  if (!(config.learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (config.batch_size < 2) throw ParameterError("batch size must be >= 2 (batch normalization statistics)");
  if (config.patience < 1 || config.max_epochs < 1) throw ParameterError("patience and max_epochs must be >= 1");
  (void)feature_length(config);
}

template <typename S>
Batch<S> make_batch(const std::vector<GraphSample>& samples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ParameterError("empty batch");
  const auto& first = samples.at(indices[0]);
  const std::size_t n = static_cast<std::size_t>(first.signal.rows());
  const std::size_t t = static_cast<std::size_t>(first.signal.cols());
  const std::size_t b = indices.size();
  std::vector<S> sig(b * n * t);
  std::vector<S> ops(b * n * n);
  Batch<S> batch;
  batch.labels.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& s = samples.at(indices[i]);
    if (static_cast<std::size_t>(s.signal.rows()) != n || static_cast<std::size_t>(s.signal.cols()) != t ||
        s.op.size() != n) {
      throw ShapeError("samples in a batch must share channel count and length");
    }
    std::transform(s.signal.data(), s.signal.data() + n * t, sig.begin() + static_cast<std::ptrdiff_t>(i * n * t),
                   [](double v) { return static_cast<S>(v); });
    std::transform(s.op.matrix.data(), s.op.matrix.data() + n * n, ops.begin() + static_cast<std::ptrdiff_t>(i * n * n),
                   [](double v) { return static_cast<S>(v); });
    batch.labels.push_back(s.label);
  }
  batch.signals = nn::Tensor<S>::from_values({b, n, t}, std::move(sig));
  batch.ops = nn::Tensor<S>::from_values({b, n, n}, std::move(ops));
  return batch;
}

template <typename S>
Network<S>::Network(const ModelConfig& config) : config_(config) {
  validate(config_);
  Rng rng(derive_seed(config_.seed, kInitStream));
  const std::size_t n = config_.n_channels;
  if (config_.variant == Variant::EegBbnet) {
    conv1_ = nn::DepthwiseConv<S>("conv1", n, config_.conv_kernel, rng);
    bn1_ = nn::BatchNorm<S>("bn1", n, config_.batch_norm);
    conv2_ = nn::DepthwiseConv<S>("conv2", n, config_.conv_kernel, rng);
    bn2_ = nn::BatchNorm<S>("bn2", n, config_.batch_norm);
  }
  std::size_t width = feature_length(config_);
  for (std::size_t i = 0; i < config_.gconv_dims.size(); ++i) {
    gconv_.emplace_back("gconv" + std::to_string(i + 1), width, config_.gconv_dims[i], rng);
    width = config_.gconv_dims[i];
  }
  width *= n;
  for (std::size_t i = 0; i < config_.dense_dims.size(); ++i) {
    dense_.emplace_back("dense" + std::to_string(i + 1), width, config_.dense_dims[i], rng);
    width = config_.dense_dims[i];
  }
  output_ = nn::Dense<S>("output", width, config_.n_classes, rng);
}

template <typename S>
nn::Tensor<S> Network<S>::node_features(const nn::Tensor<S>& signals, nn::Mode mode, Rng& rng) {
  if (signals.rank() != 3 || signals.dim(1) != config_.n_channels || signals.dim(2) != config_.input_len) {
    throw ShapeError("network expects signals [B, " + std::to_string(config_.n_channels) + ", " +
                     std::to_string(config_.input_len) + "], got " + nn::shape_string(signals.shape()));
  }
  if (config_.variant == Variant::GcnOnly) return signals;
  auto h = conv1_.forward(signals);
  h = bn1_.forward(h, mode);
  h = nn::max_pool_time(h, config_.pool_window);
  h = conv2_.forward(h);
  h = bn2_.forward(h, mode);
  h = nn::max_pool_time(h, config_.pool_window);
  return nn::dropout(h, config_.dropout, mode, rng);
}

template <typename S>
nn::Tensor<S> Network<S>::forward_logits(const nn::Tensor<S>& signals, const nn::Tensor<S>& ops, nn::Mode mode,
                                         std::uint64_t dropout_seed) {
  if (ops.rank() != 3 || ops.dim(0) != signals.dim(0) || ops.dim(1) != config_.n_channels ||
      ops.dim(2) != config_.n_channels) {
    throw ShapeError("graph operators " + nn::shape_string(ops.shape()) + " do not match signals " +
                     nn::shape_string(signals.shape()));
  }
  Rng rng(dropout_seed);
  auto h = node_features(signals, mode, rng);
  for (auto& layer : gconv_) {
    h = layer.forward(ops, h);
    h = nn::dropout(h, config_.dropout, mode, rng);
  }
  const std::size_t batch = signals.dim(0);
  h = nn::reshape(h, {batch, h.size() / batch});
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    h = nn::relu(dense_[i].forward(h));
    if (i + 1 < dense_.size()) h = nn::dropout(h, config_.dropout, mode, rng);
  }
  return output_.forward(h);
}

template <typename S>
std::vector<double> Network<S>::probabilities(const Matrix& signal, const NormalizedOperator& op, nn::Mode mode,
                                              std::uint64_t dropout_seed) {
  std::vector<GraphSample> one{GraphSample{signal, op, 0}};
  const std::size_t idx = 0;
  auto batch = make_batch<S>(one, std::span<const std::size_t>(&idx, 1));
  const auto probs = nn::softmax(forward_logits(batch.signals, batch.ops, mode, dropout_seed));
  return {probs.values().begin(), probs.values().end()};
}

template <typename S>
Matrix Network<S>::feature_matrix(const Matrix& signal, nn::Mode mode, std::uint64_t dropout_seed) {
  const std::size_t n = static_cast<std::size_t>(signal.rows());
  const std::size_t t = static_cast<std::size_t>(signal.cols());
  std::vector<S> v(n * t);
  std::transform(signal.data(), signal.data() + n * t, v.begin(), [](double x) { return static_cast<S>(x); });
  Rng rng(dropout_seed);
  const auto h = node_features(nn::Tensor<S>::from_values({1, n, t}, std::move(v)), mode, rng);
  return to_matrix(nn::reshape(h, {h.dim(1), h.dim(2)}));
}

template <typename S>
std::vector<nn::Parameter<S>*> Network<S>::parameters() {
  std::vector<nn::Parameter<S>*> out;
  if (config_.variant == Variant::EegBbnet) {
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
  }
  for (auto& g : gconv_) g.collect(out);
  for (auto& d : dense_) d.collect(out);
  output_.collect(out);
  return out;
}

template <typename S>
std::vector<nn::Buffer<S>> Network<S>::buffers() {
  std::vector<nn::Buffer<S>> out;
  if (config_.variant == Variant::EegBbnet) {
    bn1_.collect_buffers(out);
    bn2_.collect_buffers(out);
  }
  return out;
}

template <typename S>
std::size_t Network<S>::parameter_count() {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += p->tensor.size();
  return total;
}

template <typename S>
std::vector<nn::TensorRecord> Network<S>::to_records() {
  std::vector<nn::TensorRecord> out;
  for (const auto* p : parameters()) {
    nn::TensorRecord r{p->name, p->tensor.shape(), {}};
    for (S v : p->tensor.values()) r.values.push_back(static_cast<float>(v));
    out.push_back(std::move(r));
  }
  for (const auto& b : buffers()) {
    nn::TensorRecord r{b.name, b.shape, {}};
    for (S v : *b.values) r.values.push_back(static_cast<float>(v));
    out.push_back(std::move(r));
  }
  return out;
}

template <typename S>
void Network<S>::load_records(const std::vector<nn::TensorRecord>& records) {
  std::map<std::string, const nn::TensorRecord*> by_name;
  for (const auto& r : records) by_name[r.name] = &r;
  auto lookup = [&](const std::string& name, const nn::Shape& shape) -> const nn::TensorRecord& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ShapeError("checkpoint lacks tensor '" + name + "'");
    if (it->second->shape != shape) {
      throw ShapeError("checkpoint tensor '" + name + "' has shape " + nn::shape_string(it->second->shape) +
                       ", network expects " + nn::shape_string(shape));
    }
    return *it->second;
  };
  const auto params = parameters();
  const auto bufs = buffers();
  if (records.size() != params.size() + bufs.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(records.size()) + " tensors, network has " +
                     std::to_string(params.size() + bufs.size()));
  }
  for (auto* p : params) {
    const auto& r = lookup(p->name, p->tensor.shape());
    std::transform(r.values.begin(), r.values.end(), p->tensor.values().begin(),
                   [](float v) { return static_cast<S>(v); });
  }
  for (const auto& b : bufs) {
    const auto& r = lookup(b.name, b.shape);
    std::transform(r.values.begin(), r.values.end(), b.values->begin(), [](float v) { return static_cast<S>(v); });
  }
}

template class Network<float>;
template class Network<double>;
template Batch<float> make_batch<float>(const std::vector<GraphSample>&, std::span<const std::size_t>);
template Batch<double> make_batch<double>(const std::vector<GraphSample>&, std::span<const std::size_t>);

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (best_epoch_ == 0 || val_loss < best_loss_) {
    best_epoch_ = epoch;
    best_loss_ = val_loss;
    since_best_ = 0;
    improved_last_ = true;
    return false;
  }
  improved_last_ = false;
  ++since_best_;
  return since_best_ >= patience_;
}

double evaluate_loss(Network<float>& network, const std::vector<GraphSample>& samples) {
  if (samples.empty()) throw ParameterError("cannot evaluate loss on an empty set");
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < samples.size(); start += kEvalBatch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + kEvalBatch); ++i) idx.push_back(i);
    auto batch = make_batch<float>(samples, idx);
    const auto logits = network.forward_logits(batch.signals, batch.ops, nn::Mode::Eval, 0);
    total += static_cast<double>(nn::softmax_cross_entropy(logits, batch.labels).item()) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(samples.size());
}

TrainedModel fit(const std::vector<GraphSample>& train, const std::vector<GraphSample>& validation,
                 const ModelConfig& config) {
  validate(config);
  if (train.empty()) throw ParameterError("training split is empty");
  if (validation.empty()) throw ParameterError("validation split is empty");
  std::vector<bool> seen(config.n_classes, false);
  for (const auto* set : {&train, &validation}) {
    for (const auto& s : *set) {
      if (s.label < 0 || static_cast<std::size_t>(s.label) >= config.n_classes) {
        throw ParameterError("label " + std::to_string(s.label) + " outside [0, " + std::to_string(config.n_classes) + ")");
      }
    }
  }
  for (const auto& s : train) seen[static_cast<std::size_t>(s.label)] = true;
  if (std::count(seen.begin(), seen.end(), true) < 2) throw ParameterError("training split needs at least 2 classes");

  TrainedModel result{config, Network<float>(config), {}, 0};
  Network<float>& net = result.network;
  const auto params = net.parameters();
  nn::Adam<float> adam(params, nn::AdamOptions{config.learning_rate});
  EarlyStopping stopper(config.patience);
  auto best_params = nn::snapshot(params);
  auto best_buffers = snapshot_buffers(net.buffers());

  std::vector<std::size_t> order(train.size());
  std::uint64_t global_step = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(derive_seed(config.seed, kShuffleStream), epoch));
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    // Batch boundaries; a trailing single sample joins the previous batch.
    std::vector<std::size_t> bounds;
    for (std::size_t s = 0; s < order.size(); s += config.batch_size) bounds.push_back(s);
    bounds.push_back(order.size());
    if (bounds.size() > 2 && bounds[bounds.size() - 1] - bounds[bounds.size() - 2] == 1) {
      bounds.erase(bounds.end() - 2);
    }

    double train_loss = 0.0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::span<const std::size_t> idx(order.data() + bounds[b], bounds[b + 1] - bounds[b]);
      auto batch = make_batch<float>(train, idx);
      const auto logits = net.forward_logits(batch.signals, batch.ops, nn::Mode::Train,
                                             derive_seed(derive_seed(config.seed, kDropoutStream), global_step++));
      const auto loss = nn::softmax_cross_entropy(logits, batch.labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b) + " (learning rate " + std::to_string(config.learning_rate) + ")");
      }
      nn::backward(loss);
      adam.step();
      adam.zero_grad();
      train_loss += value * static_cast<double>(idx.size());
    }
    train_loss /= static_cast<double>(train.size());

    const double val_loss = evaluate_loss(net, validation);
    if (!std::isfinite(val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back({epoch, train_loss, val_loss});
    const bool stop = stopper.update(epoch, val_loss);
    if (stopper.improved_last()) {
      best_params = nn::snapshot(params);
      best_buffers = snapshot_buffers(net.buffers());
    }
    if (stop) break;
  }

  nn::restore(params, best_params);
  restore_buffers(net.buffers(), best_buffers);
  result.best_epoch = stopper.best_epoch();
  return result;
}

int argmax_class(std::span<const double> probabilities) {
  if (probabilities.empty()) throw ParameterError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return static_cast<int>(best);
}

int predict(TrainedModel& model, const GraphSample& sample) {
  const auto p = model.network.probabilities(sample.signal, sample.op, nn::Mode::Eval);
  return argmax_class(p);
}

std::vector<int> predict_all(TrainedModel& model, const std::vector<GraphSample>& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  const std::size_t m = model.config.n_classes;
  for (std::size_t start = 0; start < samples.size(); start += kEvalBatch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(samples.size(), start + kEvalBatch); ++i) idx.push_back(i);
    auto batch = make_batch<float>(samples, idx);
    const auto probs = nn::softmax(model.network.forward_logits(batch.signals, batch.ops, nn::Mode::Eval, 0));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      std::vector<double> row(m);
      for (std::size_t j = 0; j < m; ++j) row[j] = probs[r * m + j];
      out.push_back(argmax_class(row));
    }
  }
  return out;
}

void write_history(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch\ttrain_loss\tval_loss\n";
  char line[96];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%zu\t%.9g\t%.9g\n", r.epoch, r.train_loss, r.val_loss);
    out << line;
  }
}

void save_checkpoint(const std::filesystem::path& path, Network<float>& network) {
  nn::write_checkpoint(path, network.to_records());
}

void load_checkpoint(const std::filesystem::path& path, Network<float>& network) {
  network.load_records(nn::read_checkpoint(path));
}

}  // namespace bbnet
