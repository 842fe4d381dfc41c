// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bbnet/dataset.hpp"
#include "bbnet/experiment.hpp"
#include "bbnet/graph.hpp"
#include "bbnet/nn/layers.hpp"
#include "oracles.hpp"

using namespace bbnet;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void progress(const std::string& s) { std::fprintf(stderr, "  %s\n", s.c_str()); }

// 1. Connectivity measures against scalar-loop oracles.
Outcome connectivity_oracles() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst[4] = {0, 0, 0, 0};
  for (int rep = 0; rep < 50; ++rep) {
    Trial t;
    t.data = oracle::random_matrix(rng, 8, 64);
    const Matrix ph = oracle::phases(t.data);
    const PhaseSeries phase = instantaneous_phase(t);
    const Matrix got[4] = {pearson_matrix(t).weights, plv_matrix(phase).weights, pli_matrix(phase).weights,
                           rho_matrix(phase).weights};
    const Matrix want[4] = {
        oracle::pairwise(8, 1.0, [&](auto k, auto l) { return oracle::pearson(t.data, k, l); }),
        oracle::pairwise(8, 1.0, [&](auto k, auto l) { return oracle::plv(ph, k, l); }),
        oracle::pairwise(8, 0.0, [&](auto k, auto l) { return oracle::pli(ph, k, l); }),
        oracle::pairwise(8, 1.0, [&](auto k, auto l) { return oracle::rho(ph, k, l); })};
    for (int m = 0; m < 4; ++m) worst[m] = std::max(worst[m], (got[m] - want[m]).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  const double max_diff = *std::max_element(worst, worst + 4);
  return {max_diff <= 1e-10 && secs < 5.0,
          fmt("max|diff| COR %.2e PLV %.2e PLI %.2e RHO %.2e (<= 1e-10), %.2fs (< 5s)", worst[0], worst[1], worst[2],
              worst[3], secs)};
}

// 2. Feature extractor shapes.
Outcome feature_shapes() {
  Rng rng(3);
  std::string detail;
  bool ok = true;
  for (auto [t, f] : {std::pair<Eigen::Index, Eigen::Index>{1000, 812}, {200, 12}}) {
    ModelConfig c;
    c.n_channels = 62;
    c.input_len = std::size_t(t);
    c.n_classes = 54;
    Network<double> net(c);
    const Matrix h = net.feature_matrix(oracle::random_matrix(rng, 62, t));
    ok = ok && h.rows() == 62 && h.cols() == f;
    detail += fmt("62x%ld -> %ldx%ld (want 62x%ld) ", long(t), long(h.rows()), long(h.cols()), long(f));
  }
  return {ok, detail};
}

// 3. Finite-difference gradients of every layer and the end-to-end loss.
Outcome gradients() {
  using T = nn::Tensor<double>;
  const auto t0 = Clock::now();
  Rng rng(5);
  const auto rt = [&](nn::Shape s, bool grad = true, double lo = -1, double hi = 1) {
    std::vector<double> v(nn::numel(s));
    for (double& x : v) x = rng.uniform(lo, hi);
    return T::from_values(std::move(s), std::move(v), grad);
  };
  const auto project = [&](const T& y) {
    Rng pr(77);
    std::vector<double> v(y.size());
    for (double& x : v) x = pr.uniform(-1, 1);
    return nn::sum(nn::mul(y, T::from_values(y.shape(), std::move(v))));
  };

  std::vector<std::pair<std::string, double>> errs;
  T x = rt({2, 4, 10});
  T k = rt({4, 3});
  T kb = rt({4});
  errs.emplace_back("conv", oracle::gradient_error<double>(
                                [&] { return project(nn::depthwise_conv_time(x, k, kb)); }, {x, k, kb}));
  errs.emplace_back("pool", oracle::gradient_error<double>([&] { return project(nn::max_pool_time(x, 3)); }, {x}));
  T g = rt({4}, true, 0.5, 1.5);
  T b = rt({4});
  for (nn::Mode mode : {nn::Mode::Train, nn::Mode::Eval}) {
    errs.emplace_back(mode == nn::Mode::Train ? "bn-train" : "bn-eval", oracle::gradient_error<double>(
                                                                            [&] {
                                                                              std::vector<double> m(4, 0.1), v(4, 1.3);
                                                                              return project(nn::batch_norm(
                                                                                  x, g, b, std::span<double>(m),
                                                                                  std::span<double>(v), mode));
                                                                            },
                                                                            {x, g, b}));
  }
  T op = rt({2, 4, 4});
  GraphConv<double> gconv("g", 10, 3, rng);
  errs.emplace_back("gconv", oracle::gradient_error<double>([&] { return project(gconv.forward(op, x)); },
                                                            {op, x, gconv.weight().tensor}));
  T a2 = rt({4, 4});
  T h2 = rt({4, 3});
  T w2 = rt({3, 2});
  errs.emplace_back("gcn-rule", oracle::gradient_error<double>([&] { return project(gcn_layer_forward(a2, h2, w2)); },
                                                               {a2, h2, w2}));
  T d = rt({5, 6});
  T dw = rt({6, 3});
  T db = rt({3});
  errs.emplace_back("dense", oracle::gradient_error<double>([&] { return project(nn::linear(d, dw, db)); }, {d, dw, db}));
  errs.emplace_back("dropout", oracle::gradient_error<double>(
                                   [&] {
                                     Rng dr(9);
                                     return project(nn::dropout(d, 0.5, nn::Mode::Train, dr));
                                   },
                                   {d}));
  T logits = rt({5, 3});
  const std::vector<int> y{0, 2, 1, 1, 0};
  errs.emplace_back("softmax-ce", oracle::gradient_error<double>(
                                      [&] { return nn::softmax_cross_entropy(logits, y); }, {logits}));

  for (Variant v : {Variant::EegBbnet, Variant::GcnOnly}) {
    ModelConfig c;
    c.n_channels = 4;
    c.n_classes = 3;
    c.input_len = 24;
    c.conv_kernel = 5;
    c.pool_window = 3;
    c.gconv_dims = {6, 4};
    c.dense_dims = {8, 6};
    c.variant = v;
    c.seed = 3;
    Network<double> net(c);
    std::vector<GraphSample> samples;
    for (int i = 0; i < 4; ++i) {
      Matrix a = oracle::random_matrix(rng, 4, 4);
      a = (a + a.transpose()).eval() / 2;
      samples.push_back({oracle::random_matrix(rng, 4, 24), renormalize(AdjacencyMatrix{a, Measure::COR}), i % 3});
    }
    const auto batch = make_batch<double>(samples, std::vector<std::size_t>{0, 1, 2, 3});
    std::vector<T> wrt;
    for (auto* p : net.parameters()) wrt.push_back(p->tensor);
    for (nn::Mode mode : {nn::Mode::Train, nn::Mode::Eval}) {
      const std::string name = std::string(v == Variant::EegBbnet ? "eeg-bbnet" : "gcn-only") +
                               (mode == nn::Mode::Train ? "-train" : "-eval");
      errs.emplace_back(name, oracle::gradient_error<double>(
                                  [&] {
                                    return nn::softmax_cross_entropy(
                                        net.forward_logits(batch.signals, batch.ops, mode, 11), batch.labels);
                                  },
                                  wrt));
    }
  }
  const double secs = seconds_since(t0);
  double worst = 0;
  std::string detail;
  for (const auto& [name, e] : errs) {
    worst = std::max(worst, e);
    detail += fmt("%s %.1e ", name.c_str(), e);
  }
  return {worst <= 1e-4 && secs < 60.0, fmt("max rel err %.2e (<= 1e-4), %.1fs (< 60s): ", worst, secs) + detail};
}

// 4. Renormalized operator: exact symmetry, spectral radius <= 1 + 1e-8.
Outcome renormalization() {
  Rng rng(4);
  bool symmetric = true;
  double radius = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Matrix m = oracle::random_matrix(rng, 16, 16, 0.0, 1.0);
    m = (m + m.transpose()).eval();
    const Matrix op = renormalize(AdjacencyMatrix{m, Measure::COR}).matrix;
    symmetric = symmetric && (op == op.transpose());
    radius = std::max(radius, Eigen::SelfAdjointEigenSolver<Matrix>(op).eigenvalues().cwiseAbs().maxCoeff());
  }
  return {symmetric && radius <= 1.0 + 1e-8,
          fmt("exactly symmetric: %s, max |eigenvalue| %.12f (<= 1 + 1e-8)", symmetric ? "yes" : "no", radius)};
}

ExperimentConfig experiment_config(std::size_t max_epochs) {
  ExperimentConfig ec;
  ec.seed = 1;
  ec.model.max_epochs = max_epochs;
  ec.log = progress;
  return ec;
}

SynthConfig identification_set() {
  SynthConfig sc;
  sc.subjects = 10;
  sc.trials_per_subject = 100;
  sc.channels = 16;
  sc.samples = 1000;
  sc.seed = 7;
  return sc;
}

// Epoch cap for the full-size runs so that four measures fit the runtime budget on one core.
constexpr std::size_t kMaxEpochs = 30;

// 5. Synthetic identification, intra-session.
Outcome identification(const Dataset& ds) {
  const auto t0 = Clock::now();
  double mean[4];
  const Measure measures[4] = {Measure::COR, Measure::RHO, Measure::IDN, Measure::RDM};
  for (int i = 0; i < 4; ++i) {
    const auto r = run_intra_session(ds, measures[i], experiment_config(kMaxEpochs));
    mean[i] = r.mean_crr();
    std::fprintf(stderr, "  %s mean CRR %.4f sd %.4f (%.0fs elapsed)\n", std::string(to_string(measures[i])).c_str(),
                 mean[i], r.sd_crr(), seconds_since(t0));
  }
  const double secs = seconds_since(t0);
  const bool ok = mean[0] >= 0.90 && mean[1] >= 0.90 && mean[2] <= mean[0] && mean[3] <= 0.20 && secs <= 900.0;
  return {ok, fmt("COR %.4f RHO %.4f (>= 0.90), IDN %.4f (<= COR), RDM %.4f (<= 0.20), %.0fs (<= 900s)", mean[0],
                  mean[1], mean[2], mean[3], secs)};
}

// 6. Cross-session fine-tuning trend.
Outcome finetune_trend() {
  SynthConfig sc;
  sc.subjects = 10;
  sc.trials_per_subject = 40;
  sc.channels = 16;
  sc.samples = 1000;
  sc.seed = 11;
  sc.session_shift = 0.3;
  const Dataset s1 = generate_synthetic(sc);
  sc.session = Session::II;
  const Dataset s2 = generate_synthetic(sc);
  ExperimentConfig ec = experiment_config(kMaxEpochs);
  ec.repetitions = 5;
  const auto t0 = Clock::now();
  std::vector<double> fractions = finetune_grid(), crrs;
  std::string curve;
  for (double f : fractions) {
    const auto r = run_cross_session(s1, s2, f, Measure::COR, ec);
    crrs.push_back(r.mean_crr());
    curve += fmt("%.2f:%.3f ", f, crrs.back());
    std::fprintf(stderr, "  fraction %.2f CRR %.4f (%.0fs elapsed)\n", f, crrs.back(), seconds_since(t0));
  }
  const double rho = spearman(fractions, crrs);
  return {rho >= 0.8, fmt("Spearman %.3f (>= 0.8), %.0fs; ", rho, seconds_since(t0)) + curve};
}

// 7. Byte-identical repeated reports, bit-identical checkpoint round trip.
Outcome determinism() {
  SynthConfig sc;
  sc.subjects = 4;
  sc.trials_per_subject = 20;
  sc.channels = 8;
  sc.samples = 400;
  sc.seed = 3;
  const Dataset ds = generate_synthetic(sc);
  const auto report = [&](const std::function<void(std::size_t, TrainedModel&)>& on_model) {
    ExperimentConfig ec = experiment_config(5);
    ec.on_model = on_model;
    std::ostringstream out;
    write_report(out, {run_intra_session(ds, Measure::PLV, ec)});
    return out.str();
  };
  const auto path = std::filesystem::temp_directory_path() / "bbnet_acceptance.bbnet";
  bool outputs_identical = true;
  const std::string first = report([&](std::size_t fold, TrainedModel& m) {
    if (fold != 0) return;
    save_checkpoint(path, m.network);
    ModelConfig other = m.network.config();
    other.seed ^= 0x5555;
    Network<float> loaded(other);
    load_checkpoint(path, loaded);
    const Dataset pre = preprocess_dataset(ds, PreprocessConfig{});
    for (const auto& s : build_samples(pre, Measure::PLV, m.network.config(), 0)) {
      outputs_identical = outputs_identical && loaded.probabilities(s.signal, s.op) == m.network.probabilities(s.signal, s.op);
    }
  });
  const std::string second = report({});
  std::filesystem::remove(path);
  const bool same = first == second;
  return {same && outputs_identical, fmt("reports byte-identical: %s (%zu bytes), checkpoint eval outputs identical: %s",
                                         same ? "yes" : "no", first.size(), outputs_identical ? "yes" : "no")};
}

// 8. Electrode subsets: exact commutation and a complete N = 8 run.
Outcome electrode_subset(const Dataset& ds) {
  const auto groups = load_electrode_groups(std::filesystem::path(BBNET_DATA_DIR) / "electrode_groups.json");
  const std::string selection = "Fp1,F7,F3,Fz,F4,F8,C3,C4";
  const auto idx = resolve_channels(ds.layout, groups, selection);
  const Dataset pre = preprocess_dataset(ds, PreprocessConfig{});
  const Dataset sub_pre = preprocess_dataset(restrict_channels(ds, idx), PreprocessConfig{});
  bool exact = true;
  for (std::size_t i = 0; i < ds.trials.size(); i += 25) {
    const Matrix full = pearson_matrix(pre.trials[i]).weights;
    const Matrix sub = pearson_matrix(sub_pre.trials[i]).weights;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b)
        exact = exact && sub(Eigen::Index(a), Eigen::Index(b)) == full(Eigen::Index(idx[a]), Eigen::Index(idx[b]));
  }
  std::size_t n_seen = 0;
  ExperimentConfig ec = experiment_config(kMaxEpochs);
  ec.on_model = [&](std::size_t, TrainedModel& m) { n_seen = m.network.config().n_channels; };
  const auto r = run_electrode_subset(ds, groups, selection, Measure::COR, ec);
  const bool ok = exact && r.folds.size() == 5 && n_seen == 8;
  return {ok, fmt("subset COR == restricted full COR: %s, folds %zu, N = %zu, mean CRR %.4f", exact ? "exact" : "differs",
                  r.folds.size(), n_seen, r.mean_crr())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Acceptance checks");
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  const auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };

  Dataset ident;
  if (wanted(5) || wanted(8)) ident = generate_synthetic(identification_set());

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, connectivity_oracles},
      {2, feature_shapes},
      {3, gradients},
      {4, renormalization},
      {5, [&] { return identification(ident); }},
      {6, finetune_trend},
      {7, determinism},
      {8, [&] { return electrode_subset(ident); }},
  };
  int failed = 0;
  for (const auto& [n, check] : criteria) {
    if (!wanted(n)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
