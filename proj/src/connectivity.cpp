#include "bbnet/connectivity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <numbers>

#include "bbnet/error.hpp"
#include "bbnet/rng.hpp"

namespace bbnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_channel(const PhaseSeries& phase, std::size_t k) {
  if (k >= phase.channels()) {
    throw ParameterError("channel index " + std::to_string(k) + " out of range for " +
                         std::to_string(phase.channels()) + " channels");
  }
}

// Signed difference wrapped to (-pi, pi].
double wrapped_difference(double a, double b) {
  double d = std::fmod(a - b, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  if (d > std::numbers::pi) d -= kTwoPi;
  return d;
}

double signum(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

template <typename PairFn>
AdjacencyMatrix symmetric_from_pairs(std::size_t n, Measure measure, double diagonal, PairFn&& fn) {
  AdjacencyMatrix adj;
  adj.measure = measure;
  adj.weights = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    adj.weights(kk, kk) = diagonal;
    for (std::size_t l = k + 1; l < n; ++l) {
      const auto ll = static_cast<Eigen::Index>(l);
      const double w = fn(k, l);
      adj.weights(kk, ll) = w;
      adj.weights(ll, kk) = w;
    }
  }
  return adj;
}

}  // namespace

std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::DIST: return "dist";
    case Measure::COR: return "cor";
    case Measure::PLV: return "plv";
    case Measure::PLI: return "pli";
    case Measure::RHO: return "rho";
    case Measure::IDN: return "idn";
    case Measure::RDM: return "rdm";
  }
  return "?";
}

Measure parse_measure(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Measure m : {Measure::DIST, Measure::COR, Measure::PLV, Measure::PLI, Measure::RHO, Measure::IDN,
                    Measure::RDM}) {
    if (lower == to_string(m)) return m;
  }
  throw ParameterError("unknown connectivity measure '" + std::string(name) + "'");
}

AdjacencyMatrix euclidean_distance_matrix(const ElectrodeLayout& layout) {
  validate_layout(layout);
  return symmetric_from_pairs(layout.size(), Measure::DIST, 0.0, [&](std::size_t k, std::size_t l) {
    const double dx = layout.positions[k].x - layout.positions[l].x;
    const double dy = layout.positions[k].y - layout.positions[l].y;
    return std::hypot(dx, dy);
  });
}

AdjacencyMatrix pearson_matrix(const Trial& trial) {
  validate_trial(trial);
  const Eigen::Index n = trial.data.rows();
  // Centre each channel, then scale to unit norm; r is the inner product.
  Matrix z = trial.data.colwise() - trial.data.rowwise().mean();
  for (Eigen::Index c = 0; c < n; ++c) {
    const double norm = z.row(c).norm();
    if (norm == 0.0) {
      throw DegenerateSignalError("channel " + std::to_string(c) + " has zero variance");
    }
    z.row(c) /= norm;
  }
  return symmetric_from_pairs(static_cast<std::size_t>(n), Measure::COR, 1.0, [&](std::size_t k, std::size_t l) {
    const double r = z.row(static_cast<Eigen::Index>(k)).dot(z.row(static_cast<Eigen::Index>(l)));
    return std::clamp(r, -1.0, 1.0);
  });
}

std::vector<double> relative_phase(const PhaseSeries& phase, std::size_t k, std::size_t l) {
  require_channel(phase, k);
  require_channel(phase, l);
  if (k == l) throw ParameterError("relative phase needs two distinct channels");
  std::vector<double> out(phase.samples());
  const auto pk = phase.phase.row(static_cast<Eigen::Index>(k));
  const auto pl = phase.phase.row(static_cast<Eigen::Index>(l));
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto tt = static_cast<Eigen::Index>(t);
    out[t] = std::fmod(std::abs(pk(tt) - pl(tt)), kTwoPi);
  }
  return out;
}

AdjacencyMatrix plv_matrix(const PhaseSeries& phase) {
  const double inv_t = 1.0 / static_cast<double>(phase.samples());
  return symmetric_from_pairs(phase.channels(), Measure::PLV, 1.0, [&](std::size_t k, std::size_t l) {
    double re = 0.0;
    double im = 0.0;
    for (double d : relative_phase(phase, k, l)) {
      re += std::cos(d);
      im += std::sin(d);
    }
    return std::min(1.0, std::hypot(re, im) * inv_t);
  });
}

AdjacencyMatrix pli_matrix(const PhaseSeries& phase, PliConvention convention) {
  const double inv_t = 1.0 / static_cast<double>(phase.samples());
  return symmetric_from_pairs(phase.channels(), Measure::PLI, 0.0, [&](std::size_t k, std::size_t l) {
    double acc = 0.0;
    if (convention == PliConvention::Absolute) {
      for (double d : relative_phase(phase, k, l)) acc += signum(d);
    } else {
      const auto pk = phase.phase.row(static_cast<Eigen::Index>(k));
      const auto pl = phase.phase.row(static_cast<Eigen::Index>(l));
      for (Eigen::Index t = 0; t < pk.size(); ++t) acc += signum(wrapped_difference(pk(t), pl(t)));
    }
    return std::abs(acc) * inv_t;
  });
}

AdjacencyMatrix rho_matrix(const PhaseSeries& phase, std::size_t bins) {
  const std::size_t t_len = phase.samples();
  if (t_len < 2) throw ParameterError("RHO needs at least 2 samples");
  if (bins == 0) bins = t_len;
  if (bins < 2) throw ParameterError("RHO needs at least 2 histogram bins");
  // Maximal entropy of the uniform distribution over the bins (ln T by default).
  const double s_max = std::log(static_cast<double>(bins));
  const double inv_t = 1.0 / static_cast<double>(t_len);

  std::vector<std::uint32_t> counts(bins);
  return symmetric_from_pairs(phase.channels(), Measure::RHO, 1.0, [&](std::size_t k, std::size_t l) {
    std::fill(counts.begin(), counts.end(), 0U);
    for (double d : relative_phase(phase, k, l)) {
      auto b = static_cast<std::size_t>(d / kTwoPi * static_cast<double>(bins));
      counts[std::min(b, bins - 1)] += 1;
    }
    double entropy = 0.0;
    for (std::uint32_t c : counts) {
      if (c == 0) continue;
      const double p = c * inv_t;
      entropy -= p * std::log(p);
    }
    return std::clamp(1.0 - entropy / s_max, 0.0, 1.0);
  });
}

AdjacencyMatrix identity_adjacency(std::size_t n) {
  if (n < 1) throw ParameterError("adjacency size must be >= 1");
  return {Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), Measure::IDN};
}

AdjacencyMatrix random_adjacency(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("adjacency size must be >= 1");
  Rng rng(seed);
  return symmetric_from_pairs(n, Measure::RDM, 1.0, [&](std::size_t, std::size_t) { return rng.uniform(-1.0, 1.0); });
}

AdjacencyMatrix normalize_adjacency(const AdjacencyMatrix& adj) {
  if (!adj.weights.allFinite()) throw InputError("adjacency contains non-finite entries");
  AdjacencyMatrix out = adj;
  const double lo = adj.weights.minCoeff();
  const double hi = adj.weights.maxCoeff();
  if (hi == lo) {
    out.weights.setZero();
    return out;
  }
  const double scale = 2.0 / (hi - lo);
  out.weights = ((adj.weights.array() - lo) * scale - 1.0).matrix();
  // Pin the extremes exactly despite rounding.
  for (Eigen::Index i = 0; i < out.weights.size(); ++i) {
    double& w = out.weights.data()[i];
    if (adj.weights.data()[i] == lo) w = -1.0;
    if (adj.weights.data()[i] == hi) w = 1.0;
    w = std::clamp(w, -1.0, 1.0);
  }
  return out;
}

AdjacencyMatrix compute_adjacency(Measure measure, const Trial& trial, const ElectrodeLayout& layout,
                                  const ConnectivityOptions& options, std::uint64_t seed) {
  switch (measure) {
    case Measure::DIST: return euclidean_distance_matrix(layout);
    case Measure::COR: return pearson_matrix(trial);
    case Measure::PLV: return plv_matrix(instantaneous_phase(trial));
    case Measure::PLI: return pli_matrix(instantaneous_phase(trial), options.pli);
    case Measure::RHO: return rho_matrix(instantaneous_phase(trial), options.rho_bins);
    case Measure::IDN: return identity_adjacency(trial.channels());
    case Measure::RDM: return random_adjacency(trial.channels(), seed);
  }
  throw ParameterError("unhandled measure");
}

AdjacencyMatrix model_adjacency(Measure measure, const Trial& trial, const ElectrodeLayout& layout,
                                const ConnectivityOptions& options, std::uint64_t seed) {
  AdjacencyMatrix raw = compute_adjacency(measure, trial, layout, options, seed);
  if (measure == Measure::IDN || measure == Measure::RDM) return raw;
  return normalize_adjacency(raw);
}

}  // namespace bbnet
