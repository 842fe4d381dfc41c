#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "bbnet/dataset.hpp"
#include "bbnet/error.hpp"
#include "bbnet/rng.hpp"

namespace bbnet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLowHz = 4.0;
constexpr double kHighHz = 36.0;
constexpr double kAmplitudeUv = 10.0;
constexpr double kProfileDecay = 0.5;
constexpr double kAmplitudeJitter = 0.25;
constexpr double kCouplingJitter = 0.15;
constexpr double kLinewidthHz = 2.0;

enum Stream : std::uint64_t { kFrequencies = 1, kCouplings = 2, kSessionShift = 3, kTrials = 4 };

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg) {
  if (cfg.subjects < 2) throw ParameterError("synthetic data needs at least 2 subjects");
  if (cfg.trials_per_subject < 1) throw ParameterError("synthetic data needs at least 1 trial per subject");
  if (cfg.channels < 4) throw ParameterError("synthetic data needs at least 4 channels");
  if (cfg.samples < 200) throw ParameterError("synthetic data needs at least 200 samples per trial");
  if (cfg.sources < 1) throw ParameterError("synthetic data needs at least one source");
  if (cfg.oscillators < 1) throw ParameterError("synthetic data needs at least one oscillator");
  if (!(cfg.session_shift >= 0.0) || !std::isfinite(cfg.session_shift)) {
    throw ParameterError("session_shift must be finite and non-negative");
  }
  if (std::isnan(cfg.snr_db)) throw ParameterError("snr_db must not be NaN");
  if (!(cfg.sample_rate_hz > 2.0 * kHighHz)) {
    throw ParameterError("sample rate must exceed " + std::to_string(2.0 * kHighHz) + " Hz");
  }

  const std::size_t n = cfg.channels;
  const std::size_t t_len = cfg.samples;
  const std::size_t k_osc = cfg.oscillators;

  Dataset ds;
  ds.layout = standard_montage(n);
  ds.subject_count = cfg.subjects;
  ds.task = cfg.task;
  ds.session = cfg.session;
  ds.sample_rate_hz = cfg.sample_rate_hz;

  std::vector<double> freq(k_osc);
  {
    Rng rng(derive_seed(derive_seed(cfg.seed, kFrequencies), static_cast<std::uint64_t>(cfg.task)));
    for (double& f : freq) f = rng.uniform(kLowHz, kHighHz);
  }

  // Geometric power profile across the oscillator bank.
  std::vector<double> gain(k_osc);
  double norm = 0.0;
  for (std::size_t j = 0; j < k_osc; ++j) {
    gain[j] = std::pow(kProfileDecay, static_cast<double>(j));
    norm += gain[j] * gain[j];
  }
  for (double& g : gain) g *= kAmplitudeUv / std::sqrt(norm);
  const double noise_sd = std::isinf(cfg.snr_db) && cfg.snr_db > 0
                              ? 0.0
                              : kAmplitudeUv * std::sqrt(0.5 / std::pow(10.0, cfg.snr_db / 10.0));
  // Phase diffusion giving each oscillator a Lorentzian line of width kLinewidthHz.
  const double drift_sd = std::sqrt(kTwoPi * kLinewidthHz / cfg.sample_rate_hz);
  const std::uint64_t trial_base =
      derive_seed(derive_seed(cfg.seed, kTrials),
                  static_cast<std::uint64_t>(cfg.session) * 16 + static_cast<std::uint64_t>(cfg.task));

  // Each channel reads one latent source through a rotation of the source's in-phase and
  // quadrature parts by its offset psi: x_c = Re(exp(i psi_c) z_g(c)). All sources share
  // one spectrum, so only the channel-to-source assignment and the offsets differ
  // between subjects.
  std::vector<std::size_t> source_of(n);
  Vector offset(static_cast<Eigen::Index>(n));
  std::vector<std::vector<std::complex<double>>> sources(cfg.sources);
  std::vector<double> wave(t_len);

  ds.trials.reserve(cfg.subjects * cfg.trials_per_subject);
  for (std::size_t s = 0; s < cfg.subjects; ++s) {
    Rng couple_rng(derive_seed(derive_seed(cfg.seed, kCouplings), s));
    for (std::size_t c = 0; c < n; ++c) {
      source_of[c] = static_cast<std::size_t>(couple_rng.below(cfg.sources));
      offset(static_cast<Eigen::Index>(c)) = couple_rng.uniform(0.0, kTwoPi);
    }
    if (cfg.session == Session::II && cfg.session_shift > 0.0) {
      Rng shift_rng(derive_seed(derive_seed(cfg.seed, kSessionShift), s));
      for (std::size_t c = 0; c < n; ++c) {
        if (shift_rng.uniform() < cfg.session_shift) source_of[c] = static_cast<std::size_t>(shift_rng.below(cfg.sources));
        offset(static_cast<Eigen::Index>(c)) += cfg.session_shift * std::numbers::pi * shift_rng.normal();
      }
    }

    for (std::size_t tr = 0; tr < cfg.trials_per_subject; ++tr) {
      Rng rng(derive_seed(trial_base, s * cfg.trials_per_subject + tr));
      for (auto& z : sources) {
        std::fill(wave.begin(), wave.end(), 0.0);
        for (std::size_t j = 0; j < k_osc; ++j) {
          const double amp = gain[j] * std::exp(kAmplitudeJitter * rng.normal());
          const double step = kTwoPi * freq[j] / cfg.sample_rate_hz;
          double phase = rng.uniform(0.0, kTwoPi);
          for (std::size_t t = 0; t < t_len; ++t) {
            wave[t] += amp * std::cos(phase);
            phase = std::fmod(phase + step + drift_sd * rng.normal(), kTwoPi);
          }
        }
        if (noise_sd > 0.0) {
          for (double& v : wave) v += noise_sd * rng.normal();
        }
        z = analytic_signal(wave);
      }

      Trial trial;
      trial.subject_id = static_cast<int>(s);
      trial.session = cfg.session;
      trial.task = cfg.task;
      trial.sample_rate_hz = cfg.sample_rate_hz;
      trial.data.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t_len));
      for (std::size_t c = 0; c < n; ++c) {
        const double psi = offset(static_cast<Eigen::Index>(c)) + kCouplingJitter * rng.normal();
        const double cs = std::cos(psi);
        const double sn = std::sin(psi);
        const auto& z = sources[source_of[c]];
        for (std::size_t t = 0; t < t_len; ++t) {
          trial.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(t)) = cs * z[t].real() - sn * z[t].imag();
        }
      }
      // Stored at container precision so a save/load round trip is exact.
      trial.data = trial.data.cast<float>().cast<double>();
      ds.trials.push_back(std::move(trial));
    }
  }
  return ds;
}

}  // namespace bbnet
