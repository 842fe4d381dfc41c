#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bbnet {

/// Row-major dense matrix; rows are channels/nodes.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Session : std::uint8_t { I = 1, II = 2 };
enum class Task : std::uint8_t { MI = 0, ERP = 1, SSVEP = 2, SYNTH = 3 };

std::string_view to_string(Session session);
std::string_view to_string(Task task);
Task parse_task(std::string_view name);
Session parse_session(std::string_view name);

/// One EEG recording segment, channels x time in microvolts.
struct Trial {
  Matrix data;
  int subject_id = 0;
  Session session = Session::I;
  Task task = Task::SYNTH;
  double sample_rate_hz = 250.0;

  std::size_t channels() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(data.cols()); }
};

/// Throws InputError unless the trial has N >= 2, T >= 2, finite samples and a positive rate.
void validate_trial(const Trial& trial);

/// Instantaneous phase per channel, radians in [0, 2*pi).
struct PhaseSeries {
  Matrix phase;

  std::size_t channels() const { return static_cast<std::size_t>(phase.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(phase.cols()); }
};

/// Normalized biquad: y = b0 x + b1 x[-1] + b2 x[-2] - a1 y[-1] - a2 y[-2].
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};  // a1, a2 (a0 == 1)
};

using SosFilter = std::vector<Biquad>;

/// Digital Butterworth bandpass of prototype order `order` as `order` second-order sections.
/// Bilinear transform with pre-warped corners.
SosFilter design_butterworth_bandpass(double low_hz, double high_hz, int order, double sample_rate_hz);

/// Single forward pass of a cascade (zero initial state).
void sos_filter_inplace(const SosFilter& sos, std::vector<double>& x);

/// Zero-phase forward-backward application with reflect padding of `pad` samples per side.
std::vector<double> sos_filtfilt(const SosFilter& sos, const std::vector<double>& x, std::size_t pad);

Trial bandpass_filter(const Trial& trial, double low_hz, double high_hz, int order);
Trial downsample(const Trial& trial, double target_hz);
PhaseSeries instantaneous_phase(const Trial& trial);

/// Analytic signal of one real sequence via the one-sided spectrum.
std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x);

struct PreprocessConfig {
  bool enabled = true;
  double low_hz = 3.0;
  double high_hz = 40.0;
  int order = 5;
  double target_hz = 250.0;
};

/// Bandpass, then decimate to target_hz. A no-op when disabled.
Trial preprocess(const Trial& trial, const PreprocessConfig& config);

}  // namespace bbnet
