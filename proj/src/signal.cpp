#include "bbnet/signal.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "bbnet/error.hpp"

namespace bbnet {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// fftw planning is not re-entrant; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void require_finite(const Matrix& data) {
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (!std::isfinite(data(r, c))) {
        throw InputError("non-finite sample at channel " + std::to_string(r) + ", index " +
                         std::to_string(c));
      }
    }
  }
}

// Steady-state transposed direct-form II state of each section for a constant input.
std::vector<std::array<double, 2>> steady_state(const SosFilter& sos, double level) {
  std::vector<std::array<double, 2>> state(sos.size());
  double u = level;
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    const double gain = (q.b[0] + q.b[1] + q.b[2]) / (1.0 + q.a[0] + q.a[1]);
    const double y = gain * u;
    state[s][1] = q.b[2] * u - q.a[1] * y;
    state[s][0] = y - q.b[0] * u;
    u = y;
  }
  return state;
}

void run_cascade(const SosFilter& sos, std::vector<double>& x,
                 std::vector<std::array<double, 2>> state) {
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& q = sos[s];
    double s1 = state[s][0];
    double s2 = state[s][1];
    for (double& v : x) {
      const double in = v;
      const double out = q.b[0] * in + s1;
      s1 = q.b[1] * in - q.a[0] * out + s2;
      s2 = q.b[2] * in - q.a[1] * out;
      v = out;
    }
  }
}

}  // namespace

std::string_view to_string(Session session) {
  return session == Session::I ? "I" : "II";
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::MI: return "MI";
    case Task::ERP: return "ERP";
    case Task::SSVEP: return "SSVEP";
    case Task::SYNTH: return "SYNTH";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::MI, Task::ERP, Task::SSVEP, Task::SYNTH}) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == to_string(t)) return t;
  }
  throw ParameterError("unknown task '" + std::string(name) + "'");
}

Session parse_session(std::string_view name) {
  if (name == "I" || name == "1") return Session::I;
  if (name == "II" || name == "2") return Session::II;
  throw ParameterError("unknown session '" + std::string(name) + "'");
}

void validate_trial(const Trial& trial) {
  if (trial.data.rows() < 2 || trial.data.cols() < 2) {
    throw InputError("trial must have at least 2 channels and 2 samples");
  }
  if (!(trial.sample_rate_hz > 0.0) || !std::isfinite(trial.sample_rate_hz)) {
    throw InputError("sample rate must be positive");
  }
  require_finite(trial.data);
}

SosFilter design_butterworth_bandpass(double low_hz, double high_hz, int order, double sample_rate_hz) {
  if (order < 1) throw ParameterError("filter order must be >= 1");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate_hz / 2.0)) {
    throw ParameterError("corner frequencies must satisfy 0 < low < high < fs/2");
  }
  const double fs2 = 2.0 * sample_rate_hz;
  const double w_low = fs2 * std::tan(kPi * low_hz / sample_rate_hz);
  const double w_high = fs2 * std::tan(kPi * high_hz / sample_rate_hz);
  const double bw = w_high - w_low;
  const double w0_sq = w_low * w_high;

  // Analog lowpass prototype -> analog bandpass -> bilinear.
  std::vector<cplx> poles;
  poles.reserve(2 * static_cast<std::size_t>(order));
  for (int m = -order + 1; m < order; m += 2) {
    const cplx proto = -std::exp(cplx(0.0, kPi * m / (2.0 * order)));
    const cplx half = proto * (bw / 2.0);
    const cplx root = std::sqrt(half * half - w0_sq);
    poles.push_back(half + root);
    poles.push_back(half - root);
  }
  // n zeros at s = 0 map to z = +1; the n zeros at infinity map to z = -1.
  cplx gain = std::pow(cplx(bw, 0.0), order);
  for (int i = 0; i < order; ++i) gain *= fs2;  // prod(fs2 - 0)
  std::vector<cplx> zpoles;
  zpoles.reserve(poles.size());
  for (const cplx& p : poles) {
    gain /= (fs2 - p);
    zpoles.push_back((fs2 + p) / (fs2 - p));
  }

  // Pair conjugates; leftover real poles pair with each other.
  std::vector<cplx> upper;
  std::vector<double> reals;
  for (const cplx& p : zpoles) {
    if (std::abs(p.imag()) <= 1e-12 * std::max(1.0, std::abs(p))) {
      reals.push_back(p.real());
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(reals.begin(), reals.end());
  std::sort(upper.begin(), upper.end(), [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });

  SosFilter sos;
  for (const cplx& p : upper) {
    Biquad q;
    q.b = {1.0, 0.0, -1.0};
    q.a = {-2.0 * p.real(), std::norm(p)};
    sos.push_back(q);
  }
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
    Biquad q;
    q.b = {1.0, 0.0, -1.0};
    q.a = {-(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]};
    sos.push_back(q);
  }
  if (sos.size() != static_cast<std::size_t>(order)) {
    throw ParameterError("pole pairing failed; corner frequencies too close to the band edges");
  }
  const double k = gain.real();
  for (double& b : sos.front().b) b *= k;
  return sos;
}

void sos_filter_inplace(const SosFilter& sos, std::vector<double>& x) {
  run_cascade(sos, x, std::vector<std::array<double, 2>>(sos.size(), {0.0, 0.0}));
}

std::vector<double> sos_filtfilt(const SosFilter& sos, const std::vector<double>& x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);

  // Point reflection about the end samples keeps value and slope continuous.
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_cascade(sos, ext, steady_state(sos, ext.front()));
  std::reverse(ext.begin(), ext.end());
  run_cascade(sos, ext, steady_state(sos, ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Trial bandpass_filter(const Trial& trial, double low_hz, double high_hz, int order) {
  validate_trial(trial);
  const SosFilter sos = design_butterworth_bandpass(low_hz, high_hz, order, trial.sample_rate_hz);
  const std::size_t pad = 3 * 2 * static_cast<std::size_t>(order);

  Trial out = trial;
  std::vector<double> row(trial.samples());
  for (Eigen::Index c = 0; c < trial.data.rows(); ++c) {
    for (std::size_t t = 0; t < row.size(); ++t) row[t] = trial.data(c, static_cast<Eigen::Index>(t));
    const std::vector<double> y = sos_filtfilt(sos, row, pad);
    for (std::size_t t = 0; t < y.size(); ++t) out.data(c, static_cast<Eigen::Index>(t)) = y[t];
  }
  return out;
}

Trial downsample(const Trial& trial, double target_hz) {
  if (!(target_hz > 0.0)) throw ParameterError("target rate must be positive");
  const double ratio = trial.sample_rate_hz / target_hz;
  const double factor_r = std::round(ratio);
  if (factor_r < 1.0 || std::abs(ratio - factor_r) > 1e-9 * ratio) {
    throw ParameterError("sample rate " + std::to_string(trial.sample_rate_hz) +
                         " Hz is not an integer multiple of " + std::to_string(target_hz) + " Hz");
  }
  const auto k = static_cast<Eigen::Index>(factor_r);
  const Eigen::Index t_out = trial.data.cols() / k;

  Trial out = trial;
  out.data.resize(trial.data.rows(), t_out);
  for (Eigen::Index t = 0; t < t_out; ++t) out.data.col(t) = trial.data.col(t * k);
  out.sample_rate_hz = target_hz;
  return out;
}

std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<cplx> buf(x.begin(), x.end());
  if (n == 0) return buf;
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());

  fftw_plan forward;
  fftw_plan backward;
  {
    std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_1d(n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(forward);

  // h = [1, 2, ..., 2, (1 at Nyquist for even n), 0, ..., 0]
  const int half = n / 2;
  for (int i = 1; i < n; ++i) {
    if (n % 2 == 0 && i == half) continue;
    buf[static_cast<std::size_t>(i)] *= (i < (n + 1) / 2) ? 2.0 : 0.0;
  }
  fftw_execute(backward);
  for (cplx& v : buf) v /= static_cast<double>(n);

  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  return buf;
}

PhaseSeries instantaneous_phase(const Trial& trial) {
  if (trial.data.cols() < 4) throw ParameterError("instantaneous phase needs at least 4 samples");
  require_finite(trial.data);

  PhaseSeries out;
  out.phase.resize(trial.data.rows(), trial.data.cols());
  std::vector<double> row(trial.samples());
  for (Eigen::Index c = 0; c < trial.data.rows(); ++c) {
    const auto r = trial.data.row(c);
    if (r.maxCoeff() == r.minCoeff()) {
      throw DegenerateSignalError("channel " + std::to_string(c) + " is constant; phase undefined");
    }
    for (std::size_t t = 0; t < row.size(); ++t) row[t] = r(static_cast<Eigen::Index>(t));
    const auto z = analytic_signal(row);
    for (std::size_t t = 0; t < z.size(); ++t) {
      double phi = std::arg(z[t]);
      if (phi < 0.0) phi += 2.0 * kPi;
      if (phi >= 2.0 * kPi) phi = 0.0;
      out.phase(c, static_cast<Eigen::Index>(t)) = phi;
    }
  }
  return out;
}

Trial preprocess(const Trial& trial, const PreprocessConfig& config) {
  if (!config.enabled) return trial;
  Trial filtered = bandpass_filter(trial, config.low_hz, config.high_hz, config.order);
  return downsample(filtered, config.target_hz);
}

}  // namespace bbnet
