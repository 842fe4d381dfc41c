#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "bbnet/error.hpp"
#include "bbnet/rng.hpp"
#include "bbnet/signal.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bbnet;

namespace {

constexpr double kPi = std::numbers::pi;

Trial sinusoid(double freq_hz, double fs, std::size_t n, double phase0 = 0.0, std::size_t channels = 2) {
  Trial t;
  t.sample_rate_hz = fs;
  t.data.resize(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < t.data.rows(); ++c) {
    for (Eigen::Index i = 0; i < t.data.cols(); ++i) {
      t.data(c, i) = std::cos(2 * kPi * freq_hz * double(i) / fs + phase0 + 0.3 * double(c));
    }
  }
  return t;
}

// Least-squares amplitude of a known frequency over [from, to).
double amplitude_at(const Matrix& x, Eigen::Index row, double freq_hz, double fs, Eigen::Index from, Eigen::Index to) {
  double cc = 0, ss = 0, cs = 0, xc = 0, xs = 0;
  for (Eigen::Index i = from; i < to; ++i) {
    const double c = std::cos(2 * kPi * freq_hz * double(i) / fs);
    const double s = std::sin(2 * kPi * freq_hz * double(i) / fs);
    cc += c * c;
    ss += s * s;
    cs += c * s;
    xc += x(row, i) * c;
    xs += x(row, i) * s;
  }
  const double det = cc * ss - cs * cs;
  const double a = (xc * ss - xs * cs) / det;
  const double b = (xs * cc - xc * cs) / det;
  return std::hypot(a, b);
}

// |H(e^{jw})| of the cascade, evaluated from the biquad coefficients directly.
double response(const SosFilter& sos, double freq_hz, double fs) {
  const std::complex<double> z1 = std::polar(1.0, -2 * kPi * freq_hz / fs);
  std::complex<double> h = 1.0;
  for (const auto& q : sos) {
    h *= (q.b[0] + q.b[1] * z1 + q.b[2] * z1 * z1) / (1.0 + q.a[0] * z1 + q.a[1] * z1 * z1);
  }
  return std::abs(h);
}

}  // namespace

TEST_CASE("bandpass passes an in-band sinusoid at unit gain") {
  const Trial in = sinusoid(10.0, 1000.0, 4000);
  const Trial out = bandpass_filter(in, 3.0, 40.0, 5);
  CHECK(out.data.rows() == in.data.rows());
  CHECK(out.data.cols() == in.data.cols());
  for (Eigen::Index c = 0; c < 2; ++c) {
    const double ratio = amplitude_at(out.data, c, 10.0, 1000.0, 1000, 3000) / amplitude_at(in.data, c, 10.0, 1000.0, 1000, 3000);
    CHECK(ratio >= 0.99);
    CHECK(ratio <= 1.01);
  }
}

TEST_CASE("bandpass attenuates 1 Hz by at least 40 dB") {
  const SosFilter sos = design_butterworth_bandpass(3.0, 40.0, 5, 1000.0);
  CHECK(sos.size() == 5);
  // Forward-backward squares the magnitude response.
  const double h = response(sos, 1.0, 1000.0);
  CHECK(20 * std::log10(h * h) <= -40.0);

  const Trial in = sinusoid(1.0, 1000.0, 20000);
  const Trial out = bandpass_filter(in, 3.0, 40.0, 5);
  CHECK(amplitude_at(out.data, 0, 1.0, 1000.0, 5000, 15000) <= 0.01);
}

TEST_CASE("butterworth design: -3 dB at both corners, unit gain at the geometric centre") {
  for (int order : {1, 2, 5, 8}) {
    const SosFilter sos = design_butterworth_bandpass(3.0, 40.0, order, 250.0);
    CHECK(response(sos, 3.0, 250.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
    CHECK(response(sos, 40.0, 250.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));
    // Centre of the pre-warped band maps back to the peak of the response.
    const double w_lo = std::tan(kPi * 3.0 / 250.0);
    const double w_hi = std::tan(kPi * 40.0 / 250.0);
    const double centre = std::atan(std::sqrt(w_lo * w_hi)) * 250.0 / kPi;
    CHECK(response(sos, centre, 250.0) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("bandpass rejects bad corners and non-finite samples") {
  const Trial in = sinusoid(10.0, 250.0, 500);
  CHECK_THROWS_AS(bandpass_filter(in, 40.0, 3.0, 5), ParameterError);
  CHECK_THROWS_AS(bandpass_filter(in, 0.0, 40.0, 5), ParameterError);
  CHECK_THROWS_AS(bandpass_filter(in, 3.0, 125.0, 5), ParameterError);
  CHECK_THROWS_AS(bandpass_filter(in, 3.0, 40.0, 0), ParameterError);
  Trial bad = in;
  bad.data(1, 7) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bandpass_filter(bad, 3.0, 40.0, 5), InputError);
  bad.data(1, 7) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bandpass_filter(bad, 3.0, 40.0, 5), InputError);
}

TEST_CASE("all-zero trial filters to all zeros") {
  Trial z;
  z.sample_rate_hz = 1000.0;
  z.data = Matrix::Zero(3, 800);
  CHECK(bandpass_filter(z, 3.0, 40.0, 5).data.isZero(0.0));
}

TEST_CASE("filtering and decimation are linear") {
  Rng rng(11);
  Trial x;
  Trial y;
  x.sample_rate_hz = y.sample_rate_hz = 1000.0;
  x.data = oracle::random_matrix(rng, 3, 1200);
  y.data = oracle::random_matrix(rng, 3, 1200);
  const double a = 1.7;
  const double b = -0.4;
  Trial mix = x;
  mix.data = a * x.data + b * y.data;
  PreprocessConfig cfg;
  const Matrix lhs = preprocess(mix, cfg).data;
  const Matrix rhs = a * preprocess(x, cfg).data + b * preprocess(y, cfg).data;
  CHECK((lhs - rhs).norm() / rhs.norm() <= 1e-10);
}

TEST_CASE("zero-phase filtering has no lag") {
  const Trial in = sinusoid(12.0, 1000.0, 4000);
  const Trial out = bandpass_filter(in, 3.0, 40.0, 5);
  int best_lag = 99;
  double best = -1e300;
  for (int lag = -30; lag <= 30; ++lag) {
    double acc = 0;
    for (Eigen::Index i = 1000; i < 3000; ++i) acc += in.data(0, i) * out.data(0, i + lag);
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
}

TEST_CASE("filtfilt with the steady-state start leaves a constant input unchanged by the lowpass part") {
  // A single lowpass section (b = gain * [1, 2, 1]) has unit DC gain; a constant passes unchanged.
  Biquad lp;
  const double k = std::tan(kPi * 10.0 / 250.0);
  const double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k * k);
  lp.b = {k * k * norm, 2 * k * k * norm, k * k * norm};
  lp.a = {2 * (k * k - 1) * norm, (1 - std::sqrt(2.0) * k + k * k) * norm};
  const std::vector<double> x(300, 4.25);
  for (double v : sos_filtfilt({lp}, x, 30)) CHECK(v == doctest::Approx(4.25).epsilon(1e-12));
}

TEST_CASE("downsample keeps every k-th sample") {
  Trial a = sinusoid(5.0, 1000.0, 4000);
  const Trial d = downsample(a, 250.0);
  CHECK(d.samples() == 1000);
  CHECK(d.sample_rate_hz == 250.0);
  for (Eigen::Index i = 0; i < 1000; ++i) CHECK(d.data(1, i) == a.data(1, 4 * i));

  Trial erp = sinusoid(5.0, 1000.0, 800);
  CHECK(downsample(erp, 250.0).samples() == 200);

  Trial odd = sinusoid(5.0, 1000.0, 803);
  CHECK(downsample(odd, 250.0).samples() == 200);

  const Trial same = downsample(a, 1000.0);
  CHECK(same.data == a.data);
  CHECK_THROWS_AS(downsample(a, 300.0), ParameterError);
  CHECK_THROWS_AS(downsample(a, 0.0), ParameterError);
}

TEST_CASE("analytic signal matches a direct DFT for even and odd lengths") {
  Rng rng(3);
  for (std::size_t n : {4u, 7u, 64u, 101u}) {
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal();
    const auto fast = analytic_signal(x);
    const auto slow = oracle::analytic(x);
    REQUIRE(fast.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(fast[i] - slow[i]) <= 1e-10);
      CHECK(fast[i].real() == doctest::Approx(x[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("phase of a cosine over full periods is linear") {
  const std::size_t n = 1000;
  const double cycles = 37.0;
  Trial t;
  t.data.resize(2, n);
  for (std::size_t i = 0; i < n; ++i) {
    t.data(0, i) = std::cos(2 * kPi * cycles * double(i) / double(n));
    t.data(1, i) = std::sin(2 * kPi * cycles * double(i) / double(n));
  }
  const PhaseSeries ph = instantaneous_phase(t);
  for (std::size_t i = 10; i < n - 10; ++i) {
    const double expect = std::fmod(2 * kPi * cycles * double(i) / double(n), 2 * kPi);
    double err = std::abs(ph.phase(0, i) - expect);
    err = std::min(err, 2 * kPi - err);
    CHECK(err <= 1e-6);
    // sin lags cos by a quarter cycle.
    double lag = std::fmod(ph.phase(0, i) - ph.phase(1, i) + 4 * kPi, 2 * kPi);
    CHECK(std::min(std::abs(lag - kPi / 2), 2 * kPi - std::abs(lag - kPi / 2)) <= 1e-6);
  }
  CHECK(ph.phase.minCoeff() >= 0.0);
  CHECK(ph.phase.maxCoeff() < 2 * kPi);
}

TEST_CASE("chirp phase follows the integrated instantaneous frequency") {
  const double fs = 1000.0;
  const std::size_t n = 8192;
  const double f0 = 60.0;
  const double f1 = 140.0;
  const double rate = (f1 - f0) / (double(n) / fs);
  Trial t;
  t.sample_rate_hz = fs;
  t.data.resize(2, n);
  std::vector<double> integrated(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    // Trapezoid rule on f(t) = f0 + rate t.
    const double fa = f0 + rate * double(i - 1) / fs;
    const double fb = f0 + rate * double(i) / fs;
    integrated[i] = integrated[i - 1] + 2 * kPi * 0.5 * (fa + fb) / fs;
  }
  for (std::size_t i = 0; i < n; ++i) {
    t.data(0, i) = std::cos(integrated[i]);
    t.data(1, i) = 2.0 * std::cos(integrated[i]);
  }
  const PhaseSeries ph = instantaneous_phase(t);
  double unwrapped = ph.phase(0, 0);
  double worst = 0;
  for (std::size_t i = 1; i < n; ++i) {
    double step = ph.phase(0, i) - ph.phase(0, i - 1);
    step -= 2 * kPi * std::round(step / (2 * kPi));
    unwrapped += step;
    if (i >= n / 4 && i < 3 * n / 4) worst = std::max(worst, std::abs(unwrapped - integrated[i]));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("phase is invariant under positive scaling") {
  Rng rng(5);
  Trial t;
  t.data = oracle::random_matrix(rng, 3, 128);
  Trial scaled = t;
  scaled.data.row(1) *= 37.5;
  scaled.data.row(2) *= 0.01;
  const Matrix a = instantaneous_phase(t).phase;
  const Matrix b = instantaneous_phase(scaled).phase;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = std::abs(a.data()[i] - b.data()[i]);
    CHECK(std::min(d, 2 * kPi - d) <= 1e-9);
  }
}

TEST_CASE("phase of a constant channel is undefined") {
  Trial t;
  t.data = Matrix::Ones(2, 32);
  t.data(0, 3) = 2.0;
  CHECK_THROWS_AS(instantaneous_phase(t), DegenerateSignalError);
  t.data.resize(2, 3);
  t.data.setRandom();
  CHECK_THROWS_AS(instantaneous_phase(t), ParameterError);
}

TEST_CASE("preprocess: filter then decimate to 250 Hz") {
  const Trial in = sinusoid(10.0, 1000.0, 4000);
  const Trial out = preprocess(in, PreprocessConfig{});
  CHECK(out.samples() == 1000);
  CHECK(out.sample_rate_hz == 250.0);
  PreprocessConfig off;
  off.enabled = false;
  CHECK(preprocess(in, off).data == in.data);
}
