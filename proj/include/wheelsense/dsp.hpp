#pragma once

// Butterworth band-pass design (analog prototype, band-pass transform,
// bilinear transform with pre-warping) realised as cascaded second-order
// sections.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wheelsense {

struct FilterSpec {
  int order = 4;  // overall band-pass order (two pole pairs for 4)
  double low_cut_hz = 10.0;
  double high_cut_hz = 300.0;
  double sampling_rate_hz = 1000.0;

  void validate() const {
    if (order <= 0 || order % 2 != 0) {
      throw std::invalid_argument("filter order must be a positive even integer");
    }
    if (!(sampling_rate_hz > 0.0)) throw std::invalid_argument("sampling rate must be > 0");
    const double nyquist = sampling_rate_hz / 2.0;
    if (!(low_cut_hz > 0.0 && low_cut_hz < high_cut_hz && high_cut_hz < nyquist)) {
      throw std::invalid_argument("cutoffs must satisfy 0 < low < high < Nyquist (" +
                                  std::to_string(nyquist) + " Hz)");
    }
  }
};

/// b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z_inv) const {
    const auto z2 = z_inv * z_inv;
    return (b0 + b1 * z_inv + b2 * z2) / (1.0 + a1 * z_inv + a2 * z2);
  }

  /// Roots of z^2 + a1 z + a2.
  std::array<std::complex<double>, 2> poles() const {
    const std::complex<double> disc = std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a2, 0.0));
    return {(-a1 + disc) / 2.0, (-a1 - disc) / 2.0};
  }
};

struct FilterCoefficients {
  std::vector<Biquad> sections;

  bool is_stable() const {
    for (const auto& s : sections) {
      for (const auto& p : s.poles()) {
        if (!(std::abs(p) < 1.0)) return false;
      }
    }
    return true;
  }
};

inline FilterCoefficients design_bandpass(const FilterSpec& spec) {
  spec.validate();
  using cd = std::complex<double>;
  const int n = spec.order / 2;  // low-pass prototype order
  const double fs = spec.sampling_rate_hz;
  const double fs2 = 2.0 * fs;

  const double w_lo = fs2 * std::tan(std::numbers::pi * spec.low_cut_hz / fs);
  const double w_hi = fs2 * std::tan(std::numbers::pi * spec.high_cut_hz / fs);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  // Analog band-pass poles: each prototype pole p gives the roots of
  // s^2 - p*bw*s + w0^2.
  std::vector<cd> digital;
  for (int k = 1; k <= n; ++k) {
    const cd p = std::polar(1.0, std::numbers::pi * (2.0 * k + n - 1.0) / (2.0 * n));
    const cd half = p * bw / 2.0;
    const cd root = std::sqrt(half * half - w0_sq);
    for (const cd s : {half + root, half - root}) {
      digital.push_back((fs2 + s) / (fs2 - s));
    }
  }

  // Conjugate pairs become sections; real poles are paired in order.
  std::vector<cd> upper;
  std::vector<double> real;
  for (const auto& z : digital) {
    if (std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z))) {
      real.push_back(z.real());
    } else if (z.imag() > 0.0) {
      upper.push_back(z);
    }
  }
  std::sort(real.begin(), real.end());

  FilterCoefficients out;
  for (const auto& z : upper) {
    out.sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
  }
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    out.sections.push_back({1.0, 0.0, -1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]});
  }

  // Unit gain at the digital image of the analog centre frequency, where a
  // Butterworth band-pass peaks.
  const double w_center = 2.0 * std::atan(std::sqrt(w0_sq) / fs2);
  const cd z_inv = std::polar(1.0, -w_center);
  cd h = 1.0;
  for (const auto& s : out.sections) h *= s.response(z_inv);
  const double g = 1.0 / std::abs(h);
  out.sections.front().b0 *= g;
  out.sections.front().b1 *= g;
  out.sections.front().b2 *= g;
  return out;
}

/// Causal cascade, transposed direct form II, zero initial state.
inline std::vector<double> apply_filter(const FilterCoefficients& coeffs, std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("apply_filter: empty input");
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : coeffs.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

/// 20 log10 |H(e^{j 2 pi f / fs})|; -inf at exact zeros (DC, Nyquist).
inline double frequency_response(const FilterCoefficients& coeffs, double f_hz, double fs_hz) {
  if (!(f_hz >= 0.0 && f_hz <= fs_hz / 2.0)) {
    throw std::invalid_argument("frequency must be within [0, fs/2]");
  }
  const auto z_inv = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs_hz);
  std::complex<double> h = 1.0;
  for (const auto& s : coeffs.sections) h *= s.response(z_inv);
  const double mag = std::abs(h);
  if (mag == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(mag);
}

}  // namespace wheelsense
