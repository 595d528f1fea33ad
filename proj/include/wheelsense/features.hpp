#pragma once

// The 14 base features computed on one sub-window, and the 28 second-layer
// features (slope and absolute distance of every base feature) computed
// between consecutive detection points.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "parallel.hpp"
#include "segmentation.hpp"

namespace wheelsense {

inline constexpr std::size_t kBaseFeatureCount = 14;
inline constexpr std::size_t kFstFeatureCount = 2 * kBaseFeatureCount;

enum BaseFeature : std::size_t {
  kMean,
  kStd,
  kMedian,
  kMax,
  kMin,
  kMaxMin,
  kSma,
  kSkewness,
  kKurtosis,
  kTimeOverZero,
  kMeanFrequency,
  kMedianFrequency,
  kSampleEntropy,
  kLzComplexity,
};

inline constexpr std::array<std::string_view, kBaseFeatureCount> kBaseFeatureNames = {
    "mean",     "std",            "median",         "max",           "min",
    "max_min",  "sma",            "skewness",       "kurtosis",      "time_over_zero",
    "mean_frequency", "median_frequency", "sample_entropy", "lz_complexity"};

using BaseFeatureVector = std::array<double, kBaseFeatureCount>;

inline std::vector<std::string> fst_feature_names() {
  std::vector<std::string> names;
  for (auto n : kBaseFeatureNames) {
    names.push_back(std::string(n) + "_slope");
    names.push_back(std::string(n) + "_absdist");
  }
  return names;
}

// ---------------------------------------------------------------------------
// Sample entropy

namespace detail {

inline bool within(double a, double b, double r) { return std::fabs(a - b) <= r; }

/// Pairs a_i, b_j with |a_i - b_j| <= r over two ascending arrays.
inline std::uint64_t count_close_pairs(const double* a, std::size_t na, const double* b, std::size_t nb, double r) {
  std::uint64_t total = 0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 0; i < na; ++i) {
    while (lo < nb && b[lo] < a[i] && !within(a[i], b[lo], r)) ++lo;
    if (hi < lo) hi = lo;
    while (hi < nb && (b[hi] <= a[i] || within(a[i], b[hi], r))) ++hi;
    total += hi - lo;
  }
  return total;
}

/// Unordered pairs (i < j), i, j in [0, count), whose length-`dim` templates
/// x[i..i+dim) lie within Chebyshev distance r. Templates are bucketed on a
/// grid over their first G coordinates with cell size just above r/2, so
/// matches lie at most two cells apart. For each cell pair the bounding
/// boxes decide per coordinate whether every pair is within r; if all are,
/// the pair count is added at once, if one is not, a sorted sweep along it
/// counts exactly, otherwise points are compared individually.
/// Cell keys are packed into one integer, G fields of `bits` each.
template <std::size_t G>
std::uint64_t count_template_matches(std::span<const double> x, std::size_t count, std::size_t dim, double r,
                                     double lo, double cell) {
  constexpr std::size_t bits = 63 / G;
  constexpr std::int64_t bias = 4;
  auto pack = [](const std::array<std::int64_t, G>& k) {
    std::uint64_t key = 0;
    for (std::size_t g = 0; g < G; ++g) key = (key << bits) | static_cast<std::uint64_t>(k[g]);
    return key;
  };

  struct Entry {
    std::uint64_t key;
    std::uint32_t index;
  };
  std::vector<Entry> entries(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::array<std::int64_t, G> k;
    for (std::size_t g = 0; g < G; ++g) k[g] = static_cast<std::int64_t>(std::floor((x[i + g] - lo) / cell)) + bias;
    entries[i] = {pack(k), static_cast<std::uint32_t>(i)};
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.key != b.key ? a.key < b.key : a.index < b.index; });

  std::vector<double> pts(count * dim);
  for (std::size_t k = 0; k < count; ++k) {
    std::copy_n(x.begin() + entries[k].index, dim, pts.begin() + static_cast<std::ptrdiff_t>(k * dim));
  }

  struct Cell {
    std::uint64_t key;
    std::size_t begin, end;
  };
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < count;) {
    std::size_t e = k;
    while (e < count && entries[e].key == entries[k].key) ++e;
    cells.push_back({entries[k].key, k, e});
    k = e;
  }

  // Per coordinate: values sorted within each cell, plus the cell's extent.
  std::vector<double> sorted(dim * count), box_min(dim * cells.size()), box_max(dim * cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t d = 0; d < dim; ++d) {
      double* v = &sorted[d * count];
      for (std::size_t k = cells[c].begin; k < cells[c].end; ++k) v[k] = pts[k * dim + d];
      std::sort(v + cells[c].begin, v + cells[c].end);
      box_min[c * dim + d] = v[cells[c].begin];
      box_max[c * dim + d] = v[cells[c].end - 1];
    }
  }

  auto points_match = [&](std::size_t a, std::size_t b) -> std::uint64_t {
    const double* pa = &pts[a * dim];
    const double* pb = &pts[b * dim];
    if (dim == G) {
      std::uint64_t ok = 1;
      for (std::size_t d = 0; d < G; ++d) ok &= static_cast<std::uint64_t>(within(pa[d], pb[d], r));
      return ok;
    }
    for (std::size_t d = 0; d < dim; ++d) {
      if (!within(pa[d], pb[d], r)) return 0;
    }
    return 1;
  };

  // Offsets (as packed deltas) of the neighbouring prefixes; the last
  // field spans [-2, +2] contiguously in key order.
  constexpr std::size_t kPrefixCombos = [] {
    std::size_t c = 1;
    for (std::size_t g = 1; g < G; ++g) c *= 5;
    return c;
  }();
  std::array<std::int64_t, kPrefixCombos> lo_delta{};
  for (std::size_t combo = 0; combo < kPrefixCombos; ++combo) {
    std::int64_t delta = 0;
    std::size_t rem = combo;
    for (std::size_t g = 0; g + 1 < G; ++g) {
      const std::int64_t step = static_cast<std::int64_t>(rem % 5) - 2;
      rem /= 5;
      delta += step * (std::int64_t{1} << (bits * (G - 1 - g)));
    }
    lo_delta[combo] = delta - 2;
  }
  std::array<std::size_t, kPrefixCombos> cursor{};

  std::uint64_t total = 0;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const Cell& a = cells[ci];
    for (std::size_t combo = 0; combo < kPrefixCombos; ++combo) {
      const std::uint64_t first = static_cast<std::uint64_t>(static_cast<std::int64_t>(a.key) + lo_delta[combo]);
      const std::uint64_t last = first + 4;
      std::size_t& cj = cursor[combo];
      if (cj < ci) cj = ci;
      while (cj < cells.size() && cells[cj].key < first) ++cj;
      for (std::size_t bj = cj; bj < cells.size() && cells[bj].key <= last; ++bj) {
        const Cell& b = cells[bj];
        const std::uint64_t na = a.end - a.begin, nb = b.end - b.begin;

        std::size_t open = 0, open_dim = 0;
        for (std::size_t d = 0; d < dim; ++d) {
          const double amin = box_min[ci * dim + d], amax = box_max[ci * dim + d];
          const double bmin = box_min[bj * dim + d], bmax = box_max[bj * dim + d];
          const bool closed = within(amin, bmax, r) & within(amax, bmin, r);
          open += !closed;
          open_dim = closed ? open_dim : d;
        }
        if (bj == ci) {
          if (open == 0) {
            total += na * (na - 1) / 2;
          } else {
            for (std::size_t p = a.begin; p < a.end; ++p)
              for (std::size_t q = p + 1; q < a.end; ++q) total += points_match(p, q);
          }
        } else if (open == 0) {
          total += na * nb;
        } else if (open == 1) {
          const double* v = &sorted[open_dim * count];
          total += count_close_pairs(v + a.begin, na, v + b.begin, nb, r);
        } else {
          for (std::size_t p = a.begin; p < a.end; ++p)
            for (std::size_t q = b.begin; q < b.end; ++q) total += points_match(p, q);
        }
      }
    }
  }
  return total;
}

inline std::uint64_t count_matches(std::span<const double> x, std::size_t count, std::size_t dim, double r) {
  if (count < 2) return 0;
  const std::size_t span_len = count + dim - 1;
  const auto [mn, mx] = std::minmax_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(span_len));
  const double cell = 0.5 * r * (1.0 + 1e-9);
  const double cells_needed = (*mx - *mn) / cell + 16.0;
  std::size_t g = std::min<std::size_t>(dim, 3);
  while (g > 1 && cells_needed >= std::ldexp(1.0, static_cast<int>(63 / g))) --g;
  switch (g) {
    case 1: return count_template_matches<1>(x, count, dim, r, *mn, cell);
    case 2: return count_template_matches<2>(x, count, dim, r, *mn, cell);
    default: return count_template_matches<3>(x, count, dim, r, *mn, cell);
  }
}

}  // namespace detail

/// SampEn(m, r) = -ln(A/B) over the N-m templates starting at 0..N-m-1, self
/// matches excluded, Chebyshev distance. When no length-(m+1) template
/// matches, returns ln(max(B,1)) + ln(N), which exceeds every finite value
/// the ratio can produce.
inline double sample_entropy(std::span<const double> x, int m, double r) {
  if (m < 1) throw std::invalid_argument("sample_entropy: m must be >= 1");
  if (!(r > 0.0)) throw std::invalid_argument("sample_entropy: r must be > 0");
  const std::size_t n = x.size();
  if (n <= static_cast<std::size_t>(m) + 1) throw DataError("sample_entropy: series too short");
  const std::size_t templates = n - static_cast<std::size_t>(m);
  const auto b = detail::count_matches(x, templates, static_cast<std::size_t>(m), r);
  const auto a = detail::count_matches(x, templates, static_cast<std::size_t>(m) + 1, r);
  if (a == 0) return std::log(static_cast<double>(std::max<std::uint64_t>(b, 1))) + std::log(static_cast<double>(n));
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

// ---------------------------------------------------------------------------
// Lempel-Ziv complexity

/// Longest previous factor: for each i, the longest common prefix of the
/// suffix at i with any suffix starting before i. Suffix array by prefix
/// doubling, LCP by Kasai, then nearest smaller suffix positions on either
/// side in suffix-array order.
inline std::vector<std::size_t> longest_previous_factor(std::span<const std::uint8_t> s) {
  const std::size_t n = s.size();
  std::vector<std::size_t> sa(n), rank(n), tmp(n), count(std::max<std::size_t>(n, 256) + 1);
  // Counting sort by symbol, then rounds of radix sort on (rank[i], rank[i+k]).
  for (std::size_t i = 0; i < n; ++i) ++count[s[i] + 1];
  for (std::size_t c = 1; c < count.size(); ++c) count[c] += count[c - 1];
  for (std::size_t i = 0; i < n; ++i) sa[count[s[i]]++] = i;
  std::size_t classes = 1;
  rank[sa[0]] = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (s[sa[i]] != s[sa[i - 1]]) ++classes;
    rank[sa[i]] = classes - 1;
  }
  for (std::size_t k = 1; classes < n && k < n; k <<= 1) {
    std::size_t p = 0;
    for (std::size_t i = n - k; i < n; ++i) tmp[p++] = i;
    for (std::size_t j = 0; j < n; ++j) {
      if (sa[j] >= k) tmp[p++] = sa[j] - k;
    }
    std::fill(count.begin(), count.begin() + static_cast<std::ptrdiff_t>(classes) + 1, 0);
    for (std::size_t i = 0; i < n; ++i) ++count[rank[i] + 1];
    for (std::size_t c = 1; c <= classes; ++c) count[c] += count[c - 1];
    for (std::size_t j = 0; j < n; ++j) sa[count[rank[tmp[j]]]++] = tmp[j];
    auto second = [&](std::size_t i) { return i + k < n ? rank[i + k] + 1 : 0; };
    tmp[sa[0]] = 0;
    classes = 1;
    for (std::size_t i = 1; i < n; ++i) {
      if (rank[sa[i]] != rank[sa[i - 1]] || second(sa[i]) != second(sa[i - 1])) ++classes;
      tmp[sa[i]] = classes - 1;
    }
    rank.swap(tmp);
  }

  std::vector<std::size_t> lcp(n + 1, 0);  // lcp[r]: ranks r-1 and r
  for (std::size_t i = 0, h = 0; i < n; ++i) {
    if (rank[i] == 0) {
      h = 0;
      continue;
    }
    const std::size_t j = sa[rank[i] - 1];
    while (i + h < n && j + h < n && s[i + h] == s[j + h]) ++h;
    lcp[rank[i]] = h;
    if (h > 0) --h;
  }

  std::vector<std::size_t> lpf(n, 0);
  constexpr std::size_t kInf = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::size_t, std::size_t>> stack;  // (rank, min lcp up to the next entry)
  for (std::size_t r = 0; r < n; ++r) {
    if (!stack.empty()) stack.back().second = std::min(stack.back().second, lcp[r]);
    while (!stack.empty() && sa[stack.back().first] > sa[r]) {
      const auto m = stack.back().second;
      stack.pop_back();
      if (!stack.empty()) stack.back().second = std::min(stack.back().second, m);
    }
    if (!stack.empty()) lpf[sa[r]] = stack.back().second;
    stack.emplace_back(r, kInf);
  }
  stack.clear();
  for (std::size_t r = n; r-- > 0;) {
    if (!stack.empty()) stack.back().second = std::min(stack.back().second, lcp[r + 1]);
    while (!stack.empty() && sa[stack.back().first] > sa[r]) {
      const auto m = stack.back().second;
      stack.pop_back();
      if (!stack.empty()) stack.back().second = std::min(stack.back().second, m);
    }
    if (!stack.empty()) lpf[sa[r]] = std::max(lpf[sa[r]], stack.back().second);
    stack.emplace_back(r, kInf);
  }
  return lpf;
}

/// LZ76 phrase count of the exhaustive-history parse: each phrase is the
/// longest factor already seen (overlap allowed) plus one new symbol.
inline std::size_t lz76_complexity(std::span<const std::uint8_t> s) {
  const std::size_t n = s.size();
  if (n <= 1) return n;
  const auto lpf = longest_previous_factor(s);
  std::size_t c = 0;
  for (std::size_t l = 0; l < n; l += lpf[l] + 1) ++c;
  return c;
}

inline double median_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  std::vector<double> v(x.begin(), x.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

/// Binarise around the median (>= median -> 1), then LZ76.
inline std::size_t lz_complexity(std::span<const double> x) {
  if (x.empty()) return 0;
  const double med = median_of(x);
  std::vector<std::uint8_t> bits(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) bits[i] = x[i] >= med ? 1 : 0;
  return lz76_complexity(bits);
}

// ---------------------------------------------------------------------------
// Spectrum

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    if (!in_ || !out_) {
      release();
      throw std::bad_alloc();
    }
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() { release(); }

  std::span<double> input() { return {in_, n_}; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

 private:
  void release() {
    std::lock_guard lock(fftw_planner_mutex());
    if (plan_) fftw_destroy_plan(plan_);
    if (in_) fftw_free(in_);
    if (out_) fftw_free(out_);
    plan_ = nullptr;
    in_ = nullptr;
    out_ = nullptr;
  }

  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

struct PowerSpectrum {
  std::vector<double> frequency_hz;
  std::vector<double> power;  // one-sided, arbitrary scale
};

/// Averaged Hann-windowed periodogram: segments of min(1024, N) samples,
/// 50% overlap, per-segment mean removed.
inline PowerSpectrum welch_psd(std::span<const double> x, double fs, std::size_t segment = 1024) {
  if (x.size() < 64) throw DataError("spectrum: series too short (need >= 64 samples)");
  const std::size_t nseg = std::min(segment, x.size());
  const std::size_t step = std::max<std::size_t>(1, nseg / 2);
  const std::size_t bins = nseg / 2 + 1;

  std::vector<double> window(nseg);
  for (std::size_t i = 0; i < nseg; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nseg));
  }

  PowerSpectrum ps;
  ps.power.assign(bins, 0.0);
  ps.frequency_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) ps.frequency_hz[k] = static_cast<double>(k) * fs / static_cast<double>(nseg);

  detail::RealFft fft(nseg);
  auto in = fft.input();
  for (std::size_t start = 0; start + nseg <= x.size(); start += step) {
    double mean = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) mean += x[start + i];
    mean /= static_cast<double>(nseg);
    for (std::size_t i = 0; i < nseg; ++i) in[i] = (x[start + i] - mean) * window[i];
    fft.execute();
    for (std::size_t k = 0; k < bins; ++k) {
      const bool edge = k == 0 || (nseg % 2 == 0 && k == bins - 1);
      ps.power[k] += (edge ? 1.0 : 2.0) * fft.power(k);
    }
  }
  return ps;
}

struct SpectralFrequencies {
  double mean_hz = 0.0;
  double median_hz = 0.0;
};

/// MNF = sum(f P)/sum(P); MDF = first bin where cumulative power reaches half
/// the total. A spectrum with no power yields zeros.
inline SpectralFrequencies spectral_frequencies(const PowerSpectrum& ps) {
  double total = 0.0, weighted = 0.0;
  for (std::size_t k = 0; k < ps.power.size(); ++k) {
    total += ps.power[k];
    weighted += ps.frequency_hz[k] * ps.power[k];
  }
  if (!(total > 0.0)) return {};
  SpectralFrequencies out;
  out.mean_hz = weighted / total;
  double cum = 0.0;
  for (std::size_t k = 0; k < ps.power.size(); ++k) {
    cum += ps.power[k];
    if (cum >= 0.5 * total) {
      out.median_hz = ps.frequency_hz[k];
      break;
    }
  }
  return out;
}

inline SpectralFrequencies spectral_frequencies(std::span<const double> x, double fs) {
  return spectral_frequencies(welch_psd(x, fs));
}

// ---------------------------------------------------------------------------
// Base features

struct FeatureParams {
  int sampen_m = 2;
  double sampen_r_factor = 0.2;
};

/// Moments use the sample (n-1) std for `std` and population central moments
/// for skewness and excess kurtosis; both are 0 for a constant window.
inline BaseFeatureVector base_features(std::span<const double> x, double fs, const FeatureParams& params = {}) {
  if (x.empty()) throw DataError("base_features: empty window");
  const auto n = static_cast<double>(x.size());
  BaseFeatureVector f{};

  double sum = 0.0, abs_sum = 0.0;
  double mx = x[0], mn = x[0];
  for (double v : x) {
    sum += v;
    abs_sum += std::fabs(v);
    mx = std::max(mx, v);
    mn = std::min(mn, v);
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double std_dev = x.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  double skew = 0.0, kurt = 0.0;
  if (m2 > 0.0) {
    skew = m3 / std::pow(m2, 1.5);
    kurt = m4 / (m2 * m2) - 3.0;
    if (!std::isfinite(skew)) skew = 0.0;
    if (!std::isfinite(kurt)) kurt = 0.0;
  }

  std::size_t crossings = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if ((x[i - 1] > 0.0 && x[i] < 0.0) || (x[i - 1] < 0.0 && x[i] > 0.0)) ++crossings;
  }

  const auto spectral = spectral_frequencies(x, fs);

  f[kMean] = mean;
  f[kStd] = std_dev;
  f[kMedian] = median_of(x);
  f[kMax] = mx;
  f[kMin] = mn;
  f[kMaxMin] = mx - mn;
  f[kSma] = abs_sum / n;
  f[kSkewness] = skew;
  f[kKurtosis] = kurt;
  f[kTimeOverZero] = static_cast<double>(crossings);
  f[kMeanFrequency] = spectral.mean_hz;
  f[kMedianFrequency] = spectral.median_hz;
  f[kSampleEntropy] = std_dev > 0.0 ? sample_entropy(x, params.sampen_m, params.sampen_r_factor * std_dev) : 0.0;
  f[kLzComplexity] = static_cast<double>(lz_complexity(x));
  return f;
}

inline FeatureParams feature_params(const PipelineConfig& cfg) { return {cfg.sampen_m, cfg.sampen_r_factor}; }

/// Base features for every window, in window order.
inline std::vector<BaseFeatureVector> base_features_batch(std::span<const SubWindow> windows, double fs,
                                                          const FeatureParams& params) {
  std::vector<BaseFeatureVector> out(windows.size());
  parallel_for(windows.size(), [&](std::size_t i) { out[i] = base_features(windows[i].samples, fs, params); });
  return out;
}

// ---------------------------------------------------------------------------
// Second layer

struct FeaturePoint {
  std::size_t frame_index = 0;
  std::size_t sub_index = 0;
  double time_s = 0.0;
  BaseFeatureVector values{};
};

/// Base features at successive detection points.
using FeatureSeries = std::vector<FeaturePoint>;

/// Slope then absolute distance per base feature, attached to the later point.
struct FstFeatureVector {
  std::size_t frame_index = 0;
  double time_s = 0.0;
  std::array<double, kFstFeatureCount> values{};
};

inline std::vector<FstFeatureVector> fst_features(std::span<const FeaturePoint> series) {
  if (series.size() < 2) throw DataError("fst_features: need at least 2 detection points");
  std::vector<FstFeatureVector> out;
  out.reserve(series.size() - 1);
  for (std::size_t n = 0; n + 1 < series.size(); ++n) {
    const auto& a = series[n];
    const auto& b = series[n + 1];
    const double dt = b.time_s - a.time_s;
    if (!(dt > 0.0)) throw DataError("fst_features: detection point times must be strictly increasing");
    FstFeatureVector v;
    v.frame_index = b.frame_index;
    v.time_s = b.time_s;
    for (std::size_t k = 0; k < kBaseFeatureCount; ++k) {
      const double diff = b.values[k] - a.values[k];
      v.values[2 * k] = diff / dt;
      v.values[2 * k + 1] = std::fabs(diff);
    }
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string base_features_csv_text(std::span<const FeaturePoint> rows) {
  std::string out = "frame_index,sub_index";
  for (auto n : kBaseFeatureNames) out += "," + std::string(n);
  out += "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.frame_index) + "," + std::to_string(r.sub_index);
    for (double v : r.values) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

inline std::vector<std::string> base_features_header() {
  std::vector<std::string> h = {"frame_index", "sub_index"};
  for (auto n : kBaseFeatureNames) h.emplace_back(n);
  return h;
}

/// Rows of a base-feature CSV; `time_s` is left at 0 (not part of the file).
inline std::vector<FeaturePoint> load_base_features_csv(const std::filesystem::path& path) {
  const auto table = read_numeric_csv(path, base_features_header());
  std::vector<FeaturePoint> out;
  for (const auto& row : table.rows) {
    FeaturePoint p;
    p.frame_index = static_cast<std::size_t>(row[0]);
    p.sub_index = static_cast<std::size_t>(row[1]);
    std::copy(row.begin() + 2, row.end(), p.values.begin());
    out.push_back(p);
  }
  return out;
}

inline std::vector<std::string> fst_features_header() {
  std::vector<std::string> h = {"frame_index"};
  for (auto& n : fst_feature_names()) h.push_back(n);
  return h;
}

inline std::string fst_features_csv_text(std::span<const FstFeatureVector> rows) {
  std::string out;
  for (const auto& h : fst_features_header()) out += (out.empty() ? "" : ",") + h;
  out += "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.frame_index);
    for (double v : r.values) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

inline std::vector<FstFeatureVector> load_fst_features_csv(const std::filesystem::path& path) {
  const auto table = read_numeric_csv(path, fst_features_header());
  std::vector<FstFeatureVector> out;
  for (const auto& row : table.rows) {
    FstFeatureVector v;
    v.frame_index = static_cast<std::size_t>(row[0]);
    std::copy(row.begin() + 1, row.end(), v.values.begin());
    out.push_back(v);
  }
  return out;
}

}  // namespace wheelsense
