#pragma once

// Shared frame/window/correlation primitives and the frame-energy track.

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/wav.hpp"

namespace dysev {

struct EnergyTrack {
  std::vector<double> frame_times;  // frame centers, seconds
  std::vector<double> energy_db;    // floored at energy_floor_db

  static constexpr double kFloorDb = -120.0;
};

namespace detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a, bool inverse = false) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1 : -1);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) /
                                static_cast<double>(n));
  return w;
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double population_std(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Normalized cross-correlation of a frame with itself at `lag`, computed over
// the overlapping part only; both windows share the same length so a signal
// that is exactly periodic in `lag` scores exactly 1.
inline double normalized_autocorr(std::span<const double> x, std::size_t lag) {
  if (lag == 0 || lag >= x.size()) return 0.0;
  const std::size_t m = x.size() - lag;
  double num = 0.0, e0 = 0.0, e1 = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    num += x[t] * x[t + lag];
    e0 += x[t] * x[t];
    e1 += x[t + lag] * x[t + lag];
  }
  double den = std::sqrt(e0 * e1);
  if (den <= 0.0) return 0.0;
  return num / den;
}

}  // namespace detail

// 10*log10 of per-frame mean square, floored at -120 dB. Uses frame-start
// stepping; only complete frames are emitted.
inline EnergyTrack frame_energy(const Waveform& w, double frame_s = 0.025,
                                double hop_s = 0.010) {
  if (w.sample_rate <= 0) throw config_error("waveform has no sample rate");
  const auto frame = static_cast<std::size_t>(std::lrint(frame_s * w.sample_rate));
  const auto hop = static_cast<std::size_t>(std::lrint(hop_s * w.sample_rate));
  EnergyTrack e;
  if (frame == 0 || hop == 0 || w.samples.size() < frame) return e;
  for (std::size_t start = 0; start + frame <= w.samples.size(); start += hop) {
    double ms = 0.0;
    for (std::size_t t = 0; t < frame; ++t)
      ms += w.samples[start + t] * w.samples[start + t];
    ms /= static_cast<double>(frame);
    double db = 10.0 * std::log10(ms > 1e-12 ? ms : 1e-12);
    if (db < EnergyTrack::kFloorDb) db = EnergyTrack::kFloorDb;
    e.frame_times.push_back((static_cast<double>(start) + frame / 2.0) /
                            w.sample_rate);
    e.energy_db.push_back(db);
  }
  return e;
}

}  // namespace dysev
