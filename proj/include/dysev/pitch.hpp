#pragma once

// Autocorrelation F0 tracking and glottal pulse extraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/signal.hpp"
#include "dysev/wav.hpp"

namespace dysev {

struct PitchConfig {
  double floor_hz = 70.0;
  double ceiling_hz = 600.0;
  double hop_s = 0.010;
  double voicing_threshold = 0.45;  // min normalized autocorrelation peak
  double silence_db = -50.0;        // frames below this are unvoiced
  double octave_cost = 0.01;        // per-octave bias toward shorter lags

  // Analysis window: three periods of the pitch floor.
  double window_s() const { return 3.0 / floor_hz; }
};

struct PitchTrack {
  std::vector<double> frame_times;  // frame centers, seconds
  std::vector<double> f0;           // Hz; 0 = unvoiced
  double floor_hz = 0.0;
  double ceiling_hz = 0.0;

  std::size_t voiced_count() const {
    std::size_t n = 0;
    for (double v : f0) n += v > 0.0;
    return n;
  }
};

// Glottal pulse instants plus the derived period/amplitude sequences:
// periods[i] = pulse_times[i+1] - pulse_times[i], amplitudes[i] = peak |x|
// within period i. Periods spanning an unvoiced stretch stay in the train;
// they are what the voice-break detector looks for.
struct PulseTrain {
  std::vector<double> pulse_times;  // strictly increasing, seconds
  std::vector<double> periods;      // size = pulse count - 1
  std::vector<double> amplitudes;   // per-period peak, linear, > 0

  std::size_t interval_count() const { return periods.size(); }
};

namespace detail {

struct FrameGrid {
  std::size_t window = 0;
  std::size_t hop = 0;
  std::size_t count = 0;

  std::size_t start(std::size_t i) const { return i * hop; }
  double center_s(std::size_t i, double sr) const {
    return (static_cast<double>(start(i)) + window / 2.0) / sr;
  }
};

inline FrameGrid make_grid(const Waveform& w, double window_s, double hop_s) {
  FrameGrid g;
  g.window = static_cast<std::size_t>(std::lrint(window_s * w.sample_rate));
  g.hop = static_cast<std::size_t>(std::lrint(hop_s * w.sample_rate));
  if (g.window == 0 || g.hop == 0) throw config_error("degenerate frame grid");
  if (w.samples.size() >= g.window)
    g.count = (w.samples.size() - g.window) / g.hop + 1;
  return g;
}

// Best autocorrelation peak of one (mean-removed) frame within [lmin, lmax].
// Returns {r at the peak, interpolated lag}; r = 0 when no peak exists.
struct AcPeak {
  double r = 0.0;
  double lag = 0.0;
};

inline AcPeak best_autocorr_peak(std::span<const double> frame,
                                 std::size_t lmin, std::size_t lmax,
                                 double octave_cost) {
  const std::size_t n = frame.size();
  if (lmax >= n) lmax = n - 1;
  if (lmin < 2) lmin = 2;
  if (lmin > lmax) return {};

  // Prefix sums of x^2 give both window energies in O(1) per lag.
  std::vector<double> sq(n + 1, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    sq[t + 1] = sq[t] + frame[t] * frame[t];

  std::vector<double> r(lmax + 1, 0.0);
  for (std::size_t lag = lmin; lag <= lmax; ++lag) {
    const std::size_t m = n - lag;
    double num = 0.0;
    for (std::size_t t = 0; t < m; ++t) num += frame[t] * frame[t + lag];
    double den = std::sqrt(sq[m] * (sq[n] - sq[lag]));
    r[lag] = den > 0.0 ? num / den : 0.0;
  }

  AcPeak best;
  double best_score = -1e9;
  for (std::size_t lag = lmin; lag <= lmax; ++lag) {
    bool is_peak = (lag == lmin || r[lag] >= r[lag - 1]) &&
                   (lag == lmax || r[lag] >= r[lag + 1]);
    if (!is_peak || r[lag] <= 0.0) continue;
    double score = r[lag] - octave_cost * std::log2(static_cast<double>(lag) /
                                                    static_cast<double>(lmin));
    if (score > best_score) {
      best_score = score;
      best.r = r[lag];
      best.lag = static_cast<double>(lag);
      if (lag > lmin && lag < lmax) {
        // Parabolic refinement around the winning integer lag.
        double a = r[lag - 1], b = r[lag], c2 = r[lag + 1];
        double den = a - 2.0 * b + c2;
        if (std::abs(den) > 1e-30) {
          double delta = 0.5 * (a - c2) / den;
          if (delta > -1.0 && delta < 1.0) {
            best.lag = static_cast<double>(lag) + delta;
            best.r = b - 0.25 * (a - c2) * delta;
          }
        }
      }
    }
  }
  return best;
}

inline std::vector<double> frame_at(const Waveform& w, std::size_t start,
                                    std::size_t window) {
  std::vector<double> frame(w.samples.begin() + static_cast<long>(start),
                            w.samples.begin() + static_cast<long>(start + window));
  double m = mean(frame);
  for (double& v : frame) v -= m;
  return frame;
}

inline double frame_db(std::span<const double> frame) {
  double ms = 0.0;
  for (double v : frame) ms += v * v;
  ms /= static_cast<double>(frame.size());
  return 10.0 * std::log10(ms > 1e-12 ? ms : 1e-12);
}

}  // namespace detail

// Per-frame F0 with a voicing decision; unvoiced frames carry f0 = 0.
inline PitchTrack f0_contour(const Waveform& w, const PitchConfig& cfg = {}) {
  if (w.sample_rate <= 0) throw config_error("waveform has no sample rate");
  detail::FrameGrid g = detail::make_grid(w, cfg.window_s(), cfg.hop_s);
  if (g.count == 0)
    throw feature_error("audio_too_short",
                        "audio shorter than one pitch analysis window");
  const double sr = w.sample_rate;
  auto lmin = static_cast<std::size_t>(std::floor(sr / cfg.ceiling_hz));
  auto lmax = static_cast<std::size_t>(std::ceil(sr / cfg.floor_hz));

  PitchTrack track;
  track.floor_hz = cfg.floor_hz;
  track.ceiling_hz = cfg.ceiling_hz;
  for (std::size_t i = 0; i < g.count; ++i) {
    std::vector<double> frame = detail::frame_at(w, g.start(i), g.window);
    track.frame_times.push_back(g.center_s(i, sr));
    double f0 = 0.0;
    if (detail::frame_db(frame) >= cfg.silence_db) {
      detail::AcPeak peak =
          detail::best_autocorr_peak(frame, lmin, lmax, cfg.octave_cost);
      if (peak.r >= cfg.voicing_threshold && peak.lag > 0.0) {
        f0 = sr / peak.lag;
        f0 = std::clamp(f0, cfg.floor_hz, cfg.ceiling_hz);
      }
    }
    track.f0.push_back(f0);
  }
  return track;
}

// Locates one pulse per period at the waveform peak, walking outward from the
// strongest sample of each voiced region in steps of the local period.
inline PulseTrain pulse_train(const Waveform& w, const PitchTrack& track,
                              const PitchConfig& cfg = {}) {
  if (track.voiced_count() < 2)
    throw feature_error("unvoiced_audio",
                        "need at least 2 voiced frames for pulse extraction");
  const double sr = w.sample_rate;
  const double hop_half = cfg.hop_s / 2.0;
  const auto n = static_cast<long>(w.samples.size());

  auto abs_argmax = [&](long lo, long hi) -> long {  // inclusive bounds
    lo = std::max(lo, 0L);
    hi = std::min(hi, n - 1);
    if (lo > hi) return -1;
    long best = lo;
    for (long t = lo + 1; t <= hi; ++t)
      if (std::abs(w.samples[t]) > std::abs(w.samples[best])) best = t;
    return best;
  };

  PulseTrain out;
  std::size_t i = 0;
  while (i < track.f0.size()) {
    if (track.f0[i] <= 0.0) {
      ++i;
      continue;
    }
    std::size_t a = i;
    while (i < track.f0.size() && track.f0[i] > 0.0) ++i;
    std::size_t b = i - 1;  // voiced frames [a, b]

    auto lo = static_cast<long>(
        std::floor((track.frame_times[a] - hop_half) * sr));
    auto hi = static_cast<long>(
        std::ceil((track.frame_times[b] + hop_half) * sr));
    lo = std::max(lo, 0L);
    hi = std::min(hi, n - 1);
    if (lo >= hi) continue;

    // Local period (in samples) by interpolating the frame F0 values.
    auto period_at = [&](double t) {
      double tc = std::clamp(t, track.frame_times[a], track.frame_times[b]);
      std::size_t k = a;
      while (k < b && track.frame_times[k + 1] < tc) ++k;
      double f;
      if (k == b) {
        f = track.f0[b];
      } else {
        double t0 = track.frame_times[k], t1 = track.frame_times[k + 1];
        double u = (tc - t0) / (t1 - t0);
        f = (1.0 - u) * track.f0[k] + u * track.f0[k + 1];
      }
      return sr / f;
    };

    long seed = abs_argmax(lo, hi);
    if (seed < 0) continue;
    std::vector<long> pulses{seed};
    for (long cur = seed;;) {  // walk right
      double T = period_at(cur / sr);
      long next = abs_argmax(cur + static_cast<long>(std::floor(0.8 * T)),
                             cur + static_cast<long>(std::ceil(1.25 * T)));
      if (next < 0 || next > hi || next <= cur) break;
      pulses.push_back(next);
      cur = next;
    }
    for (long cur = seed;;) {  // walk left
      double T = period_at(cur / sr);
      long prev_hi = cur - static_cast<long>(std::floor(0.8 * T));
      long prev_lo = cur - static_cast<long>(std::ceil(1.25 * T));
      long prev = abs_argmax(prev_lo, prev_hi);
      if (prev < 0 || prev < lo || prev >= cur) break;
      pulses.insert(pulses.begin(), prev);
      cur = prev;
    }
    for (long p : pulses) {
      double t = p / sr;
      if (out.pulse_times.empty() || t > out.pulse_times.back())
        out.pulse_times.push_back(t);
    }
  }

  if (out.pulse_times.size() < 3)
    throw feature_error("too_few_pulses",
                        "fewer than 3 glottal pulses located");

  for (std::size_t k = 0; k + 1 < out.pulse_times.size(); ++k) {
    out.periods.push_back(out.pulse_times[k + 1] - out.pulse_times[k]);
    auto s0 = static_cast<long>(std::lrint(out.pulse_times[k] * sr));
    auto s1 = static_cast<long>(std::lrint(out.pulse_times[k + 1] * sr));
    double amp = 0.0;
    for (long t = std::max(s0, 0L); t <= std::min(s1, n - 1); ++t)
      amp = std::max(amp, std::abs(w.samples[t]));
    out.amplitudes.push_back(std::max(amp, 1e-12));
  }
  return out;
}

}  // namespace dysev
