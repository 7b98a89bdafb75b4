#pragma once

// Voice quality measures over the glottal pulse train: relative jitter and
// shimmer, five-point perturbation quotients, HNR, and voice breaks.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/pitch.hpp"
#include "dysev/signal.hpp"

namespace dysev {

// Inter-pulse gaps longer than this are voice breaks (1.25 cycles of a 70 Hz
// pitch floor, strictly greater-than).
inline constexpr double kVoiceBreakThresholdS = 0.01786;

namespace vq {

// Mean absolute successive difference: sum |x_i - x_{i-1}| / (N - 1).
inline double mean_abs_succ_diff(std::span<const double> x) {
  if (x.size() < 2)
    throw feature_error("too_few_periods",
                        "need at least 2 intervals, got " +
                            std::to_string(x.size()));
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += std::abs(x[i] - x[i - 1]);
  return s / static_cast<double>(x.size() - 1);
}

// Five-point perturbation: mean |x_i - avg(x_{i-2}..x_{i+2})| over the N - 4
// interior positions.
inline double five_point_perturbation(std::span<const double> x) {
  if (x.size() < 5)
    throw feature_error("too_few_periods",
                        "need at least 5 intervals, got " +
                            std::to_string(x.size()));
  double s = 0.0;
  for (std::size_t i = 2; i + 2 < x.size(); ++i) {
    double m5 = (x[i - 2] + x[i - 1] + x[i] + x[i + 1] + x[i + 2]) / 5.0;
    s += std::abs(x[i] - m5);
  }
  return s / static_cast<double>(x.size() - 4);
}

}  // namespace vq

inline double jitter_rel(std::span<const double> periods) {
  return vq::mean_abs_succ_diff(periods) / detail::mean(periods);
}
inline double jitter_rel(const PulseTrain& p) { return jitter_rel(p.periods); }

inline double shimmer_rel(std::span<const double> amplitudes) {
  return vq::mean_abs_succ_diff(amplitudes) / detail::mean(amplitudes);
}
inline double shimmer_rel(const PulseTrain& p) {
  return shimmer_rel(p.amplitudes);
}

inline double ppq_rel(std::span<const double> periods) {
  return vq::five_point_perturbation(periods) / detail::mean(periods);
}
inline double ppq_rel(const PulseTrain& p) { return ppq_rel(p.periods); }

inline double apq_rel(std::span<const double> amplitudes) {
  return vq::five_point_perturbation(amplitudes) / detail::mean(amplitudes);
}
inline double apq_rel(const PulseTrain& p) { return apq_rel(p.amplitudes); }

struct VoiceBreaks {
  int count = 0;
  double degree = 0.0;  // break time / total duration
};

inline VoiceBreaks voice_breaks(const PulseTrain& p, double total_dur,
                                double threshold_s = kVoiceBreakThresholdS) {
  if (total_dur <= 0.0) throw config_error("total duration must be positive");
  VoiceBreaks vb;
  double break_time = 0.0;
  for (double t : p.periods) {
    if (t > threshold_s) {
      ++vb.count;
      break_time += t;
    }
  }
  vb.degree = break_time / total_dur;
  return vb;
}

// Per voiced frame the periodic fraction r is the normalized autocorrelation
// at the F0 lag; the frame value is 10*log10(r / (1 - r)) and the result is
// the mean over voiced frames, clamped to [-20, 40] dB.
inline double hnr_db(const Waveform& w, const PitchTrack& track,
                     const PitchConfig& cfg = {}) {
  constexpr double kLo = -20.0, kHi = 40.0;
  if (track.voiced_count() == 0)
    throw feature_error("no_voiced_frames", "HNR needs voiced frames");
  detail::FrameGrid g = detail::make_grid(w, cfg.window_s(), cfg.hop_s);
  const double sr = w.sample_rate;

  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < g.count && i < track.f0.size(); ++i) {
    if (track.f0[i] <= 0.0) continue;
    std::vector<double> frame = detail::frame_at(w, g.start(i), g.window);
    double lag0 = sr / track.f0[i];
    auto lmin = static_cast<std::size_t>(std::floor(lag0 * 0.9));
    auto lmax = static_cast<std::size_t>(std::ceil(lag0 * 1.1));
    double r = 0.0;
    for (std::size_t lag = std::max<std::size_t>(lmin, 2);
         lag <= lmax && lag + 2 < g.window; ++lag)
      r = std::max(r, detail::normalized_autocorr(frame, lag));
    double h;
    if (r >= 1.0 - 1e-12)
      h = kHi;
    else if (r <= 0.0)
      h = kLo;
    else
      h = std::clamp(10.0 * std::log10(r / (1.0 - r)), kLo, kHi);
    sum += h;
    ++used;
  }
  if (used == 0)
    throw feature_error("no_voiced_frames", "HNR needs voiced frames");
  return sum / static_cast<double>(used);
}

// Keeps only vocal-cycle periods (gaps not longer than the break threshold).
// Perturbation measures run on this view; break gaps are not glottal cycles.
struct CycleView {
  std::vector<double> periods;
  std::vector<double> amplitudes;
};

inline CycleView vocal_cycles(const PulseTrain& p,
                              double threshold_s = kVoiceBreakThresholdS) {
  CycleView v;
  for (std::size_t i = 0; i < p.periods.size(); ++i) {
    if (p.periods[i] <= threshold_s) {
      v.periods.push_back(p.periods[i]);
      v.amplitudes.push_back(p.amplitudes[i]);
    }
  }
  return v;
}

}  // namespace dysev
