#pragma once

// Per-utterance MFCC statistics: mean and population std of 12 cepstral
// coefficients plus log energy (26 values). Chain: pre-emphasis 0.97,
// 25 ms / 10 ms frames, periodic Hann window, power FFT, 26 HTK-mel
// triangular filters, natural log, orthonormal DCT-II, coefficients 1-12.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/signal.hpp"
#include "dysev/wav.hpp"

namespace dysev {

struct MfccConfig {
  double pre_emphasis = 0.97;
  double frame_s = 0.025;
  double hop_s = 0.010;
  int n_filters = 26;
  int n_coeffs = 12;  // c1..c12; c0 replaced by log energy
};

inline constexpr int kMfccStatCount = 26;

namespace detail {

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

}  // namespace detail

// Returns [mean c1..c12, mean logE, std c1..c12, std logE].
inline std::array<double, kMfccStatCount> mfcc_stats(
    const Waveform& w, const MfccConfig& cfg = {}) {
  using namespace detail;
  if (w.sample_rate <= 0) throw config_error("waveform has no sample rate");
  const double sr = w.sample_rate;
  const auto frame = static_cast<std::size_t>(std::lrint(cfg.frame_s * sr));
  const auto hop = static_cast<std::size_t>(std::lrint(cfg.hop_s * sr));
  if (frame == 0 || hop == 0) throw config_error("degenerate MFCC frame grid");
  if (w.samples.size() < frame + hop)
    throw feature_error("audio_too_short", "MFCC needs at least 2 frames");

  // Pre-emphasis; the first sample is differenced against itself so a
  // constant input yields identical frames.
  std::vector<double> x(w.samples.size());
  x[0] = w.samples[0] - cfg.pre_emphasis * w.samples[0];
  for (std::size_t t = 1; t < x.size(); ++t)
    x[t] = w.samples[t] - cfg.pre_emphasis * w.samples[t - 1];

  const std::size_t nfft = next_pow2(frame);
  const std::size_t nbins = nfft / 2 + 1;
  const std::vector<double> window = hann_window(frame);

  // Triangular filterbank on the HTK mel scale, 0 .. sr/2.
  const int M = cfg.n_filters;
  double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(sr / 2.0);
  std::vector<double> centers(M + 2);
  for (int j = 0; j < M + 2; ++j)
    centers[j] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * j / (M + 1));
  std::vector<std::vector<double>> fbank(M, std::vector<double>(nbins, 0.0));
  for (int j = 0; j < M; ++j) {
    double fl = centers[j], fc = centers[j + 1], fr = centers[j + 2];
    for (std::size_t k = 0; k < nbins; ++k) {
      double f = k * sr / static_cast<double>(nfft);
      if (f > fl && f < fc)
        fbank[j][k] = (f - fl) / (fc - fl);
      else if (f >= fc && f < fr)
        fbank[j][k] = (fr - f) / (fr - fc);
    }
  }

  const int C = cfg.n_coeffs;
  std::vector<std::vector<double>> per_frame;  // rows: [c1..cC, logE]
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t start = 0; start + frame <= x.size(); start += hop) {
    double energy = 0.0;
    for (std::size_t t = 0; t < frame; ++t)
      energy += x[start + t] * x[start + t];
    double log_e = std::log(energy > 1e-10 ? energy : 1e-10);

    for (std::size_t t = 0; t < nfft; ++t)
      buf[t] = t < frame ? x[start + t] * window[t] : 0.0;
    fft(buf);

    std::vector<double> power(nbins);
    for (std::size_t k = 0; k < nbins; ++k) power[k] = std::norm(buf[k]);

    std::vector<double> logmel(M);
    for (int j = 0; j < M; ++j) {
      double e = 0.0;
      for (std::size_t k = 0; k < nbins; ++k) e += fbank[j][k] * power[k];
      logmel[j] = std::log(e > 1e-10 ? e : 1e-10);
    }

    std::vector<double> row(C + 1);
    for (int k = 1; k <= C; ++k) {
      double c = 0.0;
      for (int m = 0; m < M; ++m)
        c += logmel[m] * std::cos(M_PI * k * (2 * m + 1) / (2.0 * M));
      row[k - 1] = c * std::sqrt(2.0 / M);
    }
    row[C] = log_e;
    per_frame.push_back(std::move(row));
  }

  std::array<double, kMfccStatCount> out{};
  const auto nf = static_cast<double>(per_frame.size());
  for (int d = 0; d <= C; ++d) {
    double m = 0.0;
    for (const auto& row : per_frame) m += row[d];
    m /= nf;
    double var = 0.0;
    for (const auto& row : per_frame) var += (row[d] - m) * (row[d] - m);
    out[d] = m;
    out[C + 1 + d] = std::sqrt(var / nf);
  }
  return out;
}

inline std::vector<std::string> mfcc_stat_names() {
  std::vector<std::string> names;
  for (const char* stat : {"mean", "std"}) {
    for (int k = 1; k <= 12; ++k)
      names.push_back("mfcc" + std::to_string(k) + "_" + stat);
    names.push_back(std::string("loge_") + stat);
  }
  return names;
}

}  // namespace dysev
