#pragma once

// RIFF/WAVE reading (PCM16 and IEEE float32) and a small writer for tooling
// and synthetic fixtures. Multichannel audio is downmixed by channel average.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dysev/common.hpp"

namespace dysev {

struct Waveform {
  std::vector<double> samples;  // mono, nominal range [-1, 1]
  double sample_rate = 0.0;

  double duration() const {
    return sample_rate > 0 ? samples.size() / sample_rate : 0.0;
  }
};

namespace detail {

inline std::uint32_t rd_u32(const unsigned char* p) {
  return p[0] | p[1] << 8 | p[2] << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
inline std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open file: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

}  // namespace detail

inline Waveform parse_wav(const std::string& bytes, const std::string& name) {
  using namespace detail;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0)
    throw io_error(name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    std::uint32_t chunk_len = rd_u32(p + off + 4);
    const unsigned char* id = p + off;
    std::size_t body = off + 8;
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (body + 16 > n) throw io_error(name + ": truncated fmt chunk");
      format = rd_u16(p + body);
      channels = rd_u16(p + body + 2);
      sample_rate = rd_u32(p + body + 4);
      bits = rd_u16(p + body + 14);
      if (format == 0xFFFE) {
        // WAVE_FORMAT_EXTENSIBLE: the real format tag leads the sub-format GUID.
        if (body + 26 > n) throw io_error(name + ": truncated fmt chunk");
        format = rd_u16(p + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = chunk_len;
    }
    off = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data_off == 0)
    throw io_error(name + ": missing fmt or data chunk");
  if (channels == 0 || sample_rate == 0)
    throw io_error(name + ": bad fmt chunk");
  if (data_off + data_len > n)
    throw io_error(name + ": truncated data chunk");

  bool pcm16 = (format == 1 && bits == 16);
  bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32)
    throw io_error(name + ": unsupported codec (format tag " +
                   std::to_string(format) + ", " + std::to_string(bits) +
                   " bits); only PCM16 and float32 are read");

  std::size_t bytes_per_sample = bits / 8;
  std::size_t frame_bytes = bytes_per_sample * channels;
  std::size_t frames = data_len / frame_bytes;

  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(frames);
  const unsigned char* d = p + data_off;
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (unsigned ch = 0; ch < channels; ++ch) {
      const unsigned char* s = d + i * frame_bytes + ch * bytes_per_sample;
      if (pcm16) {
        std::int16_t v = static_cast<std::int16_t>(rd_u16(s));
        acc += v / 32768.0;
      } else {
        float v;
        std::uint32_t u = rd_u32(s);
        std::memcpy(&v, &u, 4);
        acc += v;
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

inline Waveform read_wav(const std::string& path) {
  return parse_wav(detail::read_file_bytes(path), path);
}

enum class WavEncoding { Pcm16, Float32 };

inline void write_wav(const std::string& path, const Waveform& w,
                      WavEncoding enc = WavEncoding::Pcm16) {
  auto put_u32 = [](std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
  };
  auto put_u16 = [](std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>(v >> 8));
  };
  bool pcm = enc == WavEncoding::Pcm16;
  std::uint16_t bits = pcm ? 16 : 32;
  std::uint32_t sr = static_cast<std::uint32_t>(w.sample_rate);
  std::uint32_t data_len =
      static_cast<std::uint32_t>(w.samples.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, pcm ? 1 : 3);
  put_u16(out, 1);  // mono
  put_u32(out, sr);
  put_u32(out, sr * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_len);
  for (double x : w.samples) {
    if (pcm) {
      double scaled = x * 32768.0;
      if (scaled > 32767.0) scaled = 32767.0;
      if (scaled < -32768.0) scaled = -32768.0;
      put_u16(out, static_cast<std::uint16_t>(
                       static_cast<std::int16_t>(std::lrint(scaled))));
    } else {
      float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(out, u);
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot write file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace dysev
