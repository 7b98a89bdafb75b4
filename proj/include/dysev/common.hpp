#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dysev {

// Parse failure in an input file; line is 1-based.
struct parse_error : std::runtime_error {
  int line;
  parse_error(const std::string& msg, int line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
};

// Bad configuration or bad call-site arguments.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A feature precondition failed. `code` is the short machine-readable
// reason that ends up in the missing-reason sidecar.
struct feature_error : std::runtime_error {
  std::string code;
  feature_error(std::string reason_code, const std::string& msg)
      : std::runtime_error(msg), code(std::move(reason_code)) {}
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, used to stamp artifacts with an input fingerprint.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 1469598103934665603ull) {
  auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 1469598103934665603ull) {
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace dysev
