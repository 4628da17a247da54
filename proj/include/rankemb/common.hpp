#ifndef RANKEMB_COMMON_HPP_
#define RANKEMB_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rankemb {

using TrackId = std::int32_t;

// Error taxonomy: every failure mode surfaces as one of these so the CLI can
// report a stage-named diagnostic and exit nonzero.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : ValidationError {
  explicit DimensionError(const std::string& msg) : ValidationError(msg) {}
};

struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StateError : std::runtime_error {
  explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a, used for content-addressing stage outputs.
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t h = 1469598103934665603ULL) {
  return fnv1a(s.data(), s.size(), h);
}

}  // namespace rankemb

#endif  // RANKEMB_COMMON_HPP_
