#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vdnnsim {

using LayerId = std::int32_t;
using Bytes = std::uint64_t;
using TimeNs = std::int64_t;

inline constexpr LayerId kNoLayer = -1;

// Effectively-infinite pool capacity (used by the oracle runs).
inline constexpr Bytes kUnlimitedBytes = Bytes{1} << 62;

// Base class for configuration and usage errors. Running out of pool memory
// is not an error: it is a simulation verdict.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error { using Error::Error; };
struct UnknownPreset : Error { using Error::Error; };
struct InvalidDepth : Error { using Error::Error; };
struct OverflowError : Error { using Error::Error; };
struct WrongLayerKind : Error { using Error::Error; };
struct PoolUseError : Error { using Error::Error; };
struct InvalidDecision : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

inline Bytes checked_mul(Bytes a, Bytes b, const char* what) {
  Bytes r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw OverflowError(std::string(what) + ": product exceeds 64-bit range");
  }
  return r;
}

inline Bytes align_up(Bytes v, Bytes alignment) {
  return (v + alignment - 1) / alignment * alignment;
}

inline TimeNs to_ns(double seconds) {
  return static_cast<TimeNs>(std::llround(seconds * 1e9));
}

}  // namespace vdnnsim
