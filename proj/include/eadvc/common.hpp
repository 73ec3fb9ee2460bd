// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eadvc {

enum class Err {
  InputTooShort,
  InvalidIntensity,
  InvalidPerturbation,
  ShapeMismatch,
  MalformedManifest,
  MissingAudio,
  OverlappingSplits,
  EmptySplit,
  BatchTooSmall,
  InvalidCorrelation,
  NonPositiveDuration,
  InsufficientVoicedFrames,
  MissingAsrCheckpoint,
  WeakProbe,
  ConfigMismatch,
  MissingDependency,
  InvalidConfig,
  NanLoss,
  IoError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg);
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] void fail(Err code, const std::string& msg);

inline void require(bool ok, Err code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

// 64-bit FNV-1a over raw bytes. Used for config hashes, corpus hashes and
// parameter fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

// Deterministic, portable random stream (splitmix64 core, Box-Muller
// gaussians). All randomness in the repo flows through this so runs are
// bit-stable across invocations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive bounds
  double gaussian();                // standard normal

  // Derives an independent stream; (seed, stream) pairs never collide in
  // practice because the tag is folded through the hash.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_;
};

std::string format_double(double v);  // fixed "%.10e" for byte-stable logs

}  // namespace eadvc
