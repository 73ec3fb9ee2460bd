// SPDX-License-Identifier: Apache-2.0
#include "eadvc/common.hpp"

#include <cmath>
#include <cstdio>

namespace eadvc {

const char* err_name(Err e) {
  switch (e) {
    case Err::InputTooShort: return "InputTooShort";
    case Err::InvalidIntensity: return "InvalidIntensity";
    case Err::InvalidPerturbation: return "InvalidPerturbation";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::MalformedManifest: return "MalformedManifest";
    case Err::MissingAudio: return "MissingAudio";
    case Err::OverlappingSplits: return "OverlappingSplits";
    case Err::EmptySplit: return "EmptySplit";
    case Err::BatchTooSmall: return "BatchTooSmall";
    case Err::InvalidCorrelation: return "InvalidCorrelation";
    case Err::NonPositiveDuration: return "NonPositiveDuration";
    case Err::InsufficientVoicedFrames: return "InsufficientVoicedFrames";
    case Err::MissingAsrCheckpoint: return "MissingAsrCheckpoint";
    case Err::WeakProbe: return "WeakProbe";
    case Err::ConfigMismatch: return "ConfigMismatch";
    case Err::MissingDependency: return "MissingDependency";
    case Err::InvalidConfig: return "InvalidConfig";
    case Err::NanLoss: return "NanLoss";
    case Err::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Err code, const std::string& msg)
    : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}

void fail(Err code, const std::string& msg) { throw Error(code, msg); }

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

static std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  // 53 high bits -> double in [0,1)
  return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  if (hi <= lo) return lo;
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double Rng::gaussian() {
  double u1 = uniform();
  double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Rng Rng::fork(std::uint64_t stream) const {
  std::uint64_t tag[2] = {state_, stream ^ 0xa0761d6478bd642full};
  return Rng(fnv1a(tag, sizeof(tag)));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10e", v);
  return std::string(buf);
}

}  // namespace eadvc
