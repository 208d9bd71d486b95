#pragma once

#include <cstdint>

namespace topodyn {

// SplitMix64 finalizer. Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator: state walks an arithmetic sequence with a
// per-stream odd increment and the output is the mixed counter.  Streams
// derived from the same (seed, stream_id) replay identically no matter how
// other streams interleave, which keeps parallel runs schedule-independent.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    state_ = mix64(seed ^ mix64(stream_id * 0xda942042e4dd58b5ULL + 0x8bb84b93962eacc9ULL));
    gamma_ = mix64(stream_id ^ mix64(seed + 0x632be59bd9b4e019ULL)) | 1ULL;
  }

  std::uint64_t next_u64() {
    state_ += gamma_;
    return mix64(state_);
  }

  // Uniform in [0, 1), 53 significant bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double next_double_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    std::uint64_t x, r;
    do {
      x = next_u64();
      r = x % n;
    } while (x - r > std::uint64_t(0) - n);
    return r;
  }

 private:
  std::uint64_t state_;
  std::uint64_t gamma_;
};

// Purpose tags keep draw sequences of unrelated stages independent, so a
// change in how many draws one stage makes cannot shift another stage.
namespace stream_purpose {
constexpr std::uint64_t graph = 0x67726170685f5f01ULL;
constexpr std::uint64_t init = 0x696e69745f5f5f02ULL;
constexpr std::uint64_t dynamics = 0x64796e5f5f5f5f03ULL;
constexpr std::uint64_t landmarks = 0x6c616e645f5f5f04ULL;
constexpr std::uint64_t anneal = 0x616e6e655f5f5f05ULL;
constexpr std::uint64_t calibrate = 0x63616c695f5f5f06ULL;
}  // namespace stream_purpose

inline RngStream derive_stream(std::uint64_t master, std::uint64_t purpose,
                               std::uint64_t index = 0) {
  return RngStream(master, mix64(purpose) ^ (index * 0x2545f4914f6cdd1dULL + purpose));
}

}  // namespace topodyn
