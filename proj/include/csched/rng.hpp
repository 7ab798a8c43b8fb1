#pragma once

#include <cstdint>
#include <random>

namespace csched {

// splitmix64 finalizer; diffuses nearby seeds before feeding mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-worker stream seed. Distinct worker indices give pairwise distinct
// seeds for a fixed master seed (xor then a bijective mix).
inline std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t worker_index) {
    return splitmix64(master_seed ^ worker_index);
}

class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    RngStream(std::uint64_t master_seed, std::uint64_t worker_index)
        : engine_(stream_seed(master_seed, worker_index)) {}

    // Uniform on [0, 1).
    double uniform01() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return 1.0 - uniform01(); }

    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace csched
