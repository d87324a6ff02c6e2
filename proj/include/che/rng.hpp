#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "che/bytes.hpp"

namespace che {

// Deterministic random stream. Every randomized operation in the library
// draws from one of these, so a run is reproducible from its seed alone.
class DetRng {
  public:
    explicit DetRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t u64() { return engine_(); }

    // Uniform in [0, n). Rejection-sampled, so unbiased for every n > 0.
    std::uint64_t below(std::uint64_t n);

    // Uniform in [0, 1).
    double unit();

    Bytes bytes(std::size_t n);

    // Independent child stream keyed off this stream's seed and the label;
    // distinct labels give unrelated streams, and deriving does not disturb
    // this stream's own sequence.
    DetRng derive(const std::string& label) const;

    std::mt19937_64& engine() { return engine_; }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t os_seed();

} // namespace che
