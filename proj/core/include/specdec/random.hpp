#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace specdec {

/// Identifier recorded in every dataset manifest. Changing any part of the
/// stream (engine, seed derivation, uniform or normal transform) must bump it.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-derive/box-muller-v1";

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for a (master seed, stream, index) triple. Used so that every
/// trial, fold and grid cell owns its own stream independent of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) noexcept;

/// Reproducible random source. std::mt19937_64's output sequence is fixed by
/// the standard; the uniform and normal transforms are implemented here since
/// the standard library distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (cosine branch only, two uniforms per draw).
    double normal();

    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace specdec
