#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace msnet {

/// Deterministic 64-bit shift-register generator (xorshift64*), pinned so
/// that identical seeds reproduce identical streams on any platform:
///
///   x ^= x >> 12; x ^= x << 25; x ^= x >> 27; return x * 0x2545F4914F6CDD1D
///
/// Stream splitting hashes the run index into the master seed through the
/// splitmix64 finalizer: state = mix(master ^ mix(run + 1)), with a fixed
/// odd constant substituted for a zero state. Gaussian variates use the
/// Box-Muller transform (pairs cached); categorical draws use the inverse
/// CDF of the supplied PMF.
class Rng {
 public:
    explicit Rng(std::uint64_t seed);

    static std::uint64_t mix(std::uint64_t x);  // splitmix64 finalizer
    static Rng stream(std::uint64_t master_seed, std::uint64_t run_index);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 significant bits.
    double next_uniform();
    double next_gaussian();
    /// Index i with probability pmf[i]; pmf must sum to 1.
    int next_category(const Eigen::VectorXd& pmf);

 private:
    std::uint64_t state_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace msnet
