#include "msnet/random.hpp"

#include <cmath>
#include <numbers>

namespace msnet {

namespace {
constexpr std::uint64_t kNonzeroFallback = 0x9E3779B97F4A7C15ULL;
}

Rng::Rng(std::uint64_t seed) : state_(seed ? seed : kNonzeroFallback) {}

std::uint64_t Rng::mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t master_seed, std::uint64_t run_index) {
    return Rng(mix(master_seed ^ mix(run_index + 1)));
}

std::uint64_t Rng::next_u64() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = 1.0 - next_uniform();  // (0, 1]
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

int Rng::next_category(const Eigen::VectorXd& pmf) {
    const double u = next_uniform();
    double acc = 0.0;
    for (int i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        if (u < acc) return i;
    }
    return static_cast<int>(pmf.size()) - 1;
}

}  // namespace msnet
