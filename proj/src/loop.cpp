#include "msnet/loop.hpp"

#include "msnet/errors.hpp"
#include "msnet/state_space.hpp"

#include <cmath>
#include <stdexcept>

namespace msnet {

namespace {

bool share_outside_root(const Poly& a, const Poly& b) {
    if (a.degree() - a.valuation() <= 0 || b.degree() - b.valuation() <= 0) return false;
    const RootSet ra = roots_in_z(a);
    const RootSet rb = roots_in_z(b);
    for (const auto& ea : ra.entries) {
        if (ea.side != CircleSide::Outside) continue;
        for (const auto& eb : rb.entries) {
            if (eb.side != CircleSide::Outside) continue;
            if (std::abs(ea.z - eb.z) <= kCancelTol * std::max(1.0, std::abs(ea.z)))
                return true;
        }
    }
    return false;
}

RatFn closed_loop_denominator(const LoopModel& m) {
    const RatFn hkp = m.stats.H * m.controller * m.plant;
    const RatFn one_minus = 1.0 - hkp;
    if (one_minus.is_zero()) throw InfeasibleError("loop: 1 - HKP vanishes identically");
    return one_minus;
}

}  // namespace

void validate_plant_channel(const RatFn& plant, const RatFn& mean_channel_fn) {
    if (plant.is_zero() || plant.relative_degree() < 1)
        throw std::invalid_argument("plant must be strictly proper");
    if (share_outside_root(mean_channel_fn.num(), plant.den()) ||
        share_outside_root(mean_channel_fn.den(), plant.num()))
        throw InfeasibleError(
            "unstable pole-zero cancellation between the mean channel and the plant");
}

LoopModel make_loop(RatFn plant, RatFn controller, ChannelSpec spec) {
    validate_plant_channel(plant, mean_channel(spec));
    ChannelStats stats = channel_stats(spec);
    if (!controller.is_zero() && controller.relative_degree() < 0)
        throw std::invalid_argument("controller must be proper");
    return LoopModel{std::move(plant), std::move(controller), std::move(spec), std::move(stats)};
}

RatFn nominal_transfer(const LoopModel& m) {
    return (m.controller * m.plant) / closed_loop_denominator(m);
}

RatFn complementary_sensitivity(const LoopModel& m) {
    return (m.stats.H * m.controller * m.plant) / closed_loop_denominator(m);
}

bool internally_stable(const LoopModel& m) {
    const RatFn hp = m.stats.H * m.plant;
    const Poly characteristic =
        hp.den() * m.controller.den() - hp.num() * m.controller.num();
    if (characteristic.is_zero()) return false;
    if (characteristic.degree() - characteristic.valuation() > 0) {
        const RootSet roots = roots_in_z(characteristic);
        if (roots.any(CircleSide::Outside) || roots.any(CircleSide::On)) return false;
    }
    // A cancelled unstable mode is invisible in the reduced loop but fatal.
    if (share_outside_root(m.controller.num(), hp.den())) return false;
    if (share_outside_root(m.controller.den(), hp.num())) return false;
    return true;
}

StabilityReport mean_square_stability(const LoopModel& m) {
    StabilityReport report;
    report.internally_stable = internally_stable(m);
    if (!report.internally_stable) {
        report.verdict = StabilityVerdict::NominallyUnstable;
        return report;
    }
    const RatFn wt = m.stats.W * complementary_sensitivity(m);
    const double margin = h2_norm_sq(wt);
    report.ms_margin = margin;
    if (margin < 1.0) {
        report.verdict = StabilityVerdict::MeanSquareStable;
        report.power_gain = h2_norm_sq(nominal_transfer(m)) / (1.0 - margin);
    } else {
        report.verdict = StabilityVerdict::NotMeanSquareStable;
    }
    return report;
}

const char* to_string(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::MeanSquareStable: return "mean-square stable";
        case StabilityVerdict::NotMeanSquareStable: return "not mean-square stable";
        case StabilityVerdict::NominallyUnstable: return "nominally unstable";
    }
    return "unknown";
}

}  // namespace msnet
