#pragma once

#include "msnet/channel.hpp"
#include "msnet/rational.hpp"

#include <optional>

namespace msnet {

/// Feedback loop closed over the random-delay channel: strictly proper
/// plant, proper controller, channel statistics.
struct LoopModel {
    RatFn plant;
    RatFn controller;
    ChannelSpec spec;
    ChannelStats stats;
};

/// Rejects a plant that is not strictly proper and any unstable pole-zero
/// cancellation between the mean channel and the plant (checked on H and P
/// separately, before the product H*P is ever formed where reduction would
/// mask it, and before any spectral factorization).
void validate_plant_channel(const RatFn& plant, const RatFn& mean_channel_fn);

LoopModel make_loop(RatFn plant, RatFn controller, ChannelSpec spec);

/// Nominal transfer from the uncertainty output back to the control signal:
/// G = KP (1 - HKP)^{-1}.
RatFn nominal_transfer(const LoopModel& m);

/// Complementary sensitivity of the nominal loop: T = HKP (1 - HKP)^{-1}.
RatFn complementary_sensitivity(const LoopModel& m);

/// Internal stability decided on the uncancelled characteristic polynomial
/// d_HP d_K - n_HP n_K plus a shared-unstable-root screen between K and HP.
bool internally_stable(const LoopModel& m);

enum class StabilityVerdict { MeanSquareStable, NotMeanSquareStable, NominallyUnstable };

struct StabilityReport {
    bool internally_stable = false;
    /// ||W T||_2^2; set whenever the nominal loop is internally stable.
    std::optional<double> ms_margin;
    StabilityVerdict verdict = StabilityVerdict::NominallyUnstable;
    /// Predicted ||u||_P^2 per unit input variance: ||G||_2^2 / (1 - margin).
    /// Unset when the loop is nominally unstable or the margin is >= 1.
    std::optional<double> power_gain;
};

/// Small-gain verdict for the closed loop: mean-square stable iff internally
/// stable and ||W T||_2^2 < 1.
StabilityReport mean_square_stability(const LoopModel& m);

const char* to_string(StabilityVerdict v);

}  // namespace msnet
