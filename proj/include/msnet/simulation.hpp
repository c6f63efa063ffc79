#pragma once

#include "msnet/loop.hpp"
#include "msnet/random.hpp"
#include "msnet/synthesis.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace msnet {

struct SimConfig {
    long horizon = 20000;   // time steps per run
    int runs = 200;         // independent ensemble members
    long burn_in = -1;      // samples discarded before averaging; <0 means horizon/10
    double noise_std = 1.0; // standard deviation of the white external input
    std::uint64_t seed = 1;

    long effective_burn_in() const { return burn_in >= 0 ? burn_in : horizon / 10; }
    void validate() const;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Signal magnitudes beyond this mark a run as diverged.
inline constexpr double kOverflowGuard = 1e12;

struct SimResult {
    Estimate power_u;                 // time+ensemble average of u^2 after burn-in
    Estimate power_d;                 // same for the uncertainty output d
    Eigen::VectorXd empirical_rd;     // lag 0..delay_bound autocorrelation of d
    Eigen::VectorXd empirical_rd_stderr;
    bool diverged = false;            // any run hit the overflow guard
    int diverged_runs = 0;
};

/// Time-domain Monte Carlo of the closed loop: per step the delay is drawn
/// from the PMF, the receiver combines time-stamped arrivals, and plant and
/// controller advance from rest. Identical (model, config, seed) triples
/// give bit-identical results; runs use independent derived streams.
SimResult simulate(const LoopModel& m, const SimConfig& cfg);

struct ProbeResult {
    Estimate mean_d;
    Eigen::VectorXd rd;
    Eigen::VectorXd rd_stderr;
    double input_power = 0.0;
    long samples_per_run = 0;
};

/// Drives the transmission block open-loop with white input of the given
/// power and measures the uncertainty output statistics.
ProbeResult channel_probe(const ChannelSpec& spec, double input_power, const SimConfig& cfg);

struct SweepPoint {
    double kappa = 0.0;
    double margin = 0.0;
    std::optional<double> power_theory;  // unset when margin >= 1
    Estimate power_sim;
    bool diverged = false;
};

/// Controllers Q_opt + kappa Qtilde for each kappa: margin, power predicted
/// by the power balance, and simulated power. Rows sorted by margin.
std::vector<SweepPoint> kappa_sweep(const RatFn& plant, const ChannelSpec& spec,
                                    const SynthesisResult& synth, const RatFn& qtilde,
                                    const std::vector<double>& kappas, const SimConfig& cfg);

}  // namespace msnet
