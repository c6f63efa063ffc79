#include "msnet/simulation.hpp"

#include "msnet/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace msnet {

namespace {

struct RunAccumulator {
    double power_u = 0.0;
    double power_d = 0.0;
    Eigen::VectorXd rd;
    bool diverged = false;
};

struct CrossRunStats {
    Estimate out;
};

Estimate across_runs(const std::vector<double>& values) {
    Estimate e;
    const int n = static_cast<int>(values.size());
    if (n == 0) return e;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    e.value = mean;
    e.std_error = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
    return e;
}

// One closed-loop run from rest. The delay sampler never sees loop state;
// per step the order is: outputs, delay draw, receiver, noise, state update.
RunAccumulator run_closed_loop(const StateSpace& plant_ss, const StateSpace& ctrl_ss,
                               const ChannelSpec& spec, const SimConfig& cfg, Rng rng) {
    const int L = spec.delay_bound() + 1;
    const long burn = cfg.effective_burn_in();
    std::vector<double> u_hist(L, 0.0);
    std::vector<int> tau_hist(L, -1);
    std::vector<double> d_hist(L, 0.0);

    Eigen::VectorXd x_p = Eigen::VectorXd::Zero(plant_ss.order());
    Eigen::VectorXd x_k = Eigen::VectorXd::Zero(ctrl_ss.order());

    RunAccumulator acc;
    acc.rd = Eigen::VectorXd::Zero(L);
    Eigen::VectorXd rd_counts = Eigen::VectorXd::Zero(L);
    long samples = 0;

    for (long k = 0; k < cfg.horizon; ++k) {
        const double y = plant_ss.order() > 0 ? (plant_ss.C * x_p).value() : 0.0;
        const double u = (ctrl_ss.order() > 0 ? (ctrl_ss.C * x_k).value() : 0.0) + ctrl_ss.D * y;
        if (!std::isfinite(u) || std::abs(u) > kOverflowGuard) {
            acc.diverged = true;
            break;
        }

        const int tau = rng.next_category(spec.pmf);
        const int slot = static_cast<int>(k % L);
        u_hist[slot] = u;
        tau_hist[slot] = tau;

        double u_d = 0.0;
        double u_mean = 0.0;
        for (int i = 0; i < L && i <= k; ++i) {
            const int past = static_cast<int>((k - i) % L);
            if (tau_hist[past] == i) u_d += spec.weights[i] * u_hist[past];
            u_mean += spec.weights[i] * spec.pmf[i] * u_hist[past];
        }
        const double d = u_d - u_mean;
        d_hist[slot] = d;

        const double v = cfg.noise_std * rng.next_gaussian();
        const double e = v + u_d;

        if (plant_ss.order() > 0) x_p = plant_ss.A * x_p + plant_ss.B * e;
        if (ctrl_ss.order() > 0) x_k = ctrl_ss.A * x_k + ctrl_ss.B * y;

        if (k >= burn) {
            acc.power_u += u * u;
            acc.power_d += d * d;
            ++samples;
            for (int l = 0; l < L && l <= k - burn; ++l) {
                const int lagged = static_cast<int>((k - l) % L);
                acc.rd[l] += d * d_hist[lagged];
                rd_counts[l] += 1.0;
            }
        }
    }

    if (samples > 0) {
        acc.power_u /= samples;
        acc.power_d /= samples;
    } else if (acc.diverged) {
        acc.power_u = acc.power_d = kOverflowGuard;  // lower bound
    }
    for (int l = 0; l < L; ++l)
        if (rd_counts[l] > 0) acc.rd[l] /= rd_counts[l];
    return acc;
}

}  // namespace

void SimConfig::validate() const {
    if (horizon <= 0) throw std::invalid_argument("sim: horizon must be positive");
    if (runs <= 0) throw std::invalid_argument("sim: runs must be positive");
    if (effective_burn_in() >= horizon)
        throw std::invalid_argument("sim: burn_in must be smaller than horizon");
    if (noise_std < 0.0) throw std::invalid_argument("sim: noise_std must be nonnegative");
}

SimResult simulate(const LoopModel& m, const SimConfig& cfg) {
    cfg.validate();
    const StateSpace plant_ss = realize(m.plant);
    const StateSpace ctrl_ss = realize(m.controller);
    const int L = m.spec.delay_bound() + 1;

    std::vector<double> pu, pd;
    std::vector<Eigen::VectorXd> rds;
    SimResult result;
    for (int run = 0; run < cfg.runs; ++run) {
        RunAccumulator acc = run_closed_loop(plant_ss, ctrl_ss, m.spec, cfg,
                                             Rng::stream(cfg.seed, run));
        pu.push_back(acc.power_u);
        pd.push_back(acc.power_d);
        rds.push_back(acc.rd);
        if (acc.diverged) {
            result.diverged = true;
            ++result.diverged_runs;
        }
    }

    result.power_u = across_runs(pu);
    result.power_d = across_runs(pd);
    result.empirical_rd.resize(L);
    result.empirical_rd_stderr.resize(L);
    for (int l = 0; l < L; ++l) {
        std::vector<double> lane(rds.size());
        for (size_t r = 0; r < rds.size(); ++r) lane[r] = rds[r][l];
        const Estimate e = across_runs(lane);
        result.empirical_rd[l] = e.value;
        result.empirical_rd_stderr[l] = e.std_error;
    }
    return result;
}

ProbeResult channel_probe(const ChannelSpec& spec, double input_power, const SimConfig& cfg) {
    cfg.validate();
    if (input_power < 0.0) throw std::invalid_argument("probe: input power must be nonnegative");
    const int L = spec.delay_bound() + 1;
    const double sigma = std::sqrt(input_power);

    std::vector<double> means;
    std::vector<Eigen::VectorXd> rds;
    for (int run = 0; run < cfg.runs; ++run) {
        Rng rng = Rng::stream(cfg.seed, run);
        std::vector<double> u_hist(L, 0.0);
        std::vector<int> tau_hist(L, -1);
        std::vector<double> d_hist(L, 0.0);
        double mean_acc = 0.0;
        Eigen::VectorXd rd = Eigen::VectorXd::Zero(L);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(L);
        long samples = 0;
        for (long k = 0; k < cfg.horizon; ++k) {
            const double u = sigma * rng.next_gaussian();
            const int tau = rng.next_category(spec.pmf);
            const int slot = static_cast<int>(k % L);
            u_hist[slot] = u;
            tau_hist[slot] = tau;
            double u_d = 0.0;
            double u_mean = 0.0;
            for (int i = 0; i < L && i <= k; ++i) {
                const int past = static_cast<int>((k - i) % L);
                if (tau_hist[past] == i) u_d += spec.weights[i] * u_hist[past];
                u_mean += spec.weights[i] * spec.pmf[i] * u_hist[past];
            }
            const double d = u_d - u_mean;
            d_hist[slot] = d;
            if (k >= L) {  // wait for the pipeline to fill
                mean_acc += d;
                ++samples;
                for (int l = 0; l < L && l <= k - L; ++l) {
                    rd[l] += d * d_hist[static_cast<int>((k - l) % L)];
                    counts[l] += 1.0;
                }
            }
        }
        means.push_back(samples ? mean_acc / samples : 0.0);
        for (int l = 0; l < L; ++l)
            if (counts[l] > 0) rd[l] /= counts[l];
        rds.push_back(rd);
    }

    ProbeResult out;
    out.input_power = input_power;
    out.samples_per_run = std::max<long>(0, cfg.horizon - L);
    out.mean_d = across_runs(means);
    out.rd.resize(L);
    out.rd_stderr.resize(L);
    for (int l = 0; l < L; ++l) {
        std::vector<double> lane(rds.size());
        for (size_t r = 0; r < rds.size(); ++r) lane[r] = rds[r][l];
        const Estimate e = across_runs(lane);
        out.rd[l] = e.value;
        out.rd_stderr[l] = e.std_error;
    }
    return out;
}

std::vector<SweepPoint> kappa_sweep(const RatFn& plant, const ChannelSpec& spec,
                                    const SynthesisResult& synth, const RatFn& qtilde,
                                    const std::vector<double>& kappas, const SimConfig& cfg) {
    std::vector<SweepPoint> rows;
    for (double kappa : kappas) {
        if (kappa < 0.0) throw std::invalid_argument("kappa_sweep: kappa must be nonnegative");
        const RatFn q = synth.q_opt + kappa * qtilde;
        const RatFn k = youla_controller(synth.pair, q);
        const LoopModel loop = make_loop(plant, k, spec);
        const StabilityReport stability = mean_square_stability(loop);
        if (!stability.ms_margin)
            throw std::runtime_error("kappa_sweep: parameterized controller lost internal stability");

        SweepPoint row;
        row.kappa = kappa;
        row.margin = *stability.ms_margin;
        if (stability.power_gain)
            row.power_theory = *stability.power_gain * cfg.noise_std * cfg.noise_std;

        const SimResult sim = simulate(loop, cfg);
        row.power_sim = sim.power_u;
        row.diverged = sim.diverged;
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(),
              [](const SweepPoint& a, const SweepPoint& b) { return a.margin < b.margin; });
    return rows;
}

}  // namespace msnet
