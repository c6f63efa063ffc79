#include "msnet/job.hpp"

#include "msnet/errors.hpp"
#include "msnet/loop.hpp"
#include "msnet/state_space.hpp"
#include "msnet/synthesis.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

namespace msnet {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why, const json& value) {
    std::ostringstream os;
    os << "config field '" << field << "' " << why << " (got " << value.dump() << ")";
    throw std::invalid_argument(os.str());
}

std::vector<double> parse_number_list(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) bad_field(field, "must be a nonempty array of numbers", j);
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) bad_field(field, "must contain only numbers", j);
        out.push_back(v.get<double>());
    }
    return out;
}

RatFn parse_ratfn(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("num") || !j.contains("den"))
        bad_field(field, "must be an object with 'num' and 'den' arrays (descending powers of z)",
                  j);
    return RatFn::from_z_form(parse_number_list(j.at("num"), field + ".num"),
                              parse_number_list(j.at("den"), field + ".den"));
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json rootset_to_json(const RootSet& roots) {
    json out = json::array();
    for (const auto& e : roots.entries) {
        out.push_back({{"re", e.z.real()},
                       {"im", e.z.imag()},
                       {"multiplicity", e.multiplicity}});
    }
    return out;
}

json estimate_to_json(const Estimate& e) {
    return {{"value", e.value}, {"std_error", e.std_error}};
}

json channel_section(const ChannelStats& stats) {
    json out;
    out["H"] = ratfn_to_json(stats.H);
    out["r"] = vector_to_json(stats.r);
    out["s_omega"] = vector_to_json(stats.S.descending_z_coeffs());
    out["phi"] = poly_to_json(stats.phi);
    out["W"] = ratfn_to_json(stats.W);
    out["warnings"] = stats.warnings;
    return out;
}

json stability_section(const StabilityReport& rep) {
    json out;
    out["internally_stable"] = rep.internally_stable;
    out["verdict"] = to_string(rep.verdict);
    out["ms_margin"] = rep.ms_margin ? json(*rep.ms_margin) : json();
    if (rep.verdict == StabilityVerdict::NominallyUnstable) {
        out["predicted_power_gain"] = json();
    } else {
        out["predicted_power_gain"] =
            rep.power_gain ? json(*rep.power_gain) : json("unbounded");
    }
    return out;
}

json stabilizability_section(const StabilizabilityReport& rep) {
    json out;
    out["index"] = rep.index;
    out["stabilizable"] = rep.stabilizable;
    out["relative_degree_tau"] = rep.relative_degree_tau;
    out["unstable_poles"] = rootset_to_json(rep.unstable_poles);
    if (rep.dropout_check)
        out["dropout_check"] = {{"stabilizable", rep.dropout_check->stabilizable},
                                {"threshold", rep.dropout_check->threshold}};
    if (rep.single_pole_check)
        out["single_pole_check"] = {{"stabilizable", rep.single_pole_check->stabilizable},
                                    {"lhs", rep.single_pole_check->lhs}};
    out["notes"] = rep.notes;
    return out;
}

json simulation_section(const SimResult& sim, const SimConfig& cfg) {
    json out;
    out["power_u"] = estimate_to_json(sim.power_u);
    out["power_d"] = estimate_to_json(sim.power_d);
    out["empirical_rd"] = vector_to_json(sim.empirical_rd);
    out["empirical_rd_stderr"] = vector_to_json(sim.empirical_rd_stderr);
    out["diverged"] = sim.diverged;
    out["diverged_runs"] = sim.diverged_runs;
    out["settings"] = {{"horizon", cfg.horizon},
                       {"runs", cfg.runs},
                       {"burn_in", cfg.effective_burn_in()},
                       {"noise_std", cfg.noise_std},
                       {"seed", cfg.seed}};
    return out;
}

std::string csv_number(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

const RatFn& require_plant(const JobConfig& cfg) {
    if (!cfg.plant) throw std::invalid_argument("config field 'plant' is required");
    return *cfg.plant;
}

const RatFn& require_controller(const JobConfig& cfg) {
    if (!cfg.controller) throw std::invalid_argument("config field 'controller' is required");
    return *cfg.controller;
}

const ChannelSpec& require_channel(const JobConfig& cfg) {
    if (!cfg.channel) throw std::invalid_argument("config field 'channel' is required");
    return *cfg.channel;
}

}  // namespace

json ratfn_to_json(const RatFn& f) {
    // Descending powers of z with a shared scale, the same convention the
    // config uses.
    const int len = std::max(f.num().degree(), f.den().degree()) + 1;
    Eigen::VectorXd num = Eigen::VectorXd::Zero(std::max(len, 1));
    Eigen::VectorXd den = Eigen::VectorXd::Zero(std::max(len, 1));
    num.head(f.num().coeffs().size()) = f.num().coeffs();
    den.head(f.den().coeffs().size()) = f.den().coeffs();
    return {{"num", vector_to_json(num)}, {"den", vector_to_json(den)}};
}

json poly_to_json(const Poly& p) { return vector_to_json(p.coeffs()); }

JobConfig parse_job_config(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("config root must be a JSON object");
    JobConfig cfg;
    cfg.echo = doc;

    for (const auto& [key, value] : doc.items()) {
        if (key != "plant" && key != "controller" && key != "channel" && key != "sim" &&
            key != "sweep")
            bad_field(key, "is not a recognized section", value);
    }

    if (doc.contains("plant")) cfg.plant = parse_ratfn(doc.at("plant"), "plant");
    if (doc.contains("controller"))
        cfg.controller = parse_ratfn(doc.at("controller"), "controller");

    if (doc.contains("channel")) {
        const json& ch = doc.at("channel");
        if (!ch.is_object() || !ch.contains("pmf") || !ch.contains("weights"))
            bad_field("channel", "must be an object with 'pmf' and 'weights' arrays", ch);
        cfg.channel = ChannelSpec(to_vector(parse_number_list(ch.at("pmf"), "channel.pmf")),
                                  to_vector(parse_number_list(ch.at("weights"), "channel.weights")));
    }

    if (doc.contains("sim")) {
        const json& s = doc.at("sim");
        if (!s.is_object()) bad_field("sim", "must be an object", s);
        if (s.contains("horizon")) cfg.sim.horizon = s.at("horizon").get<long>();
        if (s.contains("runs")) cfg.sim.runs = s.at("runs").get<int>();
        if (s.contains("burn_in")) cfg.sim.burn_in = s.at("burn_in").get<long>();
        if (s.contains("noise_std")) cfg.sim.noise_std = s.at("noise_std").get<double>();
        if (s.contains("seed")) cfg.seed = s.at("seed").get<std::uint64_t>();
    }

    if (doc.contains("sweep")) {
        const json& sw = doc.at("sweep");
        if (!sw.is_object()) bad_field("sweep", "must be an object", sw);
        if (sw.contains("tau_min") || sw.contains("tau_max")) {
            if (!sw.contains("tau_min") || !sw.contains("tau_max"))
                bad_field("sweep", "needs both 'tau_min' and 'tau_max'", sw);
            cfg.tau_range = {sw.at("tau_min").get<int>(), sw.at("tau_max").get<int>()};
            if (cfg.tau_range->first < 1 || cfg.tau_range->second < cfg.tau_range->first)
                bad_field("sweep", "requires 1 <= tau_min <= tau_max", sw);
        }
        if (sw.contains("kappas")) {
            cfg.kappas = parse_number_list(sw.at("kappas"), "sweep.kappas");
            if (!sw.contains("qtilde"))
                bad_field("sweep", "kappa sweeps need a 'qtilde' entry", sw);
            cfg.qtilde = parse_ratfn(sw.at("qtilde"), "sweep.qtilde");
        }
    }
    return cfg;
}

namespace {

json run_subcommand(const std::string& sub, JobConfig& cfg, std::optional<std::string>& csv) {
    const ChannelSpec& spec = require_channel(cfg);
    // The hidden-cancellation gate runs on the mean channel alone, before the
    // spectral factorization can fail for unrelated reasons.
    if (cfg.plant && sub != "analyze")
        validate_plant_channel(*cfg.plant, mean_channel(spec));
    const ChannelStats stats = channel_stats(spec);

    json report;
    report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    report["subcommand"] = sub;
    report["config"] = cfg.echo;
    report["channel"] = channel_section(stats);

    if (sub == "analyze") {
        json profile = json::array();
        for (const auto& s : snr_profile(stats, 64)) {
            profile.push_back({{"theta", s.theta},
                               {"snr", s.unbounded ? json() : json(s.snr)},
                               {"unbounded", s.unbounded}});
        }
        report["snr_profile"] = profile;
        return report;
    }

    if (sub == "check-stability") {
        const LoopModel loop = make_loop(require_plant(cfg), require_controller(cfg), spec);
        report["stability"] = stability_section(mean_square_stability(loop));
        return report;
    }

    if (sub == "stabilizability") {
        report["stabilizability"] =
            stabilizability_section(assess_stabilizability(require_plant(cfg), spec, stats));
        return report;
    }

    if (sub == "synthesize") {
        validate_plant_channel(require_plant(cfg), stats.H);
        const SynthesisResult synth = synthesize(*cfg.plant, stats);
        report["synthesis"] = {{"q_opt", ratfn_to_json(synth.q_opt)},
                               {"k_opt", ratfn_to_json(synth.k_opt)},
                               {"index", synth.index},
                               {"achieved_margin", synth.achieved_margin},
                               {"z2_norm_sq", synth.z2_norm_sq},
                               {"relative_degree_tau", synth.relative_degree_tau}};
        return report;
    }

    if (sub == "simulate") {
        const LoopModel loop = make_loop(require_plant(cfg), require_controller(cfg), spec);
        report["seed"] = cfg.sim.seed;
        report["simulation"] = simulation_section(simulate(loop, cfg.sim), cfg.sim);
        return report;
    }

    if (sub == "sweep-tau") {
        if (!cfg.tau_range)
            throw std::invalid_argument("config field 'sweep.tau_min'/'sweep.tau_max' is required");
        validate_plant_channel(require_plant(cfg), stats.H);
        const RatFn hp = stats.H * require_plant(cfg);
        const RootSet poles = roots_in_z(hp.den());
        if (poles.any(CircleSide::On))
            throw InfeasibleError("sweep-tau: pole on the unit circle");
        const RootSet unstable = poles.filtered(CircleSide::Outside);

        json rows = json::array();
        std::ostringstream table;
        table << "tau,index,stabilizable\n";
        for (int tau = cfg.tau_range->first; tau <= cfg.tau_range->second; ++tau) {
            const double index = stabilizability_index(unstable, stats.W, tau);
            rows.push_back({{"tau", tau}, {"index", index}, {"stabilizable", index < 1.0}});
            table << tau << "," << csv_number(index) << "," << (index < 1.0 ? 1 : 0) << "\n";
        }
        report["tau_sweep"] = rows;
        csv = table.str();
        return report;
    }

    if (sub == "sweep-kappa") {
        if (cfg.kappas.empty() || !cfg.qtilde)
            throw std::invalid_argument("config field 'sweep.kappas'/'sweep.qtilde' is required");
        validate_plant_channel(require_plant(cfg), stats.H);
        const SynthesisResult synth = synthesize(*cfg.plant, stats);
        const std::vector<SweepPoint> rows =
            kappa_sweep(*cfg.plant, spec, synth, *cfg.qtilde, cfg.kappas, cfg.sim);

        report["seed"] = cfg.sim.seed;
        json jrows = json::array();
        std::ostringstream table;
        table << "kappa,margin,power_theory,power_sim,power_sim_stderr,diverged\n";
        for (const auto& row : rows) {
            jrows.push_back({{"kappa", row.kappa},
                             {"margin", row.margin},
                             {"power_theory", row.power_theory ? json(*row.power_theory)
                                                               : json("unbounded")},
                             {"power_sim", estimate_to_json(row.power_sim)},
                             {"diverged", row.diverged}});
            table << csv_number(row.kappa) << "," << csv_number(row.margin) << ","
                  << (row.power_theory ? csv_number(*row.power_theory) : "unbounded") << ","
                  << csv_number(row.power_sim.value) << ","
                  << csv_number(row.power_sim.std_error) << "," << (row.diverged ? 1 : 0)
                  << "\n";
        }
        report["kappa_sweep"] = jrows;
        csv = table.str();
        return report;
    }

    throw std::invalid_argument("unknown subcommand '" + sub + "'");
}

}  // namespace

JobOutcome execute_job(const std::string& subcommand, const json& config,
                       const JobOverrides& overrides) {
    JobOutcome outcome;
    try {
        JobConfig cfg = parse_job_config(config);
        if (overrides.runs) cfg.sim.runs = *overrides.runs;
        if (overrides.horizon) cfg.sim.horizon = *overrides.horizon;
        if (overrides.seed) cfg.seed = *overrides.seed;
        if (!cfg.seed && (subcommand == "simulate" || subcommand == "sweep-kappa")) {
            cfg.seed = std::random_device{}();
            outcome.error = "no seed supplied; generated " + std::to_string(*cfg.seed);
        }
        cfg.sim.seed = cfg.seed.value_or(cfg.sim.seed);
        outcome.report = run_subcommand(subcommand, cfg, outcome.csv);
    } catch (const InfeasibleError& e) {
        outcome.exit_code = 3;
        outcome.error = e.what();
    } catch (const std::invalid_argument& e) {
        outcome.exit_code = 2;
        outcome.error = e.what();
    } catch (const nlohmann::json::exception& e) {
        outcome.exit_code = 2;
        outcome.error = e.what();
    } catch (const std::exception& e) {
        outcome.exit_code = 1;
        outcome.error = e.what();
    }
    return outcome;
}

}  // namespace msnet
