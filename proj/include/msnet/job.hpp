#pragma once

#include "msnet/channel.hpp"
#include "msnet/rational.hpp"
#include "msnet/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace msnet {

inline constexpr const char* kToolName = "msnet";
inline constexpr const char* kToolVersion = "0.1.0";

/// Parsed job description. Coefficient lists in the config are written in
/// descending powers of z and converted to backward-shift form here, at the
/// boundary.
struct JobConfig {
    std::optional<RatFn> plant;
    std::optional<RatFn> controller;
    std::optional<ChannelSpec> channel;
    SimConfig sim;
    std::optional<std::uint64_t> seed;
    std::optional<std::pair<int, int>> tau_range;
    std::vector<double> kappas;
    std::optional<RatFn> qtilde;
    nlohmann::json echo;
};

JobConfig parse_job_config(const nlohmann::json& doc);

struct JobOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    std::optional<long> horizon;
};

struct JobOutcome {
    int exit_code = 0;
    nlohmann::json report;
    std::optional<std::string> csv;
    std::string error;  // diagnostic for nonzero exit codes
};

/// Runs one subcommand (analyze, check-stability, stabilizability,
/// synthesize, simulate, sweep-tau, sweep-kappa) against a parsed config.
/// Exit codes: 0 success, 2 validation failure, 3 mathematical
/// infeasibility.
JobOutcome execute_job(const std::string& subcommand, const nlohmann::json& config,
                       const JobOverrides& overrides);

nlohmann::json ratfn_to_json(const RatFn& f);
nlohmann::json poly_to_json(const Poly& p);

}  // namespace msnet
