#include "msnet/job.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string format = "json";
    msnet::JobOverrides overrides;
};

void attach_common(CLI::App* sub, CliOptions& opt) {
    sub->add_option("--config", opt.config_path, "Path to the JSON job config")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "Directory for report.json / sweep.csv");
    sub->add_option("--format", opt.format, "Primary stdout format")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", [&opt](const CLI::results_t& r) {
        try {
            opt.overrides.seed = std::stoull(r[0]);
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }, "Seed override (64-bit unsigned)");
    sub->add_option("--runs", [&opt](const CLI::results_t& r) {
        try {
            opt.overrides.runs = std::stoi(r[0]);
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }, "Monte Carlo ensemble size override");
    sub->add_option("--horizon", [&opt](const CLI::results_t& r) {
        try {
            opt.overrides.horizon = std::stol(r[0]);
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }, "Monte Carlo horizon override");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-square stability, stabilizability and H2 synthesis for a SISO loop "
                 "closed over a random-delay channel"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> subs = {
        {"analyze", "Channel statistics: mean channel, spectrum, spectral factor, W, SNR"},
        {"check-stability", "Mean-square stability verdict for the supplied controller"},
        {"stabilizability", "Stabilizability index and closed-form special cases"},
        {"synthesize", "H2-optimal stabilizing controller via the Youla parameter"},
        {"simulate", "Seeded Monte Carlo powers for the supplied controller"},
        {"sweep-tau", "Stabilizability index versus relative degree"},
        {"sweep-kappa", "Margin and power along a ray of perturbed controllers"},
    };

    CliOptions opt;
    for (const auto& [name, desc] : subs) attach_common(app.add_subcommand(name, desc), opt);

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    nlohmann::json config;
    try {
        std::ifstream in(opt.config_path);
        config = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot parse config: " << e.what() << "\n";
        return 2;
    }

    const msnet::JobOutcome outcome = msnet::execute_job(sub, config, opt.overrides);
    if (outcome.exit_code != 0) {
        std::cerr << "error: " << outcome.error << "\n";
        return outcome.exit_code;
    }
    if (!outcome.error.empty()) std::cerr << outcome.error << "\n";

    std::error_code ec;
    std::filesystem::create_directories(opt.out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << opt.out_dir << "\n";
        return 1;
    }

    {
        std::ofstream report(std::filesystem::path(opt.out_dir) / "report.json");
        report << outcome.report.dump(2) << "\n";
    }
    if (outcome.csv) {
        std::ofstream csv(std::filesystem::path(opt.out_dir) / "sweep.csv");
        csv << *outcome.csv;
    }

    if (opt.format == "csv" && outcome.csv) {
        std::cout << *outcome.csv;
    } else {
        std::cout << outcome.report.dump(2) << "\n";
    }
    return 0;
}
