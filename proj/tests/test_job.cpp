#include "msnet/job.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace msnet;
using nlohmann::json;

namespace {

json benchmark_config() {
    return json{{"plant", {{"num", {1.0, -0.2}}, {"den", {1.0, -2.3, 1.32}}}},
                {"channel", {{"pmf", {0.6, 0.3, 0.1}}, {"weights", {0.6, 0.4, 0.0}}}}};
}

json gate_config(bool weighted) {
    json cfg{{"plant", {{"num", {1.0, 0.9}}, {"den", {1.0, 0.1, -1.32}}}},
             {"controller", {{"num", {0.0}}, {"den", {1.0}}}},
             {"channel", {{"pmf", {5.0 / 11.0, 6.0 / 11.0}}, {"weights", {1.0, 1.0}}}}};
    if (weighted) cfg["channel"]["weights"] = {0.8, 0.2};
    return cfg;
}

}  // namespace

TEST_CASE("config parsing and validation messages") {
    SUBCASE("valid config parses") {
        const JobConfig cfg = parse_job_config(benchmark_config());
        REQUIRE(cfg.plant);
        REQUIRE(cfg.channel);
        CHECK(cfg.plant->relative_degree() == 1);
        CHECK(cfg.channel->delay_bound() == 2);
    }
    SUBCASE("bad pmf sum is a named validation error") {
        json cfg = benchmark_config();
        cfg["channel"]["pmf"] = {0.6, 0.3, 0.2};
        CHECK_THROWS_AS((void)parse_job_config(cfg), std::invalid_argument);
    }
    SUBCASE("unknown top-level section is rejected by name") {
        json cfg = benchmark_config();
        cfg["plnt"] = cfg["plant"];
        try {
            (void)parse_job_config(cfg);
            FAIL("expected a validation error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("plnt") != std::string::npos);
        }
    }
    SUBCASE("malformed coefficient lists name the field") {
        json cfg = benchmark_config();
        cfg["plant"]["num"] = json::array();
        try {
            (void)parse_job_config(cfg);
            FAIL("expected a validation error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("plant.num") != std::string::npos);
        }
    }
    SUBCASE("kappa sweep requires qtilde") {
        json cfg = benchmark_config();
        cfg["sweep"] = {{"kappas", {0.0, 0.5}}};
        CHECK_THROWS_AS((void)parse_job_config(cfg), std::invalid_argument);
    }
}

TEST_CASE("analyze reports the channel statistics") {
    SUBCASE("perfect channel has zero variation response") {
        json cfg{{"channel", {{"pmf", {1.0}}, {"weights", {1.0}}}}};
        const JobOutcome out = execute_job("analyze", cfg, {});
        REQUIRE(out.exit_code == 0);
        CHECK(out.report["channel"]["W"]["num"][0].get<double>() == 0.0);
        for (const auto& s : out.report["snr_profile"]) CHECK(s["unbounded"].get<bool>());
    }
    SUBCASE("benchmark channel matches the printed statistics") {
        const JobOutcome out = execute_job("analyze", benchmark_config(), {});
        REQUIRE(out.exit_code == 0);
        const auto phi = out.report["channel"]["phi"];
        CHECK(phi[0].get<double>() == doctest::Approx(0.3188).epsilon(2e-3));
        CHECK(phi[1].get<double>() == doctest::Approx(-0.1355).epsilon(2e-3));
    }
}

TEST_CASE("check-stability distinguishes the receiver weights") {
    SUBCASE("unweighted receiver exits with the cancellation diagnostic") {
        const JobOutcome out = execute_job("check-stability", gate_config(false), {});
        CHECK(out.exit_code == 3);
        CHECK(out.error.find("unstable pole-zero cancellation") != std::string::npos);
    }
    SUBCASE("weighted receiver reports a verdict") {
        const JobOutcome out = execute_job("check-stability", gate_config(true), {});
        REQUIRE(out.exit_code == 0);
        CHECK(out.report["stability"]["verdict"].get<std::string>() == "nominally unstable");
    }
}

TEST_CASE("stabilizability subcommand reports the index") {
    const JobOutcome out = execute_job("stabilizability", benchmark_config(), {});
    REQUIRE(out.exit_code == 0);
    CHECK(out.report["stabilizability"]["index"].get<double>() ==
          doctest::Approx(0.17279).epsilon(1e-4));
    CHECK(out.report["stabilizability"]["stabilizable"].get<bool>());
}

TEST_CASE("synthesize subcommand") {
    SUBCASE("succeeds on the benchmark") {
        const JobOutcome out = execute_job("synthesize", benchmark_config(), {});
        REQUIRE(out.exit_code == 0);
        CHECK(out.report["synthesis"]["achieved_margin"].get<double>() ==
              doctest::Approx(out.report["synthesis"]["index"].get<double>()).epsilon(1e-6));
    }
    SUBCASE("exits 3 when the index is above one") {
        json cfg = benchmark_config();
        cfg["plant"]["den"] = {1.0, -2.3, 1.32, 0.0, 0.0, 0.0, 0.0};  // relative degree 5
        const JobOutcome out = execute_job("synthesize", cfg, {});
        CHECK(out.exit_code == 3);
    }
}

TEST_CASE("simulate requires a controller and respects overrides") {
    json cfg = benchmark_config();
    SUBCASE("missing controller is a validation error") {
        const JobOutcome out = execute_job("simulate", cfg, {});
        CHECK(out.exit_code == 2);
        CHECK(out.error.find("controller") != std::string::npos);
    }
    SUBCASE("seeded runs are reproducible byte for byte") {
        cfg["plant"] = {{"num", {1.0}}, {"den", {1.0, -0.5}}};
        cfg["controller"] = {{"num", {0.2}}, {"den", {1.0}}};
        cfg["sim"] = {{"horizon", 1000}, {"runs", 4}, {"seed", 12345}};
        const JobOutcome a = execute_job("simulate", cfg, {});
        const JobOutcome b = execute_job("simulate", cfg, {});
        REQUIRE(a.exit_code == 0);
        CHECK(a.report.dump() == b.report.dump());
        CHECK(a.report["seed"].get<std::uint64_t>() == 12345);
    }
    SUBCASE("a missing seed is generated and surfaced") {
        cfg["plant"] = {{"num", {1.0}}, {"den", {1.0, -0.5}}};
        cfg["controller"] = {{"num", {0.2}}, {"den", {1.0}}};
        cfg["sim"] = {{"horizon", 400}, {"runs", 2}};
        const JobOutcome out = execute_job("simulate", cfg, {});
        REQUIRE(out.exit_code == 0);
        CHECK(out.error.find("generated") != std::string::npos);
        CHECK(out.report.contains("seed"));
    }
    SUBCASE("overrides replace config values") {
        cfg["plant"] = {{"num", {1.0}}, {"den", {1.0, -0.5}}};
        cfg["controller"] = {{"num", {0.2}}, {"den", {1.0}}};
        cfg["sim"] = {{"horizon", 400}, {"runs", 2}, {"seed", 1}};
        JobOverrides ov;
        ov.runs = 3;
        ov.horizon = 600;
        ov.seed = 777;
        const JobOutcome out = execute_job("simulate", cfg, ov);
        REQUIRE(out.exit_code == 0);
        CHECK(out.report["simulation"]["settings"]["runs"].get<int>() == 3);
        CHECK(out.report["simulation"]["settings"]["horizon"].get<long>() == 600);
        CHECK(out.report["seed"].get<std::uint64_t>() == 777);
    }
}

TEST_CASE("tau sweep emits a csv table") {
    json cfg = benchmark_config();
    cfg["sweep"] = {{"tau_min", 1}, {"tau_max", 5}};
    const JobOutcome out = execute_job("sweep-tau", cfg, {});
    REQUIRE(out.exit_code == 0);
    REQUIRE(out.csv);
    std::istringstream lines(*out.csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "tau,index,stabilizable");
    int rows = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 5);
    CHECK(out.report["tau_sweep"].size() == 5);
    CHECK(out.report["tau_sweep"][4]["stabilizable"].get<bool>() == false);
}

TEST_CASE("kappa sweep emits the pinned csv header") {
    json cfg = benchmark_config();
    cfg["sweep"] = {{"kappas", {0.0, 0.3}},
                    {"qtilde", {{"num", {1.0}}, {"den", {1.0}}}}};
    cfg["sim"] = {{"horizon", 1500}, {"runs", 4}, {"seed", 9}};
    const JobOutcome out = execute_job("sweep-kappa", cfg, {});
    REQUIRE(out.exit_code == 0);
    REQUIRE(out.csv);
    std::istringstream lines(*out.csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "kappa,margin,power_theory,power_sim,power_sim_stderr,diverged");
    CHECK(out.report["kappa_sweep"].size() == 2);
    const double m0 = out.report["kappa_sweep"][0]["margin"].get<double>();
    const double m1 = out.report["kappa_sweep"][1]["margin"].get<double>();
    CHECK(m0 < m1);
}

TEST_CASE("a report's echoed config re-runs to identical outputs") {
    json cfg = benchmark_config();
    cfg["controller"] = {{"num", {0.0}}, {"den", {1.0}}};
    cfg["sim"] = {{"horizon", 800}, {"runs", 3}, {"seed", 4242}};
    const JobOutcome first = execute_job("simulate", cfg, {});
    REQUIRE(first.exit_code == 0);
    const JobOutcome second = execute_job("simulate", first.report["config"], {});
    REQUIRE(second.exit_code == 0);
    CHECK(first.report.dump() == second.report.dump());
}

TEST_CASE("command line binary round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "msnet_cli_test";
    fs::create_directories(dir);
    const fs::path cfg_path = dir / "job.json";
    {
        std::ofstream f(cfg_path);
        f << benchmark_config().dump(2);
    }
    const std::string base = std::string(MSNET_CLI_PATH) + " stabilizability --config " +
                             cfg_path.string() + " --out " + dir.string();
    const int rc = std::system((base + " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(fs::exists(dir / "report.json"));

    std::ifstream report(dir / "report.json");
    json parsed = json::parse(report);
    CHECK(parsed["stabilizability"]["index"].get<double>() ==
          doctest::Approx(0.17279).epsilon(1e-4));

    // infeasible configuration surfaces exit code 3
    {
        std::ofstream f(cfg_path);
        f << gate_config(false).dump(2);
    }
    const std::string gate = std::string(MSNET_CLI_PATH) + " check-stability --config " +
                             cfg_path.string() + " --out " + dir.string() +
                             " > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(gate.c_str())) == 3);
    fs::remove_all(dir);
}
