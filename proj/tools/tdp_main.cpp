// tdp: scenario runner and verification front end for the trusted
// dataplane emulator.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdp/bench.hpp"
#include "tdp/config.hpp"
#include "tdp/runner.hpp"
#include "tdp/verify.hpp"

namespace {

int do_run(tdp::RunConfig& cfg) {
    cfg.validate();
    const auto result = tdp::runner::execute(cfg, &std::cout);

    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';

    const std::string json_path = cfg.out_path + ".json";
    const std::string csv_path = cfg.out_path + ".csv";
    tdp::bench::write_json(json_path, result.rows, tdp::bench::host_info(),
                           tdp::to_json_string(cfg), result.warnings);
    tdp::bench::write_csv(csv_path, result.rows);

    std::cout << result.rows.size() << " report rows -> " << json_path << ", " << csv_path
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tdp: SGX-style trusted dataplane emulator and benchmark harness"};
    app.require_subcommand(1);

    tdp::RunConfig cfg;

    // A config file provides defaults; explicit flags override it.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                cfg = tdp::load_config_file(argv[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << '\n';
                return 2;
            }
        }
    }

    CLI::App* run = app.add_subcommand("run", "Run the scenario matrix and emit JSON/CSV reports");
    std::string config_file;
    run->add_option("--config", config_file, "key = value config file (defaults for all flags)");
    run->add_option("scenario,--scenario", cfg.scenario,
                    "l2fwd | l3fwd | l2fwd-enc | l3fwd-enc | lb-server");
    run->add_option("--topology", cfg.topology, "baseline | parallel | pipeline | lb");
    run->add_option("--enclaves", cfg.enclaves, "parallel enclave counts (comma separated)")
        ->delimiter(',');
    run->add_option("--servers", cfg.servers, "backend server counts (comma separated)")
        ->delimiter(',');
    run->add_option("--stages", cfg.stages, "pipeline stages (1..3)");
    run->add_option("--sizes", cfg.sizes, "frame sizes in bytes (comma separated)")
        ->delimiter(',');
    run->add_option("--mode", cfg.mode, "vanilla | trusted | both");
    run->add_option("--buffer-mode", cfg.buffer_modes,
                    "lookup buffer modes: trusted_copy and/or untrusted")
        ->delimiter(',');
    run->add_flag("--no-icv{false}", cfg.icv_enabled,
                  "disable integrity verification and ICV generation");
    run->add_flag("--two-enclaves-per-server", cfg.two_enclaves_per_server,
                  "run two enclaves per backend server ring");
    run->add_option("--batch", cfg.batch, "dequeue batch size");
    run->add_option("--ring-cap", cfg.ring_capacity, "ring capacity (power of two)");
    run->add_option("--epc-limit", cfg.epc_limit, "EPC arena limit per enclave, bytes");
    run->add_option("--seed", cfg.seed, "workload seed");
    run->add_option("--duration", cfg.duration_s, "seconds per measured run");
    run->add_option("--warmup", cfg.warmup_s, "warm-up seconds excluded from counters");
    run->add_option("--reps", cfg.repetitions, "repetitions per run (mean reported)");
    run->add_option("--frames", cfg.frame_count,
                    "exact admitted-frame budget (overrides --duration)");
    run->add_option("--cardinality", cfg.address_cardinality, "distinct addresses");
    run->add_option("--out", cfg.out_path, "report path prefix (.json/.csv appended)");
    run->add_option("--workers", cfg.workers, "worker cap (also TDP_WORKERS env)");
    run->add_flag("!--no-oversubscribe", cfg.allow_oversubscription,
                  "fail instead of time-slicing when workers are scarce");
    run->add_option("--latency-ns", cfg.transition_latency_ns,
                    "injected ECALL/OCALL transition latency");
    run->add_option("--record", cfg.record_path, "record output stream to a TDPC capture");
    run->add_option("--replay", cfg.replay_path, "replay generator input from a TDPC capture");

    CLI::App* verify = app.add_subcommand("verify", "Run the functional acceptance suites");
    std::vector<std::string> suite_filter;
    verify->add_option("--suite", suite_filter, "run only the named suites")->delimiter(',');
    bool list_suites = false;
    verify->add_flag("--list", list_suites, "list suite identifiers and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return do_run(cfg);
        if (verify->parsed()) {
            if (list_suites) {
                for (const auto& s : tdp::accept::all_suites())
                    std::cout << s.criterion << ' ' << s.id << '\n';
                return 0;
            }
            const int failures = tdp::accept::run_suites(std::cout, suite_filter);
            if (failures) {
                std::cout << failures << " suite(s) failed\n";
                return 1;
            }
            std::cout << "all suites passed\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
