// Metrics: the overhead equation, wire-throughput computation, run-report
// aggregation, and JSON/CSV emission shaped like the reference-testbed tables.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdp/topo.hpp"

namespace tdp::bench {

// gbps = mpps * (frame_size + 20) * 8 / 1000; the +20 covers 8 bytes of
// preamble and 12 bytes of interframe gap. Throws std::domain_error for
// mpps < 0 or frame sizes outside 64..1518.
double wire_throughput_gbps(double mpps, double frame_size_bytes);

// 100 * (vanilla - trusted) / vanilla; negative when the trusted run was
// faster within noise. Throws std::domain_error when vanilla_mpps == 0.
double sgx_overhead_pct(double vanilla_mpps, double trusted_mpps);

struct RunRecord {
    std::string scenario;
    std::string topology;      // descriptor, e.g. "parallel(2)"
    std::string mode;          // "vanilla" | "trusted"
    std::string buffer_mode;   // "trusted_copy" | "untrusted" | "-"
    bool icv_enabled = true;
    std::uint32_t frame_size = 0;
    std::uint64_t seed = 0;

    double mpps = 0.0;  // mean over repetitions
    double wire_gbps = 0.0;
    std::optional<double> overhead_pct;
    std::vector<double> rep_mpps;
    double duration_s = 0.0;

    std::uint64_t rx_frames = 0;
    std::uint64_t tx_frames = 0;
    std::uint64_t offered_not_admitted = 0;
    std::uint64_t drops_total = 0;
    std::map<std::string, std::uint64_t> drops_by_reason;

    std::uint64_t ecalls = 0;
    std::uint64_t ocalls = 0;
    std::uint64_t bytes_out = 0;
    std::uint64_t bytes_in = 0;
    std::uint64_t paging = 0;
    bool oversubscribed = false;
};

RunRecord make_record(const std::string& scenario, const std::string& topology,
                      const std::string& mode, const std::string& buffer_mode,
                      bool icv_enabled, std::uint32_t frame_size, std::uint64_t seed,
                      const std::vector<topo::RunResult>& reps);

// Pairs each trusted row with its vanilla baseline (same scenario,
// topology, frame size and ICV setting) to fill overhead_pct. Returns one
// warning per trusted row left without a baseline.
std::vector<std::string> compute_overheads(std::vector<RunRecord>& rows);

struct HostInfo {
    unsigned hardware_concurrency = 0;
    std::size_t workers = 0;
};
HostInfo host_info();

// CSV: scenario, topology, mode, frame_size, mpps, wire_gbps,
// overhead_pct, ecalls, ocalls, bytes_out, bytes_in, paging, drops.
// Numerics carry two decimals; overhead is empty without a baseline.
std::string csv_string(const std::vector<RunRecord>& rows);
void write_csv(const std::string& path, const std::vector<RunRecord>& rows);

// JSON: top level {host, config, warnings, runs:[...]}.
void write_json(const std::string& path, const std::vector<RunRecord>& rows,
                const HostInfo& host, const std::string& config_echo_json,
                const std::vector<std::string>& warnings);

}  // namespace tdp::bench
