// Run configuration shared by the CLI and the library: flag values,
// validation, the flat key=value config-file format, and the JSON echo
// embedded in reports.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdp/tee.hpp"

namespace tdp {

struct RunConfig {
    std::string scenario = "l2fwd";
    std::string topology;  // empty = default for the scenario
    std::vector<int> enclaves = {1};
    std::vector<int> servers = {0};
    int stages = 2;
    std::vector<std::uint32_t> sizes = {64, 128, 256, 512};
    std::string mode = "both";  // vanilla | trusted | both
    std::vector<std::string> buffer_modes = {"trusted_copy"};
    bool icv_enabled = true;
    bool two_enclaves_per_server = false;
    std::uint32_t batch = 32;
    std::uint32_t ring_capacity = 1024;
    std::uint64_t epc_limit = tee::kDefaultEpcLimit;
    std::uint64_t seed = 1;
    double duration_s = 10.0;
    double warmup_s = 1.0;
    int repetitions = 3;
    std::uint64_t frame_count = 0;  // 0 = duration-mode runs
    std::uint32_t address_cardinality = 1'000'000;
    std::string out_path = "report";
    bool allow_oversubscription = true;
    std::uint32_t transition_latency_ns = 0;
    std::size_t workers = 0;  // 0 = TDP_WORKERS env or hardware
    std::string record_path;
    std::string replay_path;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;

    // baseline | parallel | pipeline | lb, defaulted per scenario.
    std::string resolved_topology() const;
};

// Flat `key = value` file; '#' starts a comment. Unknown keys are errors.
RunConfig load_config_file(const std::string& path);
void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value);

std::string to_json_string(const RunConfig& cfg);

}  // namespace tdp
