#include "tdp/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tdp {

namespace {

const std::vector<std::string> kScenarios = {"l2fwd", "l3fwd", "l2fwd-enc", "l3fwd-enc",
                                             "lb-server"};

bool is_pow2(std::uint64_t v) { return v >= 2 && (v & (v - 1)) == 0; }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(s);
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
}

}  // namespace

std::string RunConfig::resolved_topology() const {
    if (!topology.empty()) return topology;
    if (scenario == "lb-server") return "lb";
    if (scenario == "l2fwd-enc" || scenario == "l3fwd-enc") return "parallel";
    return "baseline";
}

void RunConfig::validate() const {
    if (std::find(kScenarios.begin(), kScenarios.end(), scenario) == kScenarios.end())
        bad("scenario", "must be one of l2fwd, l3fwd, l2fwd-enc, l3fwd-enc, lb-server");

    const std::string topo = resolved_topology();
    if (topo != "baseline" && topo != "parallel" && topo != "pipeline" && topo != "lb")
        bad("topology", "must be baseline, parallel, pipeline or lb");
    if (scenario == "lb-server" && topo != "lb")
        bad("topology", "lb-server runs only on the lb topology");
    if (scenario != "lb-server" && topo == "lb")
        bad("topology", "lb requires the lb-server scenario");

    if (mode != "vanilla" && mode != "trusted" && mode != "both")
        bad("mode", "must be vanilla, trusted or both");

    if (sizes.empty()) bad("sizes", "at least one frame size required");
    for (auto s : sizes)
        if (s < 64 || s > 1500) bad("sizes", "frame sizes must be within 64..1500");

    if (enclaves.empty()) bad("enclaves", "at least one enclave count required");
    for (auto n : enclaves)
        if (n < 1 || n > 64) bad("enclaves", "enclave counts must be within 1..64");

    if (servers.empty()) bad("servers", "at least one server count required");
    for (auto n : servers)
        if (n < 0 || n > 255) bad("servers", "server counts must be within 0..255");

    if (stages < 1 || stages > 3) bad("stages", "pipeline stages must be within 1..3");

    if (buffer_modes.empty()) bad("buffer-mode", "at least one buffer mode required");
    for (const auto& m : buffer_modes)
        if (m != "trusted_copy" && m != "untrusted")
            bad("buffer-mode", "must be trusted_copy or untrusted");

    if (two_enclaves_per_server && scenario != "lb-server")
        bad("two-enclaves-per-server", "applies only to lb-server");

    if (batch < 1 || batch > 1024) bad("batch", "must be within 1..1024");
    if (!is_pow2(ring_capacity)) bad("ring-cap", "must be a power of two >= 2");
    if (batch > ring_capacity) bad("batch", "must not exceed ring capacity");
    if (epc_limit == 0) bad("epc-limit", "must be positive");
    if (repetitions < 1 || repetitions > 100) bad("reps", "must be within 1..100");
    if (frame_count == 0 && duration_s <= 0) bad("duration", "must be positive");
    if (frame_count != 0 && warmup_s > 0)
        bad("warmup", "warmup applies to duration-mode runs only");
    if (warmup_s < 0) bad("warmup", "must be >= 0");
    if (address_cardinality == 0) bad("cardinality", "must be positive");
    if (out_path.empty()) bad("out", "output path required");
}

void apply_config_kv(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto as_u64 = [&](const std::string& v) { return std::stoull(v); };
    if (key == "scenario") cfg.scenario = value;
    else if (key == "topology") cfg.topology = value;
    else if (key == "enclaves") {
        cfg.enclaves.clear();
        for (const auto& v : split_list(value)) cfg.enclaves.push_back(std::stoi(v));
    } else if (key == "servers") {
        cfg.servers.clear();
        for (const auto& v : split_list(value)) cfg.servers.push_back(std::stoi(v));
    } else if (key == "stages") cfg.stages = std::stoi(value);
    else if (key == "sizes") {
        cfg.sizes.clear();
        for (const auto& v : split_list(value))
            cfg.sizes.push_back(static_cast<std::uint32_t>(std::stoul(v)));
    } else if (key == "mode") cfg.mode = value;
    else if (key == "buffer_mode") cfg.buffer_modes = split_list(value);
    else if (key == "icv") cfg.icv_enabled = value == "true" || value == "1" || value == "on";
    else if (key == "two_enclaves_per_server")
        cfg.two_enclaves_per_server = value == "true" || value == "1" || value == "on";
    else if (key == "batch") cfg.batch = static_cast<std::uint32_t>(as_u64(value));
    else if (key == "ring_cap") cfg.ring_capacity = static_cast<std::uint32_t>(as_u64(value));
    else if (key == "epc_limit") cfg.epc_limit = as_u64(value);
    else if (key == "seed") cfg.seed = as_u64(value);
    else if (key == "duration") cfg.duration_s = std::stod(value);
    else if (key == "warmup") cfg.warmup_s = std::stod(value);
    else if (key == "reps") cfg.repetitions = std::stoi(value);
    else if (key == "frame_count") cfg.frame_count = as_u64(value);
    else if (key == "cardinality")
        cfg.address_cardinality = static_cast<std::uint32_t>(as_u64(value));
    else if (key == "out") cfg.out_path = value;
    else if (key == "oversubscribe")
        cfg.allow_oversubscription = value == "true" || value == "1" || value == "on";
    else if (key == "transition_latency_ns")
        cfg.transition_latency_ns = static_cast<std::uint32_t>(as_u64(value));
    else if (key == "workers") cfg.workers = as_u64(value);
    else if (key == "record") cfg.record_path = value;
    else if (key == "replay") cfg.replay_path = value;
    else throw std::invalid_argument("unknown config key: " + key);
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r\n") != std::string::npos)
                throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                            ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r\n"));
            s.erase(s.find_last_not_of(" \t\r\n") + 1);
            return s;
        };
        apply_config_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

std::string to_json_string(const RunConfig& cfg) {
    nlohmann::json j;
    j["scenario"] = cfg.scenario;
    j["topology"] = cfg.resolved_topology();
    j["enclaves"] = cfg.enclaves;
    j["servers"] = cfg.servers;
    j["stages"] = cfg.stages;
    j["sizes"] = cfg.sizes;
    j["mode"] = cfg.mode;
    j["buffer_modes"] = cfg.buffer_modes;
    j["icv_enabled"] = cfg.icv_enabled;
    j["two_enclaves_per_server"] = cfg.two_enclaves_per_server;
    j["batch"] = cfg.batch;
    j["ring_capacity"] = cfg.ring_capacity;
    j["epc_limit"] = cfg.epc_limit;
    j["seed"] = cfg.seed;
    j["duration_s"] = cfg.duration_s;
    j["warmup_s"] = cfg.warmup_s;
    j["repetitions"] = cfg.repetitions;
    j["frame_count"] = cfg.frame_count;
    j["address_cardinality"] = cfg.address_cardinality;
    j["out_path"] = cfg.out_path;
    j["allow_oversubscription"] = cfg.allow_oversubscription;
    j["transition_latency_ns"] = cfg.transition_latency_ns;
    j["workers"] = cfg.workers;
    j["record_path"] = cfg.record_path;
    j["replay_path"] = cfg.replay_path;
    return j.dump();
}

}  // namespace tdp
