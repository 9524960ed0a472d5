#include "tdp/runner.hpp"

#include <ostream>

namespace tdp::runner {

namespace {

topo::Kind kind_of(const std::string& name) {
    if (name == "baseline") return topo::Kind::baseline;
    if (name == "parallel") return topo::Kind::parallel;
    if (name == "pipeline") return topo::Kind::pipeline;
    return topo::Kind::lb;
}

}  // namespace

std::vector<RunEntry> expand(const RunConfig& cfg) {
    cfg.validate();
    const std::string topo_name = cfg.resolved_topology();
    const topo::Kind kind = kind_of(topo_name);

    std::vector<std::string> modes;
    if (cfg.mode == "both")
        modes = {"vanilla", "trusted"};
    else
        modes = {cfg.mode};

    std::vector<RunEntry> entries;
    auto push = [&](const std::string& mode, int n_enclaves, int n_servers,
                    const std::string& buffer_mode, std::uint32_t size) {
        RunEntry e;
        e.topo.scenario = cfg.scenario;
        e.topo.kind = kind;
        e.topo.mode = mode == "vanilla" ? topo::Mode::vanilla : topo::Mode::trusted;
        e.topo.n_enclaves = n_enclaves;
        e.topo.n_servers = n_servers;
        e.topo.stages = cfg.stages;
        e.topo.two_enclaves_per_server = cfg.two_enclaves_per_server;
        e.topo.buffer_mode = buffer_mode == "untrusted" ? tee::BufferMode::untrusted
                                                        : tee::BufferMode::trusted_copy;
        e.topo.batch_size = cfg.batch;
        e.topo.ring_capacity = cfg.ring_capacity;
        e.topo.epc_limit_bytes = cfg.epc_limit;
        e.topo.transition_latency_ns = cfg.transition_latency_ns;
        e.topo.workers = cfg.workers;
        e.topo.allow_oversubscription = cfg.allow_oversubscription;
        e.topo.replay_path = cfg.replay_path;

        e.spec.layer = traffic::layer_for_scenario(cfg.scenario);
        e.spec.frame_size = size;
        e.spec.address_cardinality = cfg.address_cardinality;
        e.spec.seed = cfg.seed;
        e.spec.icv_enabled = cfg.icv_enabled;

        const bool delegating = cfg.scenario == "lb-server" && mode == "trusted";
        e.buffer_mode_label = delegating ? buffer_mode : "-";
        entries.push_back(std::move(e));
    };

    for (const std::uint32_t size : cfg.sizes) {
        for (const std::string& mode : modes) {
            if (kind == topo::Kind::lb) {
                for (const int n_servers : cfg.servers) {
                    if (mode == "trusted") {
                        for (const auto& bm : cfg.buffer_modes)
                            push(mode, 1, n_servers, bm, size);
                    } else {
                        push(mode, 1, n_servers, "trusted_copy", size);
                    }
                }
            } else if (kind == topo::Kind::parallel) {
                for (const int n : cfg.enclaves) push(mode, n, 0, "trusted_copy", size);
            } else {
                push(mode, 1, 0, "trusted_copy", size);
            }
        }
    }
    return entries;
}

MatrixResult execute(const RunConfig& cfg, std::ostream* log) {
    const std::vector<RunEntry> entries = expand(cfg);

    MatrixResult result;
    bool first_entry = true;
    for (const auto& entry : entries) {
        std::vector<topo::RunResult> reps;
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            auto dp = topo::Dataplane::build(entry.topo, entry.spec);
            topo::RunWindow w;
            w.frame_count = cfg.frame_count;
            w.duration_s = cfg.duration_s;
            w.warmup_s = cfg.frame_count ? 0.0 : cfg.warmup_s;
            if (first_entry && rep == 0) w.record_path = cfg.record_path;
            topo::RunResult r = dp->run(w);
            if (log) {
                *log << cfg.scenario << ' ' << dp->descriptor() << ' '
                     << topo::mode_name(entry.topo.mode) << ' ' << entry.spec.frame_size
                     << "B rep" << rep + 1 << ": "
                     << (r.duration_s > 0 ? r.sunk_frames / r.duration_s / 1e6 : 0.0)
                     << " MPPS, " << r.sunk_frames << " frames, " << r.total_drops()
                     << " drops" << (r.oversubscribed ? " [oversubscribed]" : "") << '\n';
            }
            reps.push_back(std::move(r));
        }
        first_entry = false;

        std::string descriptor = topo::kind_name(entry.topo.kind);
        if (entry.topo.kind == topo::Kind::parallel)
            descriptor += "(" + std::to_string(entry.topo.n_enclaves) + ")";
        else if (entry.topo.kind == topo::Kind::pipeline)
            descriptor += "(" + std::to_string(entry.topo.stages) + ")";
        else if (entry.topo.kind == topo::Kind::lb)
            descriptor += "(" + std::to_string(entry.topo.n_servers) + ")";

        result.rows.push_back(bench::make_record(
            cfg.scenario, descriptor, topo::mode_name(entry.topo.mode),
            entry.buffer_mode_label, cfg.icv_enabled, entry.spec.frame_size, cfg.seed, reps));
    }

    auto warnings = bench::compute_overheads(result.rows);
    result.warnings.insert(result.warnings.end(), warnings.begin(), warnings.end());
    return result;
}

}  // namespace tdp::runner
