// Assembles scenarios into running dataplanes: baseline single enclave,
// N parallel enclaves sharing the Rx ring, an attested multi-stage
// pipeline, and the load-balancer + backend-server fanout; plus the
// vanilla (boundary-free) variant of each.
//
// A Dataplane is built once, runs one measured window, and reports
// counters taken at quiescent points so windowed conservation is exact.
#pragma once

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdp/nf.hpp"
#include "tdp/tee.hpp"
#include "tdp/traffic.hpp"

namespace tdp::topo {

enum class Kind : std::uint8_t { baseline, parallel, pipeline, lb };
enum class Mode : std::uint8_t { vanilla, trusted };

const char* kind_name(Kind k);
const char* mode_name(Mode m);

struct InsufficientWorkers : std::runtime_error {
    explicit InsufficientWorkers(const std::string& what) : std::runtime_error(what) {}
};

// Fault-injection knobs for tests; inert by default.
struct TestHooks {
    int forge_measurement_stage = -1;  // corrupt this stage's attestation report
    bool corrupt_l2_table = false;     // perturb one MAC table entry after build
};

// Optional pre-built lookup tables, shared across dataplanes. Content is
// what the builder would produce anyway; sharing pins the memory placement
// so paired measurements compare identical tables. Arena accounting still
// happens per enclave.
struct SharedTables {
    std::shared_ptr<const nf::MacTable> mac;
    std::shared_ptr<const nf::LpmTable> lpm;
    std::shared_ptr<const nf::FlowTable> flow;
    std::vector<std::shared_ptr<const nf::IpSet>> server_sets;
};

struct TopoConfig {
    std::string scenario = "l2fwd";  // l2fwd | l3fwd | l2fwd-enc | l3fwd-enc | lb-server
    Kind kind = Kind::baseline;
    Mode mode = Mode::trusted;
    int n_enclaves = 1;  // parallel
    int n_servers = 0;   // lb
    int stages = 2;      // pipeline (1..3)
    bool two_enclaves_per_server = false;
    tee::BufferMode buffer_mode = tee::BufferMode::trusted_copy;
    std::uint32_t batch_size = 32;
    std::uint32_t ring_capacity = 1024;
    std::uint64_t epc_limit_bytes = tee::kDefaultEpcLimit;
    std::uint32_t transition_latency_ns = 0;
    std::size_t workers = 0;  // 0 = resolve from TDP_WORKERS / hardware
    bool allow_oversubscription = true;
    std::uint32_t pool_size = 8192;
    std::string replay_path;  // generator sources frames from a TDPC capture
    // Pre-loaded replay workload; takes precedence over replay_path.
    std::shared_ptr<const std::vector<std::vector<std::uint8_t>>> replay_frames;
    SharedTables shared_tables;
    TestHooks hooks;
};

struct RunWindow {
    double warmup_s = 0.0;    // duration mode only
    double duration_s = 1.0;  // used when frame_count == 0
    std::uint64_t frame_count = 0;  // exact admitted-frame budget (0 = duration mode)
    bool capture_output = false;    // collect output frame bytes in the result
    std::string record_path;        // write a TDPC capture of the output stream
};

// Per processing unit; gate counters are cumulative from enclave launch.
struct UnitReport {
    std::string role;
    std::uint32_t enclave_id = 0;  // 0 in vanilla mode
    tee::GateSnapshot gate;
    std::uint64_t batches = 0;
    std::uint64_t frames_in = 0;
    std::uint64_t busy_cycles = 0;  // cycles spent actually processing batches
};

struct RunResult {
    std::uint64_t admitted = 0;              // frames accepted into the Rx ring
    std::uint64_t offered_not_admitted = 0;  // generator drops on admission
    std::uint64_t sunk_frames = 0;
    std::uint64_t sunk_bytes = 0;
    std::vector<std::uint64_t> size_hist;
    std::array<std::uint64_t, pkt::kDropReasonCount> drops{};
    double duration_s = 0.0;
    double cpu_s = 0.0;  // CPU time consumed by all workers inside the window
    std::vector<double> worker_cpu_s;  // per worker, same order as the plan
    std::vector<UnitReport> units;
    bool oversubscribed = false;
    std::size_t workers_used = 0;
    std::vector<std::vector<std::uint8_t>> captured;

    std::uint64_t total_drops() const {
        std::uint64_t sum = 0;
        for (auto d : drops) sum += d;
        return sum;
    }
    tee::GateSnapshot gate_totals() const {
        tee::GateSnapshot t;
        for (const auto& u : units) {
            t.ecalls += u.gate.ecalls;
            t.ocalls += u.gate.ocalls;
            t.bytes_copied_in += u.gate.bytes_copied_in;
            t.bytes_copied_out += u.gate.bytes_copied_out;
            t.paging_events += u.gate.paging_events;
        }
        return t;
    }
};

std::size_t resolve_workers(std::size_t configured);  // TDP_WORKERS / hardware fallback

// The workload-covering tables the builder would create for this scenario,
// as shareable immutable instances.
SharedTables build_shared_tables(const std::string& scenario,
                                 const traffic::TrafficSpec& spec, int n_servers);

class Dataplane {
public:
    // Launches enclaves, builds tables, wires rings. Throws
    // InsufficientWorkers, tee::MeasurementMismatch or tee::AttestationFailed.
    static std::unique_ptr<Dataplane> build(const TopoConfig& cfg,
                                            const traffic::TrafficSpec& spec);
    ~Dataplane();

    // Single use: one measured window per built dataplane.
    RunResult run(const RunWindow& window);

    const std::string& descriptor() const;  // "baseline", "parallel(2)", ...

private:
    Dataplane();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tdp::topo
