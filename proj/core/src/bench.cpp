#include "tdp/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace tdp::bench {

double wire_throughput_gbps(double mpps, double frame_size_bytes) {
    if (mpps < 0) throw std::domain_error("wire_throughput: mpps must be >= 0");
    if (frame_size_bytes < 64 || frame_size_bytes > 1518)
        throw std::domain_error("wire_throughput: frame_size must be within 64..1518");
    return mpps * (frame_size_bytes + 20.0) * 8.0 / 1000.0;
}

double sgx_overhead_pct(double vanilla_mpps, double trusted_mpps) {
    if (vanilla_mpps == 0)
        throw std::domain_error("sgx_overhead: vanilla MPPS is zero (DivisionDomain)");
    return 100.0 * (vanilla_mpps - trusted_mpps) / vanilla_mpps;
}

RunRecord make_record(const std::string& scenario, const std::string& topology,
                      const std::string& mode, const std::string& buffer_mode,
                      bool icv_enabled, std::uint32_t frame_size, std::uint64_t seed,
                      const std::vector<topo::RunResult>& reps) {
    RunRecord r;
    r.scenario = scenario;
    r.topology = topology;
    r.mode = mode;
    r.buffer_mode = buffer_mode;
    r.icv_enabled = icv_enabled;
    r.frame_size = frame_size;
    r.seed = seed;

    double mpps_sum = 0;
    for (const auto& rep : reps) {
        const double mpps = rep.duration_s > 0 ? rep.sunk_frames / rep.duration_s / 1e6 : 0.0;
        r.rep_mpps.push_back(mpps);
        mpps_sum += mpps;
        r.duration_s += rep.duration_s;
        r.rx_frames += rep.admitted;
        r.tx_frames += rep.sunk_frames;
        r.offered_not_admitted += rep.offered_not_admitted;
        r.drops_total += rep.total_drops();
        for (std::size_t i = 0; i < pkt::kDropReasonCount; ++i) {
            if (rep.drops[i])
                r.drops_by_reason[pkt::drop_reason_name(static_cast<pkt::DropReason>(i))] +=
                    rep.drops[i];
        }
        const tee::GateSnapshot g = rep.gate_totals();
        r.ecalls += g.ecalls;
        r.ocalls += g.ocalls;
        r.bytes_out += g.bytes_copied_out;
        r.bytes_in += g.bytes_copied_in;
        r.paging += g.paging_events;
        r.oversubscribed |= rep.oversubscribed;
    }
    if (!reps.empty()) r.mpps = mpps_sum / reps.size();
    r.wire_gbps = wire_throughput_gbps(r.mpps, frame_size);
    return r;
}

std::vector<std::string> compute_overheads(std::vector<RunRecord>& rows) {
    std::vector<std::string> warnings;
    for (auto& row : rows) {
        if (row.mode != "trusted") continue;
        const RunRecord* baseline = nullptr;
        for (const auto& other : rows) {
            if (other.mode == "vanilla" && other.scenario == row.scenario &&
                other.topology == row.topology && other.frame_size == row.frame_size &&
                other.icv_enabled == row.icv_enabled) {
                baseline = &other;
                break;
            }
        }
        if (!baseline) {
            warnings.push_back("MissingBaseline: no vanilla run for " + row.scenario + "/" +
                               row.topology + "/" + std::to_string(row.frame_size) + "B");
            continue;
        }
        row.overhead_pct = sgx_overhead_pct(baseline->mpps, row.mpps);
    }
    return warnings;
}

HostInfo host_info() {
    HostInfo h;
    h.hardware_concurrency = std::thread::hardware_concurrency();
    h.workers = topo::resolve_workers(0);
    return h;
}

namespace {

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string csv_string(const std::vector<RunRecord>& rows) {
    std::string out =
        "scenario,topology,mode,frame_size,mpps,wire_gbps,overhead_pct,"
        "ecalls,ocalls,bytes_out,bytes_in,paging,drops\n";
    for (const auto& r : rows) {
        out += r.scenario + ',' + r.topology + ',' + r.mode + ',';
        out += std::to_string(r.frame_size) + ',';
        out += fixed2(r.mpps) + ',' + fixed2(r.wire_gbps) + ',';
        out += r.overhead_pct ? fixed2(*r.overhead_pct) : std::string();
        out += ',';
        out += std::to_string(r.ecalls) + ',' + std::to_string(r.ocalls) + ',';
        out += std::to_string(r.bytes_out) + ',' + std::to_string(r.bytes_in) + ',';
        out += std::to_string(r.paging) + ',' + std::to_string(r.drops_total) + '\n';
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<RunRecord>& rows) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << csv_string(rows);
}

void write_json(const std::string& path, const std::vector<RunRecord>& rows,
                const HostInfo& host, const std::string& config_echo_json,
                const std::vector<std::string>& warnings) {
    nlohmann::json doc;
    doc["host"] = {{"hardware_concurrency", host.hardware_concurrency},
                   {"workers", host.workers}};
    doc["config"] = config_echo_json.empty()
                        ? nlohmann::json::object()
                        : nlohmann::json::parse(config_echo_json);
    doc["warnings"] = warnings;

    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j;
        j["scenario"] = r.scenario;
        j["topology"] = r.topology;
        j["mode"] = r.mode;
        j["buffer_mode"] = r.buffer_mode;
        j["icv_enabled"] = r.icv_enabled;
        j["frame_size"] = r.frame_size;
        j["seed"] = r.seed;
        j["mpps"] = r.mpps;
        j["wire_gbps"] = r.wire_gbps;
        if (r.overhead_pct)
            j["overhead_pct"] = *r.overhead_pct;
        else
            j["overhead_pct"] = nullptr;
        j["rep_mpps"] = r.rep_mpps;
        j["duration_s"] = r.duration_s;
        j["rx_frames"] = r.rx_frames;
        j["tx_frames"] = r.tx_frames;
        j["offered_not_admitted"] = r.offered_not_admitted;
        j["drops_total"] = r.drops_total;
        j["drops_by_reason"] = r.drops_by_reason;
        j["ecalls"] = r.ecalls;
        j["ocalls"] = r.ocalls;
        j["bytes_out"] = r.bytes_out;
        j["bytes_in"] = r.bytes_in;
        j["paging"] = r.paging;
        j["oversubscribed"] = r.oversubscribed;
        runs.push_back(std::move(j));
    }
    doc["runs"] = std::move(runs);

    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << doc.dump(2) << '\n';
}

}  // namespace tdp::bench
