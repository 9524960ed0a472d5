#include "tdp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#if defined(__x86_64__) || defined(__i386__)
#include <x86intrin.h>
#endif

#include "tdp/bench.hpp"
#include "tdp/nf.hpp"
#include "tdp/topo.hpp"
#include "tdp/traffic.hpp"

namespace tdp::accept {

namespace {

// ---------------------------------------------------------------------------
// Reference results from the original SGX/DPDK testbed: performance
// (MPPS) / wire throughput (Gbps) cell pairs. `corrected` is non-zero for
// the one known erratum (0-server buffer-copy row at 256 B reads 33.31
// where the throughput relation and the neighbouring cells give 31.31; a
// digit transposition).
struct WireCell {
    double mpps;
    double gbps;
    double frame;
    double corrected;
};

const WireCell kWireCells[] = {
    // L2/L3 forwarding: vanilla and trusted, both layers.
    {21.80, 14.65, 64, 0},  {21.33, 14.33, 64, 0},  {21.89, 14.71, 64, 0},
    {21.50, 14.45, 64, 0},  {21.34, 25.30, 128, 0}, {20.95, 24.80, 128, 0},
    {21.45, 25.30, 128, 0}, {21.19, 25.09, 128, 0}, {13.75, 30.37, 256, 0},
    {13.75, 30.36, 256, 0}, {13.83, 30.54, 256, 0}, {13.84, 30.56, 256, 0},
    {8.67, 36.91, 512, 0},  {8.68, 36.93, 512, 0},  {8.68, 36.93, 512, 0},
    {8.68, 36.93, 512, 0},
    // Load balancing, 0 servers (vanilla / trusted no-copy / trusted copy).
    {17.51, 11.76, 64, 0},  {16.37, 11.00, 64, 0},  {15.73, 10.57, 64, 0},
    {17.38, 20.58, 128, 0}, {16.31, 19.31, 128, 0}, {15.68, 18.56, 128, 0},
    {14.17, 31.29, 256, 0}, {14.18, 31.30, 256, 0}, {14.18, 33.31, 256, 31.31},
    {8.99, 38.26, 512, 0},  {8.98, 38.23, 512, 0},  {8.98, 38.24, 512, 0},
    // Load balancing, 5 servers.
    {16.51, 11.09, 64, 0},  {11.88, 7.98, 64, 0},   {9.96, 6.69, 64, 0},
    {16.39, 19.41, 128, 0}, {11.83, 14.01, 128, 0}, {9.90, 11.72, 128, 0},
    {14.17, 31.30, 256, 0}, {11.79, 26.03, 256, 0}, {9.80, 21.65, 256, 0},
    {8.99, 38.28, 512, 0},  {8.99, 38.27, 512, 0},  {8.99, 38.27, 512, 0},
    // Load balancing, 10 servers.
    {16.43, 11.04, 64, 0},  {11.68, 7.85, 64, 0},   {9.74, 6.55, 64, 0},
    {16.32, 19.33, 128, 0}, {11.64, 13.79, 128, 0}, {9.69, 11.47, 128, 0},
    {14.17, 31.30, 256, 0}, {11.50, 25.40, 256, 0}, {9.64, 21.29, 256, 0},
    {8.99, 38.30, 512, 0},  {8.99, 38.30, 512, 0},  {8.99, 38.30, 512, 0},
    // Load balancing, 15 servers.
    {16.37, 11.00, 64, 0},  {11.56, 7.77, 64, 0},   {9.50, 6.38, 64, 0},
    {16.30, 19.30, 128, 0}, {11.52, 13.64, 128, 0}, {9.46, 11.20, 128, 0},
    {14.17, 31.29, 256, 0}, {11.46, 25.30, 256, 0}, {9.42, 20.81, 256, 0},
    {8.99, 38.25, 512, 0},  {8.98, 38.22, 512, 0},  {8.98, 38.23, 512, 0},
};

// Overhead fixtures: measured MPPS pairs, the rounded percentage quoted in
// the text, and the exact value of the overhead equation on the pair.
struct OverheadCell {
    double vanilla;
    double trusted;
    double quoted;
    double exact;
};

const OverheadCell kOverheadCells[] = {
    {21.80, 21.33, 2.1, 2.1559633027523044},   // L2, 64 B
    {21.89, 21.50, 1.8, 1.7816354499771612},   // L3, 64 B
    {21.34, 20.95, 1.8, 1.8275538894095622},   // L2, 128 B
    {21.45, 21.19, 1.2, 1.2121212121212028},   // L3, 128 B
    {17.51, 15.73, 10.1, 10.165619645916625},  // LB copy, 64 B
    {17.51, 16.37, 6.5, 6.510565391205028},    // LB no-copy, 64 B
    {17.38, 15.68, 9.7, 9.781357882623702},    // LB copy, 128 B
    {17.38, 16.31, 6.2, 6.156501726121982},    // LB no-copy, 128 B
};

// ---------------------------------------------------------------------------

struct ConservationRecord {
    std::string label;
    std::uint64_t admitted;
    std::uint64_t sunk;
    std::uint64_t drops;
    bool ok;
};

std::vector<ConservationRecord>& conservation_log() {
    static std::vector<ConservationRecord> log;
    return log;
}

topo::RunResult run_once(const topo::TopoConfig& t, const traffic::TrafficSpec& s,
                         const topo::RunWindow& w, const std::string& label) {
    auto dp = topo::Dataplane::build(t, s);
    topo::RunResult r = dp->run(w);
    conservation_log().push_back({label, r.admitted, r.sunk_frames, r.total_drops(),
                                  r.admitted == r.sunk_frames + r.total_drops()});
    return r;
}

double mpps_of(const topo::RunResult& r) {
    return r.duration_s > 0 ? r.sunk_frames / r.duration_s / 1e6 : 0.0;
}

topo::TopoConfig base_topo(const std::string& scenario, topo::Kind kind, topo::Mode mode) {
    topo::TopoConfig t;
    t.scenario = scenario;
    t.kind = kind;
    t.mode = mode;
    return t;
}

traffic::TrafficSpec base_spec(const std::string& scenario, std::uint32_t frame_size,
                               std::uint64_t seed = 7) {
    traffic::TrafficSpec s;
    s.layer = traffic::layer_for_scenario(scenario);
    s.frame_size = frame_size;
    s.seed = seed;
    return s;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// --- criterion 1: wire-throughput formula regression ------------------------

SuiteResult wire_formula() {
    int checked = 0, errata = 0;
    for (const WireCell& c : kWireCells) {
        const double computed = bench::wire_throughput_gbps(c.mpps, c.frame);
        const double expected = c.corrected > 0 ? c.corrected : c.gbps;
        if (c.corrected > 0) ++errata;
        if (std::abs(computed - expected) / expected > 0.01)
            return {Status::fail,
                    fmt("%.2f MPPS @ %.0f B -> %.4f Gbps, table says %.2f (> 1%%)", c.mpps,
                        c.frame, computed, expected)};
        ++checked;
    }
    return {Status::pass, fmt("%d reference cell pairs within 1%% (%d documented erratum "
                              "asserted against its corrected value)",
                              checked, errata)};
}

// --- criterion 2: overhead formula regression --------------------------------

SuiteResult overhead_formula() {
    for (const OverheadCell& c : kOverheadCells) {
        const double computed = bench::sgx_overhead_pct(c.vanilla, c.trusted);
        if (std::abs(computed - c.exact) > 1e-9)
            return {Status::fail, fmt("(%.2f, %.2f) -> %.6f, expected exact %.6f", c.vanilla,
                                      c.trusted, computed, c.exact)};
        if (std::abs(computed - c.quoted) > 0.15)
            return {Status::fail,
                    fmt("(%.2f, %.2f) -> %.4f%%, quoted ~%.1f%% differs by > 0.15 pp",
                        c.vanilla, c.trusted, computed, c.quoted)};
    }
    return {Status::pass, fmt("%zu quoted percentages within 0.15 pp of the exact equation",
                              std::size(kOverheadCells))};
}

// --- criterion 3: semantic equivalence ----------------------------------------

SuiteResult semantic_equivalence() {
    constexpr std::uint64_t kFrames = 100'000;
    for (const std::string scenario : {"l2fwd", "l3fwd"}) {
        topo::RunWindow w;
        w.frame_count = kFrames;
        w.capture_output = true;

        auto run_mode = [&](topo::Mode m, topo::Kind kind, int n) {
            topo::TopoConfig t = base_topo(scenario, kind, m);
            t.n_enclaves = n;
            return run_once(t, base_spec(scenario, 64), w,
                            scenario + "/equivalence/" + topo::mode_name(m));
        };

        // Baseline: ordered byte-identical streams.
        topo::RunResult vanilla = run_mode(topo::Mode::vanilla, topo::Kind::baseline, 1);
        topo::RunResult trusted = run_mode(topo::Mode::trusted, topo::Kind::baseline, 1);
        if (vanilla.captured.size() != kFrames || trusted.captured.size() != kFrames)
            return {Status::fail, fmt("%s baseline: expected %llu output frames, got %zu/%zu",
                                      scenario.c_str(), (unsigned long long)kFrames,
                                      vanilla.captured.size(), trusted.captured.size())};
        if (vanilla.captured != trusted.captured)
            return {Status::fail, scenario + " baseline: trusted and vanilla streams differ"};

        // Parallel(2): unordered multiset equality.
        topo::RunResult vp = run_mode(topo::Mode::vanilla, topo::Kind::parallel, 2);
        topo::RunResult tp = run_mode(topo::Mode::trusted, topo::Kind::parallel, 2);
        std::sort(vp.captured.begin(), vp.captured.end());
        std::sort(tp.captured.begin(), tp.captured.end());
        if (vp.captured != tp.captured)
            return {Status::fail, scenario + " parallel(2): output multisets differ"};
    }
    return {Status::pass,
            "l2fwd and l3fwd: trusted == vanilla, ordered (baseline) and multiset "
            "(parallel), 100k frames each"};
}

// --- criterion 4: tamper soundness ----------------------------------------------

SuiteResult tamper_soundness() {
    const pkt::SecureKeys keys = traffic::run_keys(7);
    traffic::TrafficSpec spec = base_spec("l2fwd-enc", 64);
    traffic::FrameFactory factory(spec);

    BufferPool pool(8);
    auto table = std::make_shared<nf::MacTable>(1u << 12);
    for (std::uint64_t i = 0; i < 256; ++i)
        table->insert(traffic::dst_mac_at(i, spec.address_cardinality), 1);
    nf::SecureL2Forwarder fwd({keys, true, 1}, table, traffic::app_port_macs(), nullptr, {});

    pkt::FrameBuffer reference;
    factory.fill(reference, 0);

    nf::Outputs out(1);
    auto attempt = [&](const pkt::FrameBuffer& frame) {
        const Handle h = pool.try_acquire();
        pool[h] = frame;
        out.clear();
        fwd.process_batch({&h, 1}, pool, out);
        bool forwarded = !out.bucket(0).empty();
        pkt::DropReason reason = pkt::DropReason::too_short;
        if (!out.drops().empty()) reason = out.drops()[0].second;
        for (Handle fh : out.bucket(0)) pool.release(fh);
        for (auto& [dh, r] : out.drops()) pool.release(dh);
        return std::pair<bool, pkt::DropReason>(forwarded, reason);
    };

    // Control: the untampered frame forwards.
    if (!attempt(reference).first)
        return {Status::fail, "control frame was not forwarded"};

    // Exhaustive single-bit flips over the whole secure frame.
    std::uint64_t tamper_drops = 0;
    for (std::uint32_t bit = 0; bit < reference.length * 8; ++bit) {
        pkt::FrameBuffer f = reference;
        f.data[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        const auto [forwarded, reason] = attempt(f);
        if (forwarded)
            return {Status::fail, fmt("single-bit flip at bit %u was forwarded", bit)};
        const std::size_t byte = bit / 8;
        if (byte == 12 || byte == 13) {
            // EtherType flips make the frame unparseable, not tampered.
            if (reason != pkt::DropReason::malformed_secure)
                return {Status::fail, fmt("ethertype flip at bit %u: wrong reason", bit)};
        } else {
            if (reason != pkt::DropReason::icv_tamper)
                return {Status::fail,
                        fmt("flip at bit %u dropped as %s, expected icv_tamper", bit,
                            pkt::drop_reason_name(reason))};
            ++tamper_drops;
        }
    }

    // Randomized multi-bit corruptions over the tag/ciphertext/ICV region.
    std::mt19937_64 rng(0x7a39);
    const std::uint32_t lo_bit = 14 * 8;
    const std::uint32_t hi_bit = reference.length * 8;
    for (int i = 0; i < 10'000; ++i) {
        pkt::FrameBuffer f = reference;
        const int flips = 2 + static_cast<int>(rng() % 15);
        for (int k = 0; k < flips; ++k) {
            const std::uint32_t bit = lo_bit + static_cast<std::uint32_t>(rng() % (hi_bit - lo_bit));
            f.data[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        }
        if (f.bytes().size() == reference.bytes().size() &&
            std::equal(f.bytes().begin(), f.bytes().end(), reference.bytes().begin()))
            continue;  // flips cancelled out
        const auto [forwarded, reason] = attempt(f);
        if (forwarded) return {Status::fail, fmt("multi-bit corruption %d was forwarded", i)};
        if (reason != pkt::DropReason::icv_tamper)
            return {Status::fail, fmt("multi-bit corruption %d: wrong drop reason", i)};
        ++tamper_drops;
    }

    return {Status::pass, fmt("%u exhaustive flips + 10000 random corruptions, 0 forwarded, "
                              "%llu tamper drops",
                              reference.length * 8, (unsigned long long)tamper_drops)};
}

// --- criterion 5: LPM oracle -------------------------------------------------------

SuiteResult lpm_oracle() {
    std::mt19937_64 rng(0x10f2);
    struct Route {
        std::uint32_t prefix;
        std::uint8_t len;
        nf::NextHop hop;
    };
    std::vector<Route> routes;
    nf::LpmTable table;

    for (int i = 0; i < 1000; ++i) {
        const std::uint8_t len = static_cast<std::uint8_t>(rng() % 33);
        const std::uint32_t mask = len == 0 ? 0 : ~std::uint32_t(0) << (32 - len);
        const std::uint32_t prefix = static_cast<std::uint32_t>(rng()) & mask;
        const nf::NextHop hop{static_cast<std::uint16_t>(i % 4),
                              traffic::dst_mac_at(i, 1u << 20)};
        table.insert(prefix, len, hop);
        // Replace semantics in the oracle as well.
        bool replaced = false;
        for (auto& r : routes)
            if (r.prefix == prefix && r.len == len) {
                r.hop = hop;
                replaced = true;
                break;
            }
        if (!replaced) routes.push_back({prefix, len, hop});
    }

    auto brute_force = [&](std::uint32_t addr) -> std::optional<nf::NextHop> {
        int best_len = -1;
        nf::NextHop best{};
        for (const auto& r : routes) {
            const std::uint32_t mask = r.len == 0 ? 0 : ~std::uint32_t(0) << (32 - r.len);
            if ((addr & mask) == r.prefix && r.len > best_len) {
                best_len = r.len;
                best = r.hop;
            }
        }
        if (best_len < 0) return std::nullopt;
        return best;
    };

    for (int i = 0; i < 10'000; ++i) {
        const std::uint32_t addr = static_cast<std::uint32_t>(rng());
        const auto got = table.lookup(addr);
        const auto want = brute_force(addr);
        if (got != want)
            return {Status::fail, fmt("lookup(%08x) disagrees with the linear-scan oracle", addr)};
    }
    return {Status::pass, "10000 lookups over 1000 random prefixes match the brute force"};
}

// --- criterion 6: copy/transition accounting ------------------------------------------

SuiteResult copy_accounting() {
    constexpr std::uint64_t kFrames = 1'000'000;
    topo::TopoConfig t = base_topo("lb-server", topo::Kind::lb, topo::Mode::trusted);
    t.n_servers = 5;
    t.buffer_mode = tee::BufferMode::trusted_copy;

    traffic::TrafficSpec spec = base_spec("lb-server", 64);
    topo::RunWindow w;
    w.frame_count = kFrames;

    const topo::RunResult r = run_once(t, spec, w, "lb-server/copy-accounting");
    if (r.admitted != kFrames)
        return {Status::fail, fmt("admitted %llu frames, wanted exactly %llu",
                                  (unsigned long long)r.admitted, (unsigned long long)kFrames)};

    std::uint64_t server_frames = 0;
    for (const auto& u : r.units) {
        if (u.gate.ecalls != 1)
            return {Status::fail, u.role + ": ecalls != 1"};
        if (u.gate.ocalls != u.batches)
            return {Status::fail,
                    fmt("%s: %llu ocalls vs %llu non-empty batches", u.role.c_str(),
                        (unsigned long long)u.gate.ocalls, (unsigned long long)u.batches)};
        if (u.role == "lb") {
            if (u.gate.bytes_copied_out != 4 * kFrames || u.gate.bytes_copied_in != 1 * kFrames)
                return {Status::fail,
                        fmt("lb copied %llu out / %llu in, expected %llu / %llu",
                            (unsigned long long)u.gate.bytes_copied_out,
                            (unsigned long long)u.gate.bytes_copied_in,
                            (unsigned long long)(4 * kFrames), (unsigned long long)kFrames)};
        } else {
            if (u.gate.bytes_copied_out != 4 * u.frames_in ||
                u.gate.bytes_copied_in != 4 * u.frames_in)
                return {Status::fail,
                        fmt("%s copied %llu/%llu for %llu packets, expected 4x each way",
                            u.role.c_str(), (unsigned long long)u.gate.bytes_copied_out,
                            (unsigned long long)u.gate.bytes_copied_in,
                            (unsigned long long)u.frames_in)};
            server_frames += u.frames_in;
        }
    }
    if (server_frames != kFrames)
        return {Status::fail, fmt("servers processed %llu packets, expected %llu",
                                  (unsigned long long)server_frames,
                                  (unsigned long long)kFrames)};
    if (r.admitted != r.sunk_frames + r.total_drops())
        return {Status::fail, "conservation violated"};
    return {Status::pass,
            fmt("10^6 packets: lb copied 4e6 out / 1e6 in, servers 4x each way, ocalls == "
                "batches on all 6 enclaves%s",
                r.oversubscribed ? " (oversubscribed host)" : "")};
}

// --- criterion 7: scaling direction -----------------------------------------------------

SuiteResult scaling_direction() {
    const unsigned cores = std::thread::hardware_concurrency();
    const std::size_t workers = topo::resolve_workers(0);
    if (cores < 4 || workers < 4)
        return {Status::skip,
                fmt("host has %u cores / %zu workers; criterion applies to >= 4-core hosts",
                    cores, workers)};

    topo::RunWindow w;
    w.warmup_s = 0.3;
    w.duration_s = 1.5;

    auto enc_run = [&](int n, bool icv) {
        topo::TopoConfig t = base_topo("l2fwd-enc", topo::Kind::parallel, topo::Mode::trusted);
        t.n_enclaves = n;
        traffic::TrafficSpec s = base_spec("l2fwd-enc", 64);
        s.icv_enabled = icv;
        return mpps_of(run_once(t, s, w, fmt("l2fwd-enc/parallel(%d)/icv=%d", n, icv)));
    };

    const double one = enc_run(1, true);
    const double two = enc_run(2, true);
    if (one <= 0) return {Status::fail, "single-enclave run produced no throughput"};
    const double scale = two / one;
    if (scale < 1.5)
        return {Status::fail, fmt("2 enclaves gave %.2fx of 1 enclave, need >= 1.5x", scale)};

    const double no_icv = enc_run(1, false);
    const double ablation = no_icv / one;
    if (ablation < 1.5)
        return {Status::fail,
                fmt("disabling ICV gave %.2fx of the full path, need >= 1.5x", ablation)};

    return {Status::pass, fmt("2 enclaves: %.2fx; no-icv: %.2fx (both >= 1.5x)", scale,
                              ablation)};
}

// --- criterion 8: overhead ordering --------------------------------------------------------

// Pre-built replay workload so the generator is a cheap copy loop and the
// function under test is the pipeline bottleneck, as on the real testbed
// where the generator is a separate machine.
std::shared_ptr<const std::vector<std::vector<std::uint8_t>>> replay_workload(
    const std::string& scenario, std::uint32_t size, std::uint32_t cardinality) {
    traffic::TrafficSpec s = base_spec(scenario, size);
    s.address_cardinality = cardinality;
    traffic::FrameFactory factory(s);
    auto frames = std::make_shared<std::vector<std::vector<std::uint8_t>>>();
    frames->reserve(cardinality);
    pkt::FrameBuffer buf;
    for (std::uint32_t i = 0; i < cardinality; ++i) {
        factory.fill(buf, i);
        frames->emplace_back(buf.bytes().begin(), buf.bytes().end());
    }
    return frames;
}

// Throughput normalized by consumed worker CPU rather than wall time: the
// workers poll at 100% duty, so this equals wall MPPS on a dedicated host
// and stays stable when other tenants preempt us.
double cpu_mpps(const topo::RunResult& r) {
    if (r.cpu_s <= 0) return mpps_of(r);
    return r.sunk_frames / (r.cpu_s / r.workers_used) / 1e6;
}

std::uint64_t cycle_clock() {
#if defined(__x86_64__) || defined(__i386__)
    return __rdtsc();
#else
    return static_cast<std::uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count());
#endif
}

// Measures the processing-path throughput of a trusted/vanilla processor
// pair, interleaved batch by batch over one shared table and identical
// frames, so ambient load and cache state hit both sides alike. Returns
// the overhead by the standard equation on frames-per-cycle rates, which
// on a dedicated host (where the function under test is the bottleneck,
// as on the reference testbed) equals the MPPS overhead.
double processing_overhead(nf::Processor& vanilla, nf::Processor& trusted,
                           const std::vector<std::vector<std::uint8_t>>& workload,
                           int rounds, int batches_per_round) {
    constexpr std::size_t kBatch = 32;
    BufferPool pool(64);
    std::array<Handle, kBatch> handles;
    for (auto& h : handles) h = pool.try_acquire();

    nf::Outputs out_v(vanilla.fan_out());
    nf::Outputs out_t(trusted.fan_out());
    std::vector<std::uint64_t> samples[2];
    std::size_t cursor = 0;

    auto run_side = [&](int side, nf::Processor& proc, nf::Outputs& out) {
        // Refill from the pristine workload (processing mutates frames).
        for (std::size_t i = 0; i < kBatch; ++i) {
            const auto& f = workload[(cursor + i) % workload.size()];
            pkt::FrameBuffer& buf = pool[handles[i]];
            std::memcpy(buf.data.data(), f.data(), f.size());
            buf.length = static_cast<std::uint32_t>(f.size());
            buf.trust_tag = pkt::kUntrusted;
        }
        out.clear();
        const std::uint64_t t0 = cycle_clock();
        proc.process_batch({handles.data(), kBatch}, pool, out);
        samples[side].push_back(cycle_clock() - t0);
    };

    // Both sides process every batch of the stream, alternating who goes
    // first, so slow ambient epochs and warm-cache seconds land on each
    // side equally.
    for (int r = 0; r < rounds; ++r) {
        for (int b = 0; b < batches_per_round; ++b) {
            if ((r ^ b) & 1) {
                run_side(1, trusted, out_t);
                run_side(0, vanilla, out_v);
            } else {
                run_side(0, vanilla, out_v);
                run_side(1, trusted, out_t);
            }
            cursor += kBatch;
        }
    }

    // Trimmed per-batch sums: preemption slices and cross-core clock skips
    // show up as extreme samples on one side only.
    double rate[2];
    for (int side = 0; side < 2; ++side) {
        auto& s = samples[side];
        std::sort(s.begin(), s.end());
        const std::size_t trim = s.size() / 50;  // 2% per tail
        std::uint64_t total = 0;
        for (std::size_t i = trim; i < s.size() - trim; ++i) total += s[i];
        rate[side] = double((s.size() - 2 * trim) * kBatch) / double(total);
    }
    return bench::sgx_overhead_pct(rate[0], rate[1]);
}

SuiteResult overhead_ordering() {
    constexpr std::uint32_t kCard = 400'000;
    constexpr int kRounds = 60;
    constexpr int kBatchesPerRound = 40;

    auto launch = [&](const std::string& scenario) {
        tee::EnclaveConfig ec;
        ec.scenario = scenario;
        ec.code_identity = "tdp.nf." + scenario;
        ec.buffer_mode = tee::BufferMode::trusted_copy;
        const pkt::SecureKeys keys = traffic::run_keys(7);
        ec.enc_key = keys.enc_key;
        ec.int_key = keys.int_key;
        ec.provisioning_key = traffic::provisioning_key(7);
        auto e = std::make_shared<tee::Enclave>();
        e->launch(ec, tee::measure(ec));
        return e;
    };

    std::string detail;
    for (const std::uint32_t size : {64u, 128u}) {
        traffic::TrafficSpec spec = base_spec("l2fwd", size);
        spec.address_cardinality = kCard;
        const nf::PortMacs macs = traffic::app_port_macs();

        // Plain L2: the boundary adds only trust-tag discipline.
        const topo::SharedTables l2t = topo::build_shared_tables("l2fwd", spec, 0);
        nf::L2Forwarder l2_v(l2t.mac, macs, nullptr);
        nf::L2Forwarder l2_t(l2t.mac, macs, launch("l2fwd"));
        const double l2 = processing_overhead(l2_v, l2_t, *replay_workload("l2fwd", size, kCard),
                                              kRounds, kBatchesPerRound);

        // Plain L3: same shape over the LPM table.
        const topo::SharedTables l3t = topo::build_shared_tables("l3fwd", spec, 0);
        nf::L3Forwarder l3_v(l3t.lpm, macs, nullptr);
        nf::L3Forwarder l3_t(l3t.lpm, macs, launch("l3fwd"));
        const double l3 = processing_overhead(l3_v, l3_t, *replay_workload("l3fwd", size, kCard),
                                              kRounds, kBatchesPerRound);

        // LB in buffer-copy mode: per-batch OCALL plus 4-out/1-in copies.
        const topo::SharedTables lbt = topo::build_shared_tables("lb-server", spec, 0);
        nf::LoadBalancer lb_v(lbt.flow, 0, nullptr);
        nf::LoadBalancer lb_t(lbt.flow, 0, launch("lb-server"));
        const double lb = processing_overhead(lb_v, lb_t,
                                              *replay_workload("lb-server", size, kCard),
                                              kRounds, kBatchesPerRound);

        if (!(l2 < lb) || !(l3 < lb))
            return {Status::fail,
                    fmt("@%uB overheads l2=%.2f%% l3=%.2f%% lb(copy)=%.2f%%: plain must be "
                        "smaller",
                        size, l2, l3, lb)};
        detail += fmt("@%uB l2=%.2f%% l3=%.2f%% < lb(copy)=%.2f%%; ", size, l2, l3, lb);
    }
    return {Status::pass, detail + "(batch-interleaved processing rates)"};
}

// --- criterion 9: conservation ---------------------------------------------------------------

SuiteResult conservation() {
    // Two extra runs that stress admission backpressure and fan-out.
    {
        topo::TopoConfig t = base_topo("l3fwd", topo::Kind::parallel, topo::Mode::trusted);
        t.n_enclaves = 2;
        t.ring_capacity = 256;
        t.pool_size = 1024;
        topo::RunWindow w;
        w.duration_s = 0.5;
        run_once(t, base_spec("l3fwd", 64), w, "l3fwd/backpressure");
    }
    {
        topo::TopoConfig t = base_topo("lb-server", topo::Kind::lb, topo::Mode::trusted);
        t.n_servers = 3;
        t.buffer_mode = tee::BufferMode::untrusted;
        topo::RunWindow w;
        w.frame_count = 50'000;
        run_once(t, base_spec("lb-server", 128), w, "lb-server/untrusted");
    }

    const auto& log = conservation_log();
    if (log.empty()) return {Status::fail, "no runs recorded"};
    for (const auto& rec : log) {
        if (!rec.ok)
            return {Status::fail,
                    fmt("%s: rx=%llu != tx=%llu + drops=%llu", rec.label.c_str(),
                        (unsigned long long)rec.admitted, (unsigned long long)rec.sunk,
                        (unsigned long long)rec.drops)};
    }
    return {Status::pass, fmt("rx == tx + drops exact on all %zu runs of the acceptance matrix",
                              log.size())};
}

// --- criterion 10: attestation gate ------------------------------------------------------------

SuiteResult attestation_gate() {
    topo::TopoConfig t = base_topo("l2fwd", topo::Kind::pipeline, topo::Mode::trusted);
    t.stages = 2;
    t.hooks.forge_measurement_stage = 1;
    try {
        auto dp = topo::Dataplane::build(t, base_spec("l2fwd", 64));
        return {Status::fail, "pipeline with a tampered stage measurement came up"};
    } catch (const tee::AttestationFailed&) {
        // No dataplane exists, so zero frames were forwarded.
    }

    // Control: the honest pipeline attests and forwards.
    t.hooks.forge_measurement_stage = -1;
    topo::RunWindow w;
    w.frame_count = 1'000;
    const topo::RunResult r = run_once(t, base_spec("l2fwd", 64), w, "pipeline/attested");
    if (r.sunk_frames == 0) return {Status::fail, "attested pipeline forwarded nothing"};
    if (r.admitted != r.sunk_frames + r.total_drops())
        return {Status::fail, "conservation violated on the attested pipeline run"};
    return {Status::pass,
            "tampered stage measurement -> AttestationFailed, zero frames; honest pipeline "
            "forwards"};
}

}  // namespace

const std::vector<Suite>& all_suites() {
    static const std::vector<Suite> suites = {
        {1, "wire-throughput-formula", wire_formula},
        {2, "overhead-formula", overhead_formula},
        {3, "semantic-equivalence", semantic_equivalence},
        {4, "tamper-soundness", tamper_soundness},
        {5, "lpm-oracle", lpm_oracle},
        {6, "copy-accounting", copy_accounting},
        {7, "scaling-direction", scaling_direction},
        {8, "overhead-ordering", overhead_ordering},
        {9, "conservation", conservation},
        {10, "attestation-gate", attestation_gate},
    };
    return suites;
}

int run_suites(std::ostream& out, const std::vector<std::string>& filter) {
    int failures = 0;
    for (const Suite& suite : all_suites()) {
        if (!filter.empty() &&
            std::find(filter.begin(), filter.end(), suite.id) == filter.end())
            continue;
        SuiteResult r;
        try {
            r = suite.run();
        } catch (const std::exception& e) {
            r = {Status::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = r.status == Status::pass ? "PASS"
                          : r.status == Status::skip ? "SKIP"
                                                     : "FAIL";
        out << '[' << tag << "] " << suite.criterion << ' ' << suite.id << ": " << r.detail
            << '\n';
        out.flush();
        if (r.status == Status::fail) ++failures;
    }
    return failures;
}

}  // namespace tdp::accept
