#include "tdp/topo.hpp"

#include <atomic>
#include <pthread.h>
#include <chrono>
#include <ctime>
#if defined(__x86_64__) || defined(__i386__)
#include <x86intrin.h>
#endif
#include <cstdlib>
#include <cstring>
#include <random>
#include <thread>

namespace tdp::topo {

namespace {

using Clock = std::chrono::steady_clock;

inline std::uint64_t busy_clock() {
#if defined(__x86_64__) || defined(__i386__)
    return __rdtsc();
#else
    return static_cast<std::uint64_t>(
        std::chrono::steady_clock::now().time_since_epoch().count());
#endif
}

inline void cpu_pause() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#else
    std::atomic_signal_fence(std::memory_order_seq_cst);
#endif
}

void sleep_us(long us) { std::this_thread::sleep_for(std::chrono::microseconds(us)); }

// Dedicated-core discipline; best effort (some sandboxes ignore affinity).
void pin_to_cpu(std::size_t index) {
#if defined(__linux__)
    const unsigned n = std::thread::hardware_concurrency();
    if (n == 0) return;
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(static_cast<int>(index % n), &set);
    pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
#else
    (void)index;
#endif
}

template <typename Pred>
void wait_until(Pred pred, const char* what, double timeout_s = 300.0) {
    const auto deadline = Clock::now() + std::chrono::duration<double>(timeout_s);
    while (!pred()) {
        if (Clock::now() > deadline)
            throw std::runtime_error(std::string("dataplane stalled waiting for ") + what);
        sleep_us(50);
    }
}

// --- actors -------------------------------------------------------------------

class Actor {
public:
    virtual ~Actor() = default;
    virtual bool step() = 0;  // true when progress was made
};

class GeneratorActor final : public Actor {
public:
    GeneratorActor(BufferPool& pool, Ring& out, const traffic::TrafficSpec& spec,
                   std::uint32_t batch,
                   std::shared_ptr<const std::vector<std::vector<std::uint8_t>>> replay)
        : pool_(pool), out_(out), factory_(spec), batch_(batch), replay_(std::move(replay)) {
        tmp_.resize(batch_);
    }

    bool step() override {
        if (paused_.load(std::memory_order_relaxed)) return false;

        bool progress = false;
        if (!pending_.empty()) {
            const std::size_t n = out_.enqueue_batch(
                {pending_.data() + pending_head_, pending_.size() - pending_head_});
            admitted_.fetch_add(n, std::memory_order_relaxed);
            pending_head_ += n;
            progress = n > 0;
            if (pending_head_ == pending_.size()) {
                pending_.clear();
                pending_head_ = 0;
            } else {
                return progress;  // still backed up
            }
        }

        if (exact_ && budget_remaining_ == 0) {
            done_.store(true, std::memory_order_release);
            return progress;
        }

        std::size_t want = batch_;
        if (exact_) want = std::min<std::uint64_t>(want, budget_remaining_);

        std::size_t got = 0;
        while (got < want) {
            const Handle h = pool_.try_acquire();
            if (h == kInvalidHandle) break;
            tmp_[got++] = h;
        }
        if (got == 0) return progress;

        for (std::size_t i = 0; i < got; ++i) fill(tmp_[i]);
        if (exact_) budget_remaining_ -= got;

        const std::size_t n = out_.enqueue_batch({tmp_.data(), got});
        admitted_.fetch_add(n, std::memory_order_relaxed);
        if (n < got) {
            if (exact_) {
                pending_.assign(tmp_.begin() + n, tmp_.begin() + got);
                pending_head_ = 0;
            } else {
                // Backpressure: offered but not admitted, excluded from MPPS.
                for (std::size_t i = n; i < got; ++i) pool_.release(tmp_[i]);
                offered_failed_.fetch_add(got - n, std::memory_order_relaxed);
            }
        }
        if (exact_ && budget_remaining_ == 0 && pending_.empty())
            done_.store(true, std::memory_order_release);
        return true;
    }

    void set_budget(std::uint64_t frames) {
        exact_ = frames != 0;
        budget_remaining_ = exact_ ? frames : 0;
    }
    void unpause() { paused_.store(false, std::memory_order_release); }
    void pause() { paused_.store(true, std::memory_order_release); }
    bool done() const { return done_.load(std::memory_order_acquire); }
    bool idle() const { return paused_.load(std::memory_order_acquire) || done(); }
    std::uint64_t admitted() const { return admitted_.load(std::memory_order_relaxed); }
    std::uint64_t offered_failed() const {
        return offered_failed_.load(std::memory_order_relaxed);
    }

private:
    void fill(Handle h) {
        pkt::FrameBuffer& buf = pool_[h];
        if (!replay_ || replay_->empty()) {
            factory_.fill(buf, next_seq_++);
        } else {
            const auto& frame = (*replay_)[next_seq_++ % replay_->size()];
            std::memcpy(buf.data.data(), frame.data(), frame.size());
            buf.length = static_cast<std::uint32_t>(frame.size());
            buf.rx_port = 0;
            buf.trust_tag = pkt::kUntrusted;
        }
    }

    BufferPool& pool_;
    Ring& out_;
    traffic::FrameFactory factory_;
    std::uint32_t batch_;
    std::shared_ptr<const std::vector<std::vector<std::uint8_t>>> replay_;

    std::atomic<bool> paused_{true};
    std::atomic<bool> done_{false};
    std::atomic<std::uint64_t> admitted_{0};
    std::atomic<std::uint64_t> offered_failed_{0};

    bool exact_ = false;
    std::uint64_t budget_remaining_ = 0;
    std::uint64_t next_seq_ = 0;
    std::vector<Handle> tmp_;
    std::vector<Handle> pending_;
    std::size_t pending_head_ = 0;
};

class NfActor final : public Actor {
public:
    NfActor(std::string role, Ring& in, std::vector<Ring*> outs,
            std::unique_ptr<nf::Processor> proc, BufferPool& pool, std::uint32_t batch)
        : role_(std::move(role)), in_(in), outs_(std::move(outs)), proc_(std::move(proc)),
          pool_(pool), batch_(batch), outputs_(proc_->fan_out()),
          pending_(outs_.size()), pending_heads_(outs_.size(), 0) {
        tmp_.resize(batch_);
        for (auto& d : drops_) d.store(0, std::memory_order_relaxed);
    }

    bool step() override {
        bool progress = flush_pending();
        if (backed_up_) return progress;

        const std::uint64_t t0 = busy_clock();
        const std::size_t n = in_.dequeue_batch(tmp_.data(), batch_);
        if (n == 0) return progress;
        frames_in_.fetch_add(n, std::memory_order_relaxed);

        outputs_.clear();
        proc_->process_batch({tmp_.data(), n}, pool_, outputs_);

        for (const auto& [h, reason] : outputs_.drops()) {
            drops_[static_cast<std::size_t>(reason)].fetch_add(1, std::memory_order_relaxed);
            pool_.release(h);
        }
        for (std::size_t i = 0; i < outs_.size(); ++i) {
            auto& bucket = outputs_.bucket(i);
            if (bucket.empty()) continue;
            const std::size_t sent = outs_[i]->enqueue_batch({bucket.data(), bucket.size()});
            if (sent < bucket.size()) {
                // Internal backpressure: hold and retry, never drop mid-plane.
                pending_[i].assign(bucket.begin() + sent, bucket.end());
                pending_heads_[i] = 0;
                backed_up_ = true;
            }
        }
        busy_cycles_.fetch_add(busy_clock() - t0, std::memory_order_relaxed);
        return true;
    }

    const nf::Processor& processor() const { return *proc_; }
    const std::string& role() const { return role_; }
    std::uint64_t frames_in() const { return frames_in_.load(std::memory_order_relaxed); }
    std::uint64_t busy_cycles() const { return busy_cycles_.load(std::memory_order_relaxed); }
    std::uint64_t drop_count(std::size_t reason) const {
        return drops_[reason].load(std::memory_order_relaxed);
    }

private:
    bool flush_pending() {
        if (!backed_up_) return false;
        bool progress = false;
        bool still = false;
        for (std::size_t i = 0; i < pending_.size(); ++i) {
            auto& p = pending_[i];
            if (p.empty()) continue;
            const std::size_t sent =
                outs_[i]->enqueue_batch({p.data() + pending_heads_[i], p.size() - pending_heads_[i]});
            pending_heads_[i] += sent;
            progress |= sent > 0;
            if (pending_heads_[i] == p.size()) {
                p.clear();
                pending_heads_[i] = 0;
            } else {
                still = true;
            }
        }
        backed_up_ = still;
        return progress;
    }

    std::string role_;
    Ring& in_;
    std::vector<Ring*> outs_;
    std::unique_ptr<nf::Processor> proc_;
    BufferPool& pool_;
    std::uint32_t batch_;

    nf::Outputs outputs_;
    std::vector<Handle> tmp_;
    std::vector<std::vector<Handle>> pending_;
    std::vector<std::size_t> pending_heads_;
    bool backed_up_ = false;

    std::atomic<std::uint64_t> frames_in_{0};
    std::atomic<std::uint64_t> busy_cycles_{0};
    std::array<std::atomic<std::uint64_t>, pkt::kDropReasonCount> drops_{};
};

class SinkActor final : public Actor {
public:
    SinkActor(BufferPool& pool, Ring& in, std::uint32_t batch)
        : pool_(pool), in_(in), batch_(batch), hist_(pkt::FrameBuffer::kCapacity + 1, 0) {
        tmp_.resize(batch_);
    }

    bool step() override {
        const std::size_t n = in_.dequeue_batch(tmp_.data(), batch_);
        if (n == 0) return false;
        for (std::size_t i = 0; i < n; ++i) {
            const pkt::FrameBuffer& buf = pool_[tmp_[i]];
            bytes_.fetch_add(buf.length, std::memory_order_relaxed);
            hist_[buf.length] += 1;
            if (capture_) captured_.emplace_back(buf.bytes().begin(), buf.bytes().end());
            if (writer_) writer_->add(buf.bytes());
            pool_.release(tmp_[i]);
        }
        frames_.fetch_add(n, std::memory_order_relaxed);
        return true;
    }

    void enable_capture(bool on) { capture_ = on; }
    void set_record_path(const std::string& path) {
        if (!path.empty()) writer_ = std::make_unique<traffic::CaptureWriter>(path);
    }
    void finish_record() {
        if (writer_) writer_->close();
    }

    std::uint64_t frames() const { return frames_.load(std::memory_order_relaxed); }
    std::uint64_t bytes() const { return bytes_.load(std::memory_order_relaxed); }
    const std::vector<std::uint64_t>& hist() const { return hist_; }
    std::vector<std::vector<std::uint8_t>> take_captured() { return std::move(captured_); }

private:
    BufferPool& pool_;
    Ring& in_;
    std::uint32_t batch_;
    std::vector<Handle> tmp_;

    std::atomic<std::uint64_t> frames_{0};
    std::atomic<std::uint64_t> bytes_{0};
    std::vector<std::uint64_t> hist_;

    bool capture_ = false;
    std::vector<std::vector<std::uint8_t>> captured_;
    std::unique_ptr<traffic::CaptureWriter> writer_;
};

// --- workload tables -------------------------------------------------------------

pkt::MacAddr next_hop_mac(std::uint32_t i) {
    pkt::MacAddr m{0x02, 0x4e, 0x48, 0, 0, 0};
    m[3] = static_cast<std::uint8_t>(i >> 16);
    m[4] = static_cast<std::uint8_t>(i >> 8);
    m[5] = static_cast<std::uint8_t>(i);
    return m;
}

std::shared_ptr<nf::MacTable> build_mac_table(const traffic::TrafficSpec& spec) {
    auto table = std::make_shared<nf::MacTable>(
        std::max<std::uint32_t>(1u << 20, spec.address_cardinality));
    for (std::uint64_t i = 0; i < spec.address_cardinality; ++i)
        table->insert(traffic::dst_mac_at(i, spec.address_cardinality), 1);
    return table;
}

std::shared_ptr<nf::LpmTable> build_lpm_table(const traffic::TrafficSpec& spec) {
    auto table = std::make_shared<nf::LpmTable>();
    // A covering /8 plus /16 refinements over the generated range, so
    // lookups exercise multiple depths while covering every dst address.
    table->insert(0x0a000000u, 8, {1, next_hop_mac(0)});
    for (std::uint32_t b = 0; static_cast<std::uint64_t>(b) * 65536 < spec.address_cardinality;
         ++b)
        table->insert(0x0a000000u + (b << 16), 16, {1, next_hop_mac(b + 1)});
    return table;
}

std::shared_ptr<nf::FlowTable> build_flow_table(const traffic::TrafficSpec& spec,
                                                std::uint32_t n_servers) {
    auto table = std::make_shared<nf::FlowTable>(spec.address_cardinality);
    for (std::uint64_t i = 0; i < spec.address_cardinality; ++i)
        table->insert(traffic::dst_ip_at(i, spec.address_cardinality),
                      n_servers ? static_cast<std::uint8_t>(i % n_servers) : 0);
    return table;
}

std::shared_ptr<nf::IpSet> build_server_set(const traffic::TrafficSpec& spec,
                                            std::uint32_t server, std::uint32_t n_servers) {
    auto set = std::make_shared<nf::IpSet>(spec.address_cardinality / n_servers + 1);
    for (std::uint64_t i = server; i < spec.address_cardinality; i += n_servers)
        set->insert(traffic::dst_ip_at(i, spec.address_cardinality));
    return set;
}

// --- enclave plumbing ---------------------------------------------------------------

tee::EnclaveConfig enclave_config(const TopoConfig& cfg, const traffic::TrafficSpec& spec,
                                  const std::string& code_identity) {
    tee::EnclaveConfig ec;
    ec.scenario = cfg.scenario;
    ec.code_identity = code_identity;
    ec.config_bytes.resize(18);
    ec.config_bytes[0] = static_cast<std::uint8_t>(cfg.buffer_mode);
    ec.config_bytes[1] = spec.icv_enabled ? 1 : 0;
    store_be64(ec.config_bytes.data() + 2, cfg.epc_limit_bytes);
    store_be32(ec.config_bytes.data() + 10, cfg.batch_size);
    store_be32(ec.config_bytes.data() + 14, spec.address_cardinality);
    ec.epc_limit_bytes = cfg.epc_limit_bytes;
    ec.buffer_mode = cfg.buffer_mode;
    ec.transition_latency_ns = cfg.transition_latency_ns;
    const pkt::SecureKeys keys = traffic::run_keys(spec.seed);
    ec.enc_key = keys.enc_key;
    ec.int_key = keys.int_key;
    ec.provisioning_key = traffic::provisioning_key(spec.seed);
    return ec;
}

struct StagePlan {
    nf::L2Steps l2{};
    nf::L3Steps l3{};
    nf::SecureSteps sec{};
    bool needs_table = true;
    std::string suffix;  // appended to the code identity
};

std::vector<StagePlan> stage_plans(const std::string& scenario, int stages) {
    const bool secure = scenario == "l2fwd-enc" || scenario == "l3fwd-enc";
    std::vector<StagePlan> plans;
    auto name = [&](int i) {
        return "stage" + std::to_string(i + 1) + "of" + std::to_string(stages);
    };
    if (stages == 1) {
        plans.push_back({{}, {}, {}, true, name(0)});
    } else if (!secure && stages == 2) {
        plans.push_back({{true, true, false}, {true, true, false}, {}, true, name(0)});
        plans.push_back({{false, false, true}, {false, false, true}, {}, false, name(1)});
    } else if (!secure && stages == 3) {
        plans.push_back({{true, false, false}, {true, false, false}, {}, false, name(0)});
        plans.push_back({{false, true, false}, {false, true, false}, {}, true, name(1)});
        plans.push_back({{false, false, true}, {false, false, true}, {}, false, name(2)});
    } else if (secure && stages == 2) {
        plans.push_back({{}, {}, {true, false, false}, false, name(0)});
        plans.push_back({{}, {}, {false, true, true}, true, name(1)});
    } else if (secure && stages == 3) {
        plans.push_back({{}, {}, {true, false, false}, false, name(0)});
        plans.push_back({{}, {}, {false, true, false}, true, name(1)});
        plans.push_back({{}, {}, {false, false, true}, false, name(2)});
    } else {
        throw std::invalid_argument("pipeline stages must be 1..3");
    }
    return plans;
}

}  // namespace

SharedTables build_shared_tables(const std::string& scenario,
                                 const traffic::TrafficSpec& spec, int n_servers) {
    SharedTables t;
    if (scenario == "l2fwd" || scenario == "l2fwd-enc") {
        t.mac = build_mac_table(spec);
    } else if (scenario == "l3fwd" || scenario == "l3fwd-enc") {
        t.lpm = build_lpm_table(spec);
    } else {
        t.flow = build_flow_table(spec, static_cast<std::uint32_t>(n_servers));
        for (int s = 0; s < n_servers; ++s)
            t.server_sets.push_back(
                build_server_set(spec, static_cast<std::uint32_t>(s),
                                 static_cast<std::uint32_t>(n_servers)));
    }
    return t;
}

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::baseline: return "baseline";
        case Kind::parallel: return "parallel";
        case Kind::pipeline: return "pipeline";
        case Kind::lb: return "lb";
    }
    return "?";
}

const char* mode_name(Mode m) { return m == Mode::vanilla ? "vanilla" : "trusted"; }

std::size_t resolve_workers(std::size_t configured) {
    if (configured) return configured;
    if (const char* env = std::getenv("TDP_WORKERS")) {
        const long v = std::atol(env);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 2;
}

// --- Dataplane -------------------------------------------------------------------------

struct Dataplane::Impl {
    TopoConfig cfg;
    traffic::TrafficSpec spec;
    std::string descriptor;

    std::unique_ptr<BufferPool> pool;
    std::vector<std::unique_ptr<Ring>> rings;
    std::unique_ptr<GeneratorActor> generator;
    std::vector<std::unique_ptr<NfActor>> units;
    std::unique_ptr<SinkActor> sink;
    std::vector<std::vector<Actor*>> worker_plan;
    bool oversubscribed = false;
    bool ran = false;

    Ring* add_ring(RingMode mode) {
        rings.push_back(std::make_unique<Ring>(cfg.ring_capacity, mode));
        return rings.back().get();
    }

    // Builds one forwarding unit (full function or pipeline stage).
    std::unique_ptr<nf::Processor> make_fw_processor(const StagePlan& plan,
                                                     const std::string& identity) {
        const bool trusted = cfg.mode == Mode::trusted;
        std::shared_ptr<tee::Enclave> enclave;
        pkt::SecureKeys keys = traffic::run_keys(spec.seed);

        std::shared_ptr<const nf::MacTable> mac;
        std::shared_ptr<const nf::LpmTable> lpm;
        const bool is_l2 = cfg.scenario == "l2fwd" || cfg.scenario == "l2fwd-enc";
        const bool is_secure = cfg.scenario == "l2fwd-enc" || cfg.scenario == "l3fwd-enc";

        std::shared_ptr<const nf::MacTable> shared_mac = cfg.shared_tables.mac;
        std::shared_ptr<const nf::LpmTable> shared_lpm = cfg.shared_tables.lpm;
        auto build_tables = [&](tee::TrustedScope* scope) {
            if (plan.needs_table) {
                if (is_l2) {
                    if (shared_mac) {
                        mac = shared_mac;
                    } else {
                        auto fresh = build_mac_table(spec);
                        if (cfg.hooks.corrupt_l2_table && trusted)
                            fresh->insert(traffic::dst_mac_at(0, spec.address_cardinality), 0);
                        mac = std::move(fresh);
                    }
                    if (scope) scope->arena_alloc(mac->memory_bytes());
                } else {
                    lpm = shared_lpm ? shared_lpm : build_lpm_table(spec);
                    if (scope) scope->arena_alloc(lpm->memory_bytes());
                }
            }
            if (is_secure && scope) scope->arena_alloc(nf::CryptoCtx::memory_bytes());
        };

        if (trusted) {
            enclave = std::make_shared<tee::Enclave>();
            const tee::EnclaveConfig ec = enclave_config(cfg, spec, identity);
            enclave->launch(ec, tee::measure(ec), [&](tee::TrustedScope& scope) {
                keys = {scope.encryption_key(), scope.integrity_key()};
                build_tables(&scope);
            });
        } else {
            build_tables(nullptr);
        }

        const nf::PortMacs macs = traffic::app_port_macs();
        if (cfg.scenario == "l2fwd")
            return std::make_unique<nf::L2Forwarder>(mac, macs, enclave, plan.l2);
        if (cfg.scenario == "l3fwd")
            return std::make_unique<nf::L3Forwarder>(lpm, macs, enclave, plan.l3);

        nf::CryptoCtx ctx{keys, spec.icv_enabled, 1};
        if (cfg.scenario == "l2fwd-enc")
            return std::make_unique<nf::SecureL2Forwarder>(ctx, mac, macs, enclave, plan.sec);
        return std::make_unique<nf::SecureL3Forwarder>(ctx, lpm, macs, enclave, plan.sec);
    }

    void build_forwarding() {
        const int n_units = cfg.kind == Kind::parallel ? cfg.n_enclaves
                            : cfg.kind == Kind::pipeline ? cfg.stages
                                                         : 1;
        if (cfg.kind == Kind::pipeline) {
            const auto plans = stage_plans(cfg.scenario, cfg.stages);
            Ring* rx = add_ring(RingMode::spsc);
            Ring* prev = rx;
            std::vector<Ring*> chain{rx};
            for (int i = 0; i < cfg.stages; ++i) {
                Ring* next = add_ring(RingMode::spsc);
                chain.push_back(next);
                auto proc = make_fw_processor(plans[i],
                                              "tdp.nf." + cfg.scenario + "." + plans[i].suffix);
                units.push_back(std::make_unique<NfActor>(
                    "stage" + std::to_string(i + 1), *prev, std::vector<Ring*>{next},
                    std::move(proc), *pool, cfg.batch_size));
                prev = next;
            }
            attest_pipeline();
            wire_endpoints(*chain.front(), *chain.back());
            return;
        }

        const RingMode rx_mode = n_units > 1 ? RingMode::spmc : RingMode::spsc;
        const RingMode tx_mode = n_units > 1 ? RingMode::mpsc : RingMode::spsc;
        Ring* rx = add_ring(rx_mode);
        Ring* tx = add_ring(tx_mode);
        const StagePlan full{{}, {}, {}, true, ""};
        for (int i = 0; i < n_units; ++i) {
            auto proc = make_fw_processor(full, "tdp.nf." + cfg.scenario);
            units.push_back(std::make_unique<NfActor>(
                n_units > 1 ? "enclave" + std::to_string(i + 1) : "enclave", *rx,
                std::vector<Ring*>{tx}, std::move(proc), *pool, cfg.batch_size));
        }
        wire_endpoints(*rx, *tx);
    }

    void build_lb() {
        const bool trusted = cfg.mode == Mode::trusted;
        const std::uint32_t n_servers = static_cast<std::uint32_t>(cfg.n_servers);
        const int per_server = cfg.two_enclaves_per_server ? 2 : 1;

        Ring* rx = add_ring(RingMode::spsc);
        const int tx_producers = n_servers == 0 ? 1 : static_cast<int>(n_servers) * per_server;
        Ring* tx = add_ring(tx_producers > 1 ? RingMode::mpsc : RingMode::spsc);

        // Load balancer unit.
        std::shared_ptr<tee::Enclave> lb_enclave;
        std::shared_ptr<const nf::FlowTable> flow;
        if (trusted) {
            lb_enclave = std::make_shared<tee::Enclave>();
            const tee::EnclaveConfig ec = enclave_config(cfg, spec, "tdp.nf.lb");
            lb_enclave->launch(ec, tee::measure(ec), [&](tee::TrustedScope& scope) {
                flow = cfg.shared_tables.flow ? cfg.shared_tables.flow
                                              : build_flow_table(spec, n_servers);
                scope.arena_alloc(flow->memory_bytes());
            });
        } else {
            flow = cfg.shared_tables.flow ? cfg.shared_tables.flow
                                          : build_flow_table(spec, n_servers);
        }

        std::vector<Ring*> lb_outs;
        if (n_servers == 0) {
            lb_outs.push_back(tx);
        } else {
            for (std::uint32_t s = 0; s < n_servers; ++s)
                lb_outs.push_back(add_ring(per_server > 1 ? RingMode::spmc : RingMode::spsc));
        }
        units.push_back(std::make_unique<NfActor>(
            "lb", *rx, lb_outs,
            std::make_unique<nf::LoadBalancer>(flow, n_servers, lb_enclave), *pool,
            cfg.batch_size));

        // Backend servers; with the two-enclave optimization each backend
        // ring feeds two enclaves implementing the same logic.
        for (std::uint32_t s = 0; s < n_servers; ++s) {
            for (int dup = 0; dup < per_server; ++dup) {
                std::shared_ptr<tee::Enclave> enclave;
                std::shared_ptr<const nf::IpSet> members;
                const std::shared_ptr<const nf::IpSet> shared_set =
                    s < cfg.shared_tables.server_sets.size() ? cfg.shared_tables.server_sets[s]
                                                             : nullptr;
                if (trusted) {
                    enclave = std::make_shared<tee::Enclave>();
                    const tee::EnclaveConfig ec =
                        enclave_config(cfg, spec, "tdp.nf.server" + std::to_string(s));
                    enclave->launch(ec, tee::measure(ec), [&](tee::TrustedScope& scope) {
                        members = shared_set ? shared_set : build_server_set(spec, s, n_servers);
                        scope.arena_alloc(members->memory_bytes());
                    });
                } else {
                    members = shared_set ? shared_set : build_server_set(spec, s, n_servers);
                }
                std::string role = "server" + std::to_string(s + 1);
                if (per_server > 1) role += dup == 0 ? "a" : "b";
                units.push_back(std::make_unique<NfActor>(
                    role, *lb_outs[s], std::vector<Ring*>{tx},
                    std::make_unique<nf::BackendServer>(members, enclave), *pool,
                    cfg.batch_size));
            }
        }
        wire_endpoints(*rx, *tx);
    }

    void attest_pipeline() {
        if (cfg.mode != Mode::trusted) return;
        std::mt19937_64 rng(spec.seed ^ 0xa77e57ull);
        for (std::size_t i = 0; i + 1 < units.size(); ++i) {
            tee::Enclave* a = units[i]->processor().enclave();
            tee::Enclave* b = units[i + 1]->processor().enclave();
            const tee::Nonce na = tee::make_nonce(rng);
            const tee::Nonce nb = tee::make_nonce(rng);
            tee::AttestationReport ra = a->attest(na);
            tee::AttestationReport rb = b->attest(nb);
            if (cfg.hooks.forge_measurement_stage == static_cast<int>(i))
                ra.measurement[0] ^= 0x01;
            if (cfg.hooks.forge_measurement_stage == static_cast<int>(i + 1))
                rb.measurement[0] ^= 0x01;
            if (!b->verify_report(ra) || !a->verify_report(rb))
                throw tee::AttestationFailed();
            const crypto::Key128 ka =
                a->derive_channel_key(ra.measurement, rb.measurement, na, nb);
            const crypto::Key128 kb =
                b->derive_channel_key(ra.measurement, rb.measurement, na, nb);
            if (ka != kb) throw tee::AttestationFailed();
        }
    }

    void wire_endpoints(Ring& rx, Ring& tx) {
        auto replay = cfg.replay_frames;
        if (!replay && !cfg.replay_path.empty())
            replay = std::make_shared<const std::vector<std::vector<std::uint8_t>>>(
                traffic::CaptureReader::read_all(cfg.replay_path));
        generator = std::make_unique<GeneratorActor>(*pool, rx, spec, cfg.batch_size,
                                                     std::move(replay));
        sink = std::make_unique<SinkActor>(*pool, tx, cfg.batch_size);
    }

    void plan_workers() {
        const std::size_t available = resolve_workers(cfg.workers);
        if (available < 2)
            throw InsufficientWorkers("need at least 2 workers (I/O + processing), have " +
                                      std::to_string(available));
        const std::size_t n_units = units.size();
        const std::size_t required = n_units + 1;  // one I/O worker + one per unit
        oversubscribed = available < required;
        if (oversubscribed && !cfg.allow_oversubscription)
            throw InsufficientWorkers("need " + std::to_string(required) + " workers, have " +
                                      std::to_string(available) +
                                      " (oversubscription disabled)");

        if (available >= n_units + 2) {
            // Every actor dedicated.
            worker_plan.assign(n_units + 2, {});
            worker_plan[0].push_back(generator.get());
            worker_plan[1].push_back(sink.get());
            for (std::size_t i = 0; i < n_units; ++i)
                worker_plan[i + 2].push_back(units[i].get());
        } else if (available == n_units + 1) {
            // The I/O pair shares one worker; enclaves stay dedicated.
            worker_plan.assign(available, {});
            worker_plan[0].push_back(generator.get());
            worker_plan[0].push_back(sink.get());
            for (std::size_t i = 0; i < n_units; ++i)
                worker_plan[i + 1].push_back(units[i].get());
        } else {
            // Time-sliced; keep generator and sink on different workers.
            worker_plan.assign(available, {});
            worker_plan[0].push_back(generator.get());
            worker_plan[1].push_back(sink.get());
            for (std::size_t i = 0; i < n_units; ++i)
                worker_plan[i % available].push_back(units[i].get());
        }
    }

    struct Counters {
        std::uint64_t admitted = 0;
        std::uint64_t offered = 0;
        std::uint64_t sunk_frames = 0;
        std::uint64_t sunk_bytes = 0;
        std::uint64_t cpu_ns = 0;
        std::vector<std::uint64_t> worker_cpu_ns;
        std::array<std::uint64_t, pkt::kDropReasonCount> drops{};
        std::vector<std::uint64_t> hist;
    };

    std::vector<clockid_t> worker_cpu_clocks;

    Counters snapshot() const {
        Counters c;
        for (const clockid_t cid : worker_cpu_clocks) {
            timespec ts;
            std::uint64_t ns = 0;
            if (clock_gettime(cid, &ts) == 0)
                ns = static_cast<std::uint64_t>(ts.tv_sec) * 1'000'000'000ull + ts.tv_nsec;
            c.worker_cpu_ns.push_back(ns);
            c.cpu_ns += ns;
        }
        c.admitted = generator->admitted();
        c.offered = generator->offered_failed();
        c.sunk_frames = sink->frames();
        c.sunk_bytes = sink->bytes();
        c.hist = sink->hist();
        for (const auto& u : units)
            for (std::size_t r = 0; r < pkt::kDropReasonCount; ++r)
                c.drops[r] += u->drop_count(r);
        return c;
    }

    void quiesce() {
        wait_until([&] { return generator->idle(); }, "generator idle");
        wait_until([&] { return pool->outstanding() == 0; }, "dataplane drain");
    }

    RunResult run(const RunWindow& w) {
        if (ran) throw std::logic_error("Dataplane::run may only be called once");
        ran = true;
        const bool exact = w.frame_count != 0;
        if (exact && w.warmup_s > 0)
            throw std::invalid_argument("warmup requires a duration-mode run");

        generator->set_budget(w.frame_count);
        sink->enable_capture(w.capture_output);
        sink->set_record_path(w.record_path);

        std::atomic<bool> stop{false};
        std::vector<std::thread> threads;
        threads.reserve(worker_plan.size());
        for (std::size_t w_idx = 0; w_idx < worker_plan.size(); ++w_idx) {
            auto& mine = worker_plan[w_idx];
            threads.emplace_back([&stop, w_idx, actors = mine] {
                pin_to_cpu(w_idx);
                // Poll like a dataplane: back off with pause instructions
                // and yield only on long idle streaks (syscalls are costly
                // and jittery under sandboxed kernels).
                std::uint32_t idle = 0;
                while (!stop.load(std::memory_order_relaxed)) {
                    bool any = false;
                    for (Actor* a : actors) any |= a->step();
                    if (any) {
                        idle = 0;
                        continue;
                    }
                    if (++idle < 1024) {
                        for (std::uint32_t i = 0; i < 64; ++i) cpu_pause();
                    } else {
                        std::this_thread::yield();
                        idle = 0;
                    }
                }
            });
        }
        worker_cpu_clocks.clear();
        for (auto& t : threads) {
            clockid_t cid;
            if (pthread_getcpuclockid(t.native_handle(), &cid) == 0)
                worker_cpu_clocks.push_back(cid);
        }

        RunResult result;
        try {
            if (w.warmup_s > 0) {
                generator->unpause();
                std::this_thread::sleep_for(std::chrono::duration<double>(w.warmup_s));
                generator->pause();
                quiesce();
            }

            const Counters a = snapshot();
            const auto t0 = Clock::now();
            generator->unpause();
            if (exact) {
                wait_until([&] { return generator->done(); }, "frame budget");
            } else {
                std::this_thread::sleep_for(std::chrono::duration<double>(w.duration_s));
                generator->pause();
            }
            quiesce();
            const auto t1 = Clock::now();
            const Counters b = snapshot();

            stop.store(true, std::memory_order_release);
            for (auto& t : threads) t.join();
            threads.clear();

            result.admitted = b.admitted - a.admitted;
            result.offered_not_admitted = b.offered - a.offered;
            result.sunk_frames = b.sunk_frames - a.sunk_frames;
            result.sunk_bytes = b.sunk_bytes - a.sunk_bytes;
            result.size_hist.resize(b.hist.size());
            for (std::size_t i = 0; i < b.hist.size(); ++i)
                result.size_hist[i] = b.hist[i] - a.hist[i];
            for (std::size_t r = 0; r < pkt::kDropReasonCount; ++r)
                result.drops[r] = b.drops[r] - a.drops[r];
            result.duration_s = std::chrono::duration<double>(t1 - t0).count();
            result.cpu_s = (b.cpu_ns - a.cpu_ns) / 1e9;
            result.worker_cpu_s.resize(b.worker_cpu_ns.size());
            for (std::size_t i = 0; i < b.worker_cpu_ns.size(); ++i)
                result.worker_cpu_s[i] =
                    (b.worker_cpu_ns[i] - (i < a.worker_cpu_ns.size() ? a.worker_cpu_ns[i] : 0)) /
                    1e9;
        } catch (...) {
            stop.store(true, std::memory_order_release);
            for (auto& t : threads)
                if (t.joinable()) t.join();
            throw;
        }

        for (const auto& u : units) {
            UnitReport r;
            r.role = u->role();
            const tee::Enclave* e = u->processor().enclave();
            if (e) {
                r.enclave_id = e->id();
                r.gate = e->gate_snapshot();
            }
            r.batches = u->processor().batches();
            r.frames_in = u->frames_in();
            r.busy_cycles = u->busy_cycles();
            result.units.push_back(std::move(r));
        }
        result.oversubscribed = oversubscribed;
        result.workers_used = worker_plan.size();
        result.captured = sink->take_captured();
        sink->finish_record();
        return result;
    }
};

Dataplane::Dataplane() : impl_(std::make_unique<Impl>()) {}
Dataplane::~Dataplane() = default;

const std::string& Dataplane::descriptor() const { return impl_->descriptor; }

RunResult Dataplane::run(const RunWindow& window) { return impl_->run(window); }

std::unique_ptr<Dataplane> Dataplane::build(const TopoConfig& cfg,
                                            const traffic::TrafficSpec& spec) {
    if (cfg.scenario == "lb-server" && cfg.kind != Kind::lb)
        throw std::invalid_argument("lb-server runs only on the lb topology");
    if (cfg.scenario != "lb-server" && cfg.kind == Kind::lb)
        throw std::invalid_argument("lb topology requires the lb-server scenario");
    if (cfg.kind == Kind::parallel && cfg.n_enclaves < 1)
        throw std::invalid_argument("parallel topology needs n_enclaves >= 1");
    if (cfg.kind == Kind::lb && cfg.n_servers < 0)
        throw std::invalid_argument("lb topology needs n_servers >= 0");

    auto dp = std::unique_ptr<Dataplane>(new Dataplane());
    Impl& impl = *dp->impl_;
    impl.cfg = cfg;
    impl.spec = spec;
    impl.pool = std::make_unique<BufferPool>(cfg.pool_size);

    switch (cfg.kind) {
        case Kind::baseline:
            impl.descriptor = "baseline";
            impl.build_forwarding();
            break;
        case Kind::parallel:
            impl.descriptor = "parallel(" + std::to_string(cfg.n_enclaves) + ")";
            impl.build_forwarding();
            break;
        case Kind::pipeline:
            impl.descriptor = "pipeline(" + std::to_string(cfg.stages) + ")";
            impl.build_forwarding();
            break;
        case Kind::lb:
            impl.descriptor = "lb(" + std::to_string(cfg.n_servers) + ")";
            impl.build_lb();
            break;
    }

    impl.plan_workers();
    return dp;
}

}  // namespace tdp::topo
