// Trust-boundary emulator: enclaves with a measured identity, a trusted
// byte arena with EPC-style capacity accounting, call gates that count
// ECALL/OCALL transitions and cross-boundary copies, and a simplified
// local-attestation handshake.
//
// Isolation here is API discipline, not OS-level protection: key material
// is only visible to the initializer run at launch (the single ECALL of
// the design), and the class exposes no untrusted-side key accessor.
#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdp/crypto.hpp"

namespace tdp::tee {

inline constexpr std::uint64_t kDefaultEpcLimit = 128ull << 20;  // 128 MiB
inline constexpr std::uint64_t kEpcPageSize = 4096;

using Measurement = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 16>;

enum class BufferMode : std::uint8_t { trusted_copy, untrusted };
const char* buffer_mode_name(BufferMode m);

struct MeasurementMismatch : std::runtime_error {
    MeasurementMismatch() : std::runtime_error("enclave measurement mismatch") {}
};
struct NotLaunched : std::runtime_error {
    NotLaunched() : std::runtime_error("enclave not launched") {}
};
struct AttestationFailed : std::runtime_error {
    AttestationFailed() : std::runtime_error("local attestation failed") {}
};

struct GateSnapshot {
    std::uint64_t ecalls = 0;
    std::uint64_t ocalls = 0;
    std::uint64_t bytes_copied_in = 0;   // untrusted -> trusted
    std::uint64_t bytes_copied_out = 0;  // trusted -> untrusted
    std::uint64_t paging_events = 0;
};

struct EnclaveConfig {
    std::string scenario;
    std::string code_identity;
    std::vector<std::uint8_t> config_bytes;
    std::uint64_t epc_limit_bytes = kDefaultEpcLimit;
    BufferMode buffer_mode = BufferMode::trusted_copy;
    std::uint32_t transition_latency_ns = 0;
    crypto::Key128 enc_key{};
    crypto::Key128 int_key{};
    crypto::Key128 provisioning_key{};
};

// Identity digest: SHA-256(scenario || config bytes || code identity).
Measurement measure(const EnclaveConfig& cfg);

struct AttestationReport {
    Measurement measurement{};
    Nonce nonce{};
    crypto::Block mac{};  // CMAC(provisioning key, measurement || nonce)
};

class Enclave;

// Handed to the launch-time initializer only; the one surface where the
// provisioned keys are readable.
class TrustedScope {
public:
    const crypto::Key128& encryption_key() const;
    const crypto::Key128& integrity_key() const;
    std::uint64_t arena_alloc(std::uint64_t bytes);
    std::uint32_t enclave_id() const;

private:
    friend class Enclave;
    explicit TrustedScope(Enclave& e) : enclave_(&e) {}
    Enclave* enclave_;
};

class Enclave {
public:
    using InitFn = std::function<void(TrustedScope&)>;

    Enclave() = default;
    Enclave(const Enclave&) = delete;
    Enclave& operator=(const Enclave&) = delete;

    // The single ECALL of the design: verifies the expected measurement,
    // provisions keys into the arena, runs the trusted initializer.
    // Throws MeasurementMismatch on a tampered identity.
    void launch(const EnclaveConfig& cfg, const Measurement& expected,
                const InitFn& init = {});

    bool launched() const { return launched_; }
    std::uint32_t id() const { return id_; }
    const Measurement& measurement() const;
    BufferMode buffer_mode() const { return cfg_.buffer_mode; }

    // used += bytes; allocations past the limit are counted as secure
    // paging, not failed. Returns the arena offset of the allocation.
    std::uint64_t arena_alloc(std::uint64_t bytes);
    std::uint64_t arena_used() const { return arena_used_.load(std::memory_order_relaxed); }
    std::uint64_t arena_limit() const { return cfg_.epc_limit_bytes; }

    GateSnapshot gate_snapshot() const;

    // One boundary transition out of the enclave. In trusted_copy mode the
    // stated byte counts cross the boundary by copy; in untrusted mode the
    // buffers already live outside and nothing is copied.
    template <typename F>
    decltype(auto) ocall(std::size_t copy_out_bytes, std::size_t copy_in_bytes, F&& relay) {
        if (!launched_) throw NotLaunched();
        ocalls_.fetch_add(1, std::memory_order_relaxed);
        if (cfg_.buffer_mode == BufferMode::trusted_copy) {
            bytes_copied_out_.fetch_add(copy_out_bytes, std::memory_order_relaxed);
            bytes_copied_in_.fetch_add(copy_in_bytes, std::memory_order_relaxed);
        }
        if (cfg_.transition_latency_ns) spin_ns(cfg_.transition_latency_ns);
        return std::forward<F>(relay)();
    }

    // Local-attestation primitives. The convenience wrapper below performs
    // the full mutual handshake; topologies drive these directly so tests
    // can tamper with reports in flight.
    AttestationReport attest(const Nonce& nonce) const;
    bool verify_report(const AttestationReport& report) const;
    crypto::Key128 derive_channel_key(const Measurement& initiator,
                                      const Measurement& responder, const Nonce& na,
                                      const Nonce& nb) const;

private:
    friend class TrustedScope;

    static void spin_ns(std::uint32_t ns);

    EnclaveConfig cfg_;
    Measurement measurement_{};
    bool launched_ = false;
    std::uint32_t id_ = 0;

    std::atomic<std::uint64_t> arena_used_{0};
    std::atomic<std::uint64_t> ecalls_{0};
    std::atomic<std::uint64_t> ocalls_{0};
    std::atomic<std::uint64_t> bytes_copied_in_{0};
    std::atomic<std::uint64_t> bytes_copied_out_{0};
    std::atomic<std::uint64_t> paging_events_{0};
};

Nonce make_nonce(std::mt19937_64& rng);

// Mutual attestation of two launched enclaves; both sides must derive the
// same channel key. Throws AttestationFailed.
crypto::Key128 local_attest(Enclave& a, Enclave& b, std::mt19937_64& nonce_rng);

}  // namespace tdp::tee
