#include "tdp/tee.hpp"

#include <cstring>

#include "tdp/bytes.hpp"

namespace tdp::tee {

namespace {
std::atomic<std::uint32_t> g_next_enclave_id{1};
}

const char* buffer_mode_name(BufferMode m) {
    return m == BufferMode::trusted_copy ? "trusted_copy" : "untrusted";
}

Measurement measure(const EnclaveConfig& cfg) {
    crypto::Sha256 h;
    h.update(cfg.scenario);
    h.update(std::span<const std::uint8_t>(cfg.config_bytes.data(), cfg.config_bytes.size()));
    h.update(cfg.code_identity);
    return h.finish();
}

// --- TrustedScope -------------------------------------------------------------

const crypto::Key128& TrustedScope::encryption_key() const { return enclave_->cfg_.enc_key; }
const crypto::Key128& TrustedScope::integrity_key() const { return enclave_->cfg_.int_key; }
std::uint64_t TrustedScope::arena_alloc(std::uint64_t bytes) {
    return enclave_->arena_alloc(bytes);
}
std::uint32_t TrustedScope::enclave_id() const { return enclave_->id(); }

// --- Enclave -------------------------------------------------------------------

void Enclave::launch(const EnclaveConfig& cfg, const Measurement& expected,
                     const InitFn& init) {
    const Measurement m = measure(cfg);
    if (m != expected) throw MeasurementMismatch();

    cfg_ = cfg;
    measurement_ = m;
    id_ = g_next_enclave_id.fetch_add(1, std::memory_order_relaxed);
    launched_ = true;
    ecalls_.fetch_add(1, std::memory_order_relaxed);

    // Provisioned secrets live in the arena.
    arena_alloc(sizeof(cfg_.enc_key) + sizeof(cfg_.int_key) + sizeof(cfg_.provisioning_key));

    if (init) {
        TrustedScope scope(*this);
        init(scope);
    }
}

const Measurement& Enclave::measurement() const {
    if (!launched_) throw NotLaunched();
    return measurement_;
}

std::uint64_t Enclave::arena_alloc(std::uint64_t bytes) {
    const std::uint64_t before = arena_used_.fetch_add(bytes, std::memory_order_relaxed);
    const std::uint64_t after = before + bytes;
    const std::uint64_t limit = cfg_.epc_limit_bytes;
    if (after > limit) {
        // Only the bytes of this allocation beyond the limit page out.
        const std::uint64_t excess = after - std::max(before, limit);
        paging_events_.fetch_add((excess + kEpcPageSize - 1) / kEpcPageSize,
                                 std::memory_order_relaxed);
    }
    return before;
}

GateSnapshot Enclave::gate_snapshot() const {
    GateSnapshot s;
    s.ecalls = ecalls_.load(std::memory_order_relaxed);
    s.ocalls = ocalls_.load(std::memory_order_relaxed);
    s.bytes_copied_in = bytes_copied_in_.load(std::memory_order_relaxed);
    s.bytes_copied_out = bytes_copied_out_.load(std::memory_order_relaxed);
    s.paging_events = paging_events_.load(std::memory_order_relaxed);
    return s;
}

void Enclave::spin_ns(std::uint32_t ns) {
    const auto end = std::chrono::steady_clock::now() + std::chrono::nanoseconds(ns);
    while (std::chrono::steady_clock::now() < end) {
    }
}

AttestationReport Enclave::attest(const Nonce& nonce) const {
    if (!launched_) throw NotLaunched();
    AttestationReport r;
    r.measurement = measurement_;
    r.nonce = nonce;
    crypto::Cmac mac(cfg_.provisioning_key);
    crypto::Cmac::Stream s(mac);
    s.update(r.measurement);
    s.update(r.nonce);
    r.mac = s.finish();
    return r;
}

bool Enclave::verify_report(const AttestationReport& report) const {
    if (!launched_) throw NotLaunched();
    crypto::Cmac mac(cfg_.provisioning_key);
    crypto::Cmac::Stream s(mac);
    s.update(report.measurement);
    s.update(report.nonce);
    const crypto::Block expected = s.finish();
    return crypto::tags_equal(expected.data(), report.mac.data());
}

crypto::Key128 Enclave::derive_channel_key(const Measurement& initiator,
                                           const Measurement& responder, const Nonce& na,
                                           const Nonce& nb) const {
    if (!launched_) throw NotLaunched();
    crypto::Cmac mac(cfg_.provisioning_key);
    crypto::Cmac::Stream s(mac);
    s.update(initiator);
    s.update(responder);
    s.update(na);
    s.update(nb);
    const crypto::Block k = s.finish();
    crypto::Key128 key;
    std::memcpy(key.data(), k.data(), key.size());
    return key;
}

Nonce make_nonce(std::mt19937_64& rng) {
    Nonce n;
    for (std::size_t i = 0; i < n.size(); i += 8) store_be64(n.data() + i, rng());
    return n;
}

crypto::Key128 local_attest(Enclave& a, Enclave& b, std::mt19937_64& nonce_rng) {
    if (!a.launched() || !b.launched()) throw NotLaunched();

    const Nonce na = make_nonce(nonce_rng);
    const Nonce nb = make_nonce(nonce_rng);
    const AttestationReport ra = a.attest(na);
    const AttestationReport rb = b.attest(nb);

    if (!b.verify_report(ra) || !a.verify_report(rb)) throw AttestationFailed();

    const crypto::Key128 ka = a.derive_channel_key(ra.measurement, rb.measurement, na, nb);
    const crypto::Key128 kb = b.derive_channel_key(ra.measurement, rb.measurement, na, nb);
    if (ka != kb) throw AttestationFailed();
    return ka;
}

}  // namespace tdp::tee
