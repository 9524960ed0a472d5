#include <doctest.h>

#include <chrono>
#include <random>
#include <set>

#include "tdp/tee.hpp"

using namespace tdp;
using namespace tdp::tee;

namespace {

EnclaveConfig make_config() {
    EnclaveConfig cfg;
    cfg.scenario = "l2fwd";
    cfg.code_identity = "tdp.nf.l2fwd";
    cfg.config_bytes = {1, 2, 3, 4};
    cfg.enc_key = crypto::derive_key(9, "e");
    cfg.int_key = crypto::derive_key(9, "i");
    cfg.provisioning_key = crypto::derive_key(9, "p");
    return cfg;
}

}  // namespace

TEST_CASE("measurement is deterministic and config-sensitive") {
    const EnclaveConfig cfg = make_config();
    CHECK(measure(cfg) == measure(cfg));

    EnclaveConfig other = cfg;
    other.config_bytes[0] ^= 1;
    CHECK(measure(other) != measure(cfg));

    EnclaveConfig renamed = cfg;
    renamed.code_identity = "tdp.nf.l3fwd";
    CHECK(measure(renamed) != measure(cfg));
}

TEST_CASE("launch verifies the expected measurement and counts one ecall") {
    const EnclaveConfig cfg = make_config();

    SUBCASE("self-consistent launch") {
        Enclave e;
        bool init_ran = false;
        e.launch(cfg, measure(cfg), [&](TrustedScope& scope) {
            init_ran = true;
            CHECK(scope.encryption_key() == cfg.enc_key);
            CHECK(scope.integrity_key() == cfg.int_key);
        });
        CHECK(init_ran);
        CHECK(e.launched());
        CHECK(e.id() != 0);
        CHECK(e.gate_snapshot().ecalls == 1);
        // Provisioned keys live in the arena.
        CHECK(e.arena_used() >= 48);
    }

    SUBCASE("one flipped bit in the expected digest rejects the launch") {
        Measurement expected = measure(cfg);
        expected[7] ^= 0x10;
        Enclave e;
        CHECK_THROWS_AS(e.launch(cfg, expected), MeasurementMismatch);
        CHECK_FALSE(e.launched());
    }

    SUBCASE("identical configs produce identical measurements on two launches") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        b.launch(cfg, measure(cfg));
        CHECK(a.measurement() == b.measurement());
        CHECK(a.id() != b.id());
    }
}

TEST_CASE("ocall counts transitions and copies by buffer mode") {
    SUBCASE("copy mode: a 32-packet LB batch copies 128 out and 32 in") {
        EnclaveConfig cfg = make_config();
        cfg.buffer_mode = BufferMode::trusted_copy;
        Enclave e;
        e.launch(cfg, measure(cfg));

        const int relayed = e.ocall(128, 32, [] { return 42; });
        CHECK(relayed == 42);
        const GateSnapshot g = e.gate_snapshot();
        CHECK(g.ocalls == 1);
        CHECK(g.bytes_copied_out == 128);
        CHECK(g.bytes_copied_in == 32);
    }

    SUBCASE("untrusted-buffer mode copies nothing") {
        EnclaveConfig cfg = make_config();
        cfg.buffer_mode = BufferMode::untrusted;
        Enclave e;
        e.launch(cfg, measure(cfg));

        e.ocall(128, 32, [] {});
        const GateSnapshot g = e.gate_snapshot();
        CHECK(g.ocalls == 1);
        CHECK(g.bytes_copied_out == 0);
        CHECK(g.bytes_copied_in == 0);
    }

    SUBCASE("ocall before launch throws NotLaunched") {
        Enclave e;
        CHECK_THROWS_AS(e.ocall(0, 0, [] {}), NotLaunched);
    }

    SUBCASE("injected transition latency is honoured") {
        EnclaveConfig cfg = make_config();
        cfg.transition_latency_ns = 2'000'000;  // 2 ms
        Enclave e;
        e.launch(cfg, measure(cfg));

        const auto t0 = std::chrono::steady_clock::now();
        e.ocall(0, 0, [] {});
        const auto dt = std::chrono::steady_clock::now() - t0;
        CHECK(std::chrono::duration_cast<std::chrono::microseconds>(dt).count() >= 2000);
    }
}

TEST_CASE("arena accounting and paging events") {
    EnclaveConfig cfg = make_config();
    cfg.epc_limit_bytes = 128ull << 20;
    Enclave e;
    e.launch(cfg, measure(cfg));
    const std::uint64_t base = e.arena_used();

    SUBCASE("within the limit nothing pages") {
        e.arena_alloc(1 << 20);
        CHECK(e.arena_used() == base + (1 << 20));
        CHECK(e.gate_snapshot().paging_events == 0);
    }

    SUBCASE("8 KiB past the limit costs two pages") {
        e.arena_alloc(cfg.epc_limit_bytes - base);  // exactly full
        CHECK(e.gate_snapshot().paging_events == 0);
        e.arena_alloc(8192);
        CHECK(e.gate_snapshot().paging_events == 2);
        // The allocation still succeeds; secure paging, not failure.
        CHECK(e.arena_used() == cfg.epc_limit_bytes + 8192);
    }

    SUBCASE("sum of 1000 random allocations is tracked exactly") {
        std::mt19937_64 rng(5);
        std::uint64_t total = 0;
        for (int i = 0; i < 1000; ++i) {
            const std::uint64_t bytes = 1 + rng() % 100'000;
            e.arena_alloc(bytes);
            total += bytes;
        }
        CHECK(e.arena_used() == base + total);
    }
}

TEST_CASE("local attestation") {
    const EnclaveConfig cfg = make_config();
    std::mt19937_64 rng(123);

    SUBCASE("two honest enclaves derive the same channel key") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        b.launch(cfg, measure(cfg));
        const crypto::Key128 key = local_attest(a, b, rng);
        CHECK(key != crypto::Key128{});
    }

    SUBCASE("a corrupted mac fails verification") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        b.launch(cfg, measure(cfg));
        AttestationReport r = a.attest(make_nonce(rng));
        r.mac[3] ^= 0x20;
        CHECK_FALSE(b.verify_report(r));
    }

    SUBCASE("a forged measurement fails verification") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        b.launch(cfg, measure(cfg));
        AttestationReport r = a.attest(make_nonce(rng));
        r.measurement[0] ^= 0x01;
        CHECK_FALSE(b.verify_report(r));
    }

    SUBCASE("mismatched provisioning keys cannot attest") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        EnclaveConfig other = make_config();
        other.provisioning_key = crypto::derive_key(10, "p");
        b.launch(other, measure(other));
        CHECK_THROWS_AS(local_attest(a, b, rng), AttestationFailed);
    }

    SUBCASE("channel keys differ whenever either nonce differs") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        b.launch(cfg, measure(cfg));
        std::set<crypto::Key128> keys;
        for (int i = 0; i < 10'000; ++i) {
            const Nonce na = make_nonce(rng);
            const Nonce nb = make_nonce(rng);
            keys.insert(a.derive_channel_key(a.measurement(), b.measurement(), na, nb));
        }
        CHECK(keys.size() == 10'000);
    }

    SUBCASE("random mac forgeries never verify") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        b.launch(cfg, measure(cfg));
        AttestationReport r = a.attest(make_nonce(rng));
        for (int i = 0; i < 10'000; ++i) {
            AttestationReport forged = r;
            for (auto& byte : forged.mac) byte = static_cast<std::uint8_t>(rng());
            CHECK_FALSE(b.verify_report(forged));
        }
    }

    SUBCASE("attesting an unlaunched enclave throws") {
        Enclave a, b;
        a.launch(cfg, measure(cfg));
        CHECK_THROWS_AS(local_attest(a, b, rng), NotLaunched);
    }
}
