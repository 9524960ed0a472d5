// Self-contained symmetric primitives for the trusted dataplane:
// AES-128 (encrypt direction only), AES-CMAC (RFC 4493), AES-CTR and SHA-256.
// Keys are plain 16-byte arrays so enclave arenas can account for them
// directly; nothing here allocates.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace tdp::crypto {

using Key128 = std::array<std::uint8_t, 16>;
using Block = std::array<std::uint8_t, 16>;
using Digest256 = std::array<std::uint8_t, 32>;

// AES-128, forward direction. CTR and CMAC only ever need encryption.
class Aes128 {
public:
    explicit Aes128(const Key128& key);

    void encrypt_block(const std::uint8_t in[16], std::uint8_t out[16]) const;

private:
    std::array<std::uint32_t, 44> round_keys_;
};

// AES-CMAC per RFC 4493. Supports incremental input so tags over
// (header || payload) never need a concatenation copy.
class Cmac {
public:
    explicit Cmac(const Key128& key);

    class Stream {
    public:
        explicit Stream(const Cmac& cmac);
        void update(std::span<const std::uint8_t> data);
        Block finish();

    private:
        const Cmac* parent_;
        Block state_{};
        Block pending_{};
        std::size_t pending_len_ = 0;
        bool any_input_ = false;
    };

    Block compute(std::span<const std::uint8_t> msg) const;
    bool verify(std::span<const std::uint8_t> msg, const std::uint8_t tag[16]) const;

private:
    friend class Stream;
    Aes128 aes_;
    Block subkey1_{};
    Block subkey2_{};
};

// AES-128-CTR: XORs the keystream derived from `counter0` over `data`,
// in place. The standard 32-bit big-endian increment acts on the last
// four bytes of the counter block.
void ctr_crypt(const Aes128& aes, const Block& counter0, std::span<std::uint8_t> data);

// SHA-256 (FIPS 180-4), one-shot and streaming.
class Sha256 {
public:
    Sha256();
    void update(std::span<const std::uint8_t> data);
    void update(std::string_view s);
    Digest256 finish();

private:
    void compress(const std::uint8_t block[64]);

    std::array<std::uint32_t, 8> state_;
    std::uint64_t total_len_ = 0;
    std::array<std::uint8_t, 64> buffer_{};
    std::size_t buffer_len_ = 0;
};

Digest256 sha256(std::span<const std::uint8_t> data);

// Deterministic key derivation from a run seed and a role label.
// Gives the generator and the enclaves the same provisioned key material
// without any key exchange machinery.
Key128 derive_key(std::uint64_t seed, std::string_view label);

// Constant-time-ish tag comparison.
bool tags_equal(const std::uint8_t a[16], const std::uint8_t b[16]);

}  // namespace tdp::crypto
