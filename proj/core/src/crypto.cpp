#include "tdp/crypto.hpp"

#include <cstring>

#include "tdp/bytes.hpp"

namespace tdp::crypto {

namespace {

constexpr std::uint8_t kSbox[256] = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
};

constexpr std::uint8_t kRcon[10] = {0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36};

inline std::uint8_t xtime(std::uint8_t a) {
    return static_cast<std::uint8_t>((a << 1) ^ ((a >> 7) * 0x1b));
}

// Round tables generated from the S-box at first use; avoids 4 KiB of
// magic constants in the source.
struct RoundTables {
    std::uint32_t te0[256], te1[256], te2[256], te3[256];
    RoundTables() {
        for (int i = 0; i < 256; ++i) {
            const std::uint8_t s = kSbox[i];
            const std::uint8_t s2 = xtime(s);
            const std::uint8_t s3 = static_cast<std::uint8_t>(s2 ^ s);
            const std::uint32_t w = (static_cast<std::uint32_t>(s2) << 24) |
                                    (static_cast<std::uint32_t>(s) << 16) |
                                    (static_cast<std::uint32_t>(s) << 8) | s3;
            te0[i] = w;
            te1[i] = (w >> 8) | (w << 24);
            te2[i] = (w >> 16) | (w << 16);
            te3[i] = (w >> 24) | (w << 8);
        }
    }
};

const RoundTables& tables() {
    static const RoundTables t;
    return t;
}

inline std::uint32_t sub_word(std::uint32_t w) {
    return (static_cast<std::uint32_t>(kSbox[(w >> 24) & 0xff]) << 24) |
           (static_cast<std::uint32_t>(kSbox[(w >> 16) & 0xff]) << 16) |
           (static_cast<std::uint32_t>(kSbox[(w >> 8) & 0xff]) << 8) |
           static_cast<std::uint32_t>(kSbox[w & 0xff]);
}

// GF(2^128) doubling used for CMAC subkeys.
Block gf_double(const Block& in) {
    Block out;
    std::uint8_t carry = 0;
    for (int i = 15; i >= 0; --i) {
        out[i] = static_cast<std::uint8_t>((in[i] << 1) | carry);
        carry = in[i] >> 7;
    }
    if (carry) out[15] ^= 0x87;
    return out;
}

inline void xor_block(Block& dst, const std::uint8_t* src) {
    for (int i = 0; i < 16; ++i) dst[i] ^= src[i];
}

}  // namespace

// --- AES-128 ---------------------------------------------------------------

Aes128::Aes128(const Key128& key) {
    for (int i = 0; i < 4; ++i) round_keys_[i] = load_be32(key.data() + 4 * i);
    for (int i = 0; i < 10; ++i) {
        const std::uint32_t temp = round_keys_[4 * i + 3];
        const std::uint32_t rot = (temp << 8) | (temp >> 24);
        round_keys_[4 * i + 4] = round_keys_[4 * i] ^ sub_word(rot) ^
                                 (static_cast<std::uint32_t>(kRcon[i]) << 24);
        round_keys_[4 * i + 5] = round_keys_[4 * i + 1] ^ round_keys_[4 * i + 4];
        round_keys_[4 * i + 6] = round_keys_[4 * i + 2] ^ round_keys_[4 * i + 5];
        round_keys_[4 * i + 7] = round_keys_[4 * i + 3] ^ round_keys_[4 * i + 6];
    }
}

void Aes128::encrypt_block(const std::uint8_t in[16], std::uint8_t out[16]) const {
    const RoundTables& t = tables();
    const std::uint32_t* rk = round_keys_.data();

    std::uint32_t s0 = load_be32(in) ^ rk[0];
    std::uint32_t s1 = load_be32(in + 4) ^ rk[1];
    std::uint32_t s2 = load_be32(in + 8) ^ rk[2];
    std::uint32_t s3 = load_be32(in + 12) ^ rk[3];

    for (int round = 1; round < 10; ++round) {
        const std::uint32_t* k = rk + 4 * round;
        const std::uint32_t t0 = t.te0[s0 >> 24] ^ t.te1[(s1 >> 16) & 0xff] ^
                                 t.te2[(s2 >> 8) & 0xff] ^ t.te3[s3 & 0xff] ^ k[0];
        const std::uint32_t t1 = t.te0[s1 >> 24] ^ t.te1[(s2 >> 16) & 0xff] ^
                                 t.te2[(s3 >> 8) & 0xff] ^ t.te3[s0 & 0xff] ^ k[1];
        const std::uint32_t t2 = t.te0[s2 >> 24] ^ t.te1[(s3 >> 16) & 0xff] ^
                                 t.te2[(s0 >> 8) & 0xff] ^ t.te3[s1 & 0xff] ^ k[2];
        const std::uint32_t t3 = t.te0[s3 >> 24] ^ t.te1[(s0 >> 16) & 0xff] ^
                                 t.te2[(s1 >> 8) & 0xff] ^ t.te3[s2 & 0xff] ^ k[3];
        s0 = t0;
        s1 = t1;
        s2 = t2;
        s3 = t3;
    }

    const std::uint32_t* k = rk + 40;
    std::uint32_t r0 =(static_cast<std::uint32_t>(kSbox[s0 >> 24]) << 24) |
                       (static_cast<std::uint32_t>(kSbox[(s1 >> 16) & 0xff]) << 16) |
                       (static_cast<std::uint32_t>(kSbox[(s2 >> 8) & 0xff]) << 8) |
                       static_cast<std::uint32_t>(kSbox[s3 & 0xff]);
    std::uint32_t r1 = (static_cast<std::uint32_t>(kSbox[s1 >> 24]) << 24) |
                       (static_cast<std::uint32_t>(kSbox[(s2 >> 16) & 0xff]) << 16) |
                       (static_cast<std::uint32_t>(kSbox[(s3 >> 8) & 0xff]) << 8) |
                       static_cast<std::uint32_t>(kSbox[s0 & 0xff]);
    std::uint32_t r2 = (static_cast<std::uint32_t>(kSbox[s2 >> 24]) << 24) |
                       (static_cast<std::uint32_t>(kSbox[(s3 >> 16) & 0xff]) << 16) |
                       (static_cast<std::uint32_t>(kSbox[(s0 >> 8) & 0xff]) << 8) |
                       static_cast<std::uint32_t>(kSbox[s1 & 0xff]);
    std::uint32_t r3 = (static_cast<std::uint32_t>(kSbox[s3 >> 24]) << 24) |
                       (static_cast<std::uint32_t>(kSbox[(s0 >> 16) & 0xff]) << 16) |
                       (static_cast<std::uint32_t>(kSbox[(s1 >> 8) & 0xff]) << 8) |
                       static_cast<std::uint32_t>(kSbox[s2 & 0xff]);

    store_be32(out, r0 ^ k[0]);
    store_be32(out + 4, r1 ^ k[1]);
    store_be32(out + 8, r2 ^ k[2]);
    store_be32(out + 12, r3 ^ k[3]);
}

// --- CMAC -------------------------------------------------------------------

Cmac::Cmac(const Key128& key) : aes_(key) {
    Block zero{};
    Block l;
    aes_.encrypt_block(zero.data(), l.data());
    subkey1_ = gf_double(l);
    subkey2_ = gf_double(subkey1_);
}

Cmac::Stream::Stream(const Cmac& cmac) : parent_(&cmac) {}

void Cmac::Stream::update(std::span<const std::uint8_t> data) {
    if (data.empty()) return;
    any_input_ = true;
    std::size_t i = 0;
    while (i < data.size()) {
        if (pending_len_ == 16) {
            // A full block with more input behind it is never the last block.
            xor_block(state_, pending_.data());
            parent_->aes_.encrypt_block(state_.data(), state_.data());
            pending_len_ = 0;
        }
        const std::size_t take = std::min<std::size_t>(16 - pending_len_, data.size() - i);
        std::memcpy(pending_.data() + pending_len_, data.data() + i, take);
        pending_len_ += take;
        i += take;
    }
}

Block Cmac::Stream::finish() {
    Block last{};
    if (any_input_ && pending_len_ == 16) {
        last = pending_;
        xor_block(last, parent_->subkey1_.data());
    } else {
        std::memcpy(last.data(), pending_.data(), pending_len_);
        last[pending_len_] = 0x80;
        xor_block(last, parent_->subkey2_.data());
    }
    xor_block(state_, last.data());
    parent_->aes_.encrypt_block(state_.data(), state_.data());
    return state_;
}

Block Cmac::compute(std::span<const std::uint8_t> msg) const {
    Stream s(*this);
    s.update(msg);
    return s.finish();
}

bool Cmac::verify(std::span<const std::uint8_t> msg, const std::uint8_t tag[16]) const {
    const Block expected = compute(msg);
    return tags_equal(expected.data(), tag);
}

bool tags_equal(const std::uint8_t a[16], const std::uint8_t b[16]) {
    std::uint8_t diff = 0;
    for (int i = 0; i < 16; ++i) diff |= static_cast<std::uint8_t>(a[i] ^ b[i]);
    return diff == 0;
}

// --- CTR --------------------------------------------------------------------

void ctr_crypt(const Aes128& aes, const Block& counter0, std::span<std::uint8_t> data) {
    Block counter = counter0;
    Block keystream;
    std::size_t off = 0;
    while (off < data.size()) {
        aes.encrypt_block(counter.data(), keystream.data());
        const std::size_t n = std::min<std::size_t>(16, data.size() - off);
        for (std::size_t i = 0; i < n; ++i) data[off + i] ^= keystream[i];
        off += n;
        // inc32 on the trailing word
        store_be32(counter.data() + 12, load_be32(counter.data() + 12) + 1);
    }
}

// --- SHA-256 ------------------------------------------------------------------

namespace {

constexpr std::uint32_t kShaK[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

Sha256::Sha256()
    : state_{0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
             0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19} {}

void Sha256::compress(const std::uint8_t block[64]) {
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i) w[i] = load_be32(block + 4 * i);
    for (int i = 16; i < 64; ++i) {
        const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
        const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
        w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }

    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
    std::uint32_t e = state_[4], f = state_[5], g = state_[6], h = state_[7];

    for (int i = 0; i < 64; ++i) {
        const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
        const std::uint32_t ch = (e & f) ^ (~e & g);
        const std::uint32_t t1 = h + s1 + ch + kShaK[i] + w[i];
        const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
        const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
        const std::uint32_t t2 = s0 + maj;
        h = g;
        g = f;
        f = e;
        e = d + t1;
        d = c;
        c = b;
        b = a;
        a = t1 + t2;
    }

    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
    state_[5] += f;
    state_[6] += g;
    state_[7] += h;
}

void Sha256::update(std::span<const std::uint8_t> data) {
    total_len_ += data.size();
    std::size_t i = 0;
    if (buffer_len_ > 0) {
        const std::size_t take = std::min<std::size_t>(64 - buffer_len_, data.size());
        std::memcpy(buffer_.data() + buffer_len_, data.data(), take);
        buffer_len_ += take;
        i = take;
        if (buffer_len_ == 64) {
            compress(buffer_.data());
            buffer_len_ = 0;
        }
    }
    while (i + 64 <= data.size()) {
        compress(data.data() + i);
        i += 64;
    }
    if (i < data.size()) {
        std::memcpy(buffer_.data(), data.data() + i, data.size() - i);
        buffer_len_ = data.size() - i;
    }
}

void Sha256::update(std::string_view s) {
    update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()),
                                         s.size()));
}

Digest256 Sha256::finish() {
    const std::uint64_t bit_len = total_len_ * 8;
    buffer_[buffer_len_++] = 0x80;
    if (buffer_len_ > 56) {
        std::memset(buffer_.data() + buffer_len_, 0, 64 - buffer_len_);
        compress(buffer_.data());
        buffer_len_ = 0;
    }
    std::memset(buffer_.data() + buffer_len_, 0, 56 - buffer_len_);
    store_be64(buffer_.data() + 56, bit_len);
    compress(buffer_.data());
    buffer_len_ = 0;

    Digest256 out;
    for (int i = 0; i < 8; ++i) store_be32(out.data() + 4 * i, state_[i]);
    return out;
}

Digest256 sha256(std::span<const std::uint8_t> data) {
    Sha256 h;
    h.update(data);
    return h.finish();
}

Key128 derive_key(std::uint64_t seed, std::string_view label) {
    Sha256 h;
    std::uint8_t seed_bytes[8];
    store_be64(seed_bytes, seed);
    h.update(std::span<const std::uint8_t>(seed_bytes, 8));
    h.update(label);
    const Digest256 d = h.finish();
    Key128 k;
    std::memcpy(k.data(), d.data(), 16);
    return k;
}

}  // namespace tdp::crypto
