// Frame/packet data model: buffers, Ethernet and IPv4 headers, sanity
// checks, and the secure (encrypted) L2/L3 encapsulation formats.
//
// All multi-byte wire fields are big-endian. Layouts:
//
//   SecureL2Frame   dst(6) src(6) 0x88E5(2) | flags(1) pn(4) orig_ethertype(2)
//                   | ciphertext | icv(16)
//                   fixed overhead = 14 + 7 + 16 bytes over the payload
//                   (payload = everything after the original Ethernet header;
//                   the original EtherType travels in the tag so decap can
//                   rebuild the frame exactly)
//
//   SecureL3Packet  spi(4) seq(4) | ciphertext(inner IPv4 packet) | icv(16)
//                   fixed overhead = 8 + 16 bytes; rides in an Ethernet frame
//                   with ethertype 0x88B6
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "tdp/bytes.hpp"
#include "tdp/crypto.hpp"

namespace tdp::pkt {

using MacAddr = std::array<std::uint8_t, 6>;

inline constexpr std::uint16_t kEthertypeIpv4 = 0x0800;
inline constexpr std::uint16_t kEthertypeSecureL2 = 0x88E5;
inline constexpr std::uint16_t kEthertypeSecureL3 = 0x88B6;

inline constexpr std::size_t kEthHeaderLen = 14;
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kMinFrameLen = 64;
inline constexpr std::size_t kMaxFrameLen = 1518;

inline constexpr std::size_t kIcvLen = 16;
inline constexpr std::size_t kSecureL2HeaderLen = 21;                       // outer eth + 7-byte tag
inline constexpr std::size_t kSecureL2Overhead = 14 + 7 + kIcvLen;          // 37
inline constexpr std::size_t kSecureL3HeaderLen = 8;                        // spi + seq
inline constexpr std::size_t kSecureL3Overhead = kSecureL3HeaderLen + kIcvLen;  // 24

// Why frames are dropped. Rejected frames are counted, never modified.
enum class DropReason : std::uint8_t {
    too_short,
    too_long,
    bad_version,
    bad_ihl,
    bad_checksum,
    ttl_expired,
    length_mismatch,
    malformed_secure,
    icv_tamper,
    mac_miss,
    lpm_miss,
    filter_miss,
};
inline constexpr std::size_t kDropReasonCount = 12;
const char* drop_reason_name(DropReason r);

inline constexpr std::uint32_t kUntrusted = 0;

// The unit circulating through rings. Capacity leaves room for the secure
// L2 encapsulation of a maximum-size (1518 B) frame.
struct FrameBuffer {
    static constexpr std::uint32_t kCapacity = 1600;

    std::array<std::uint8_t, kCapacity> data;
    std::uint32_t length = 0;
    std::uint16_t rx_port = 0;
    std::uint32_t trust_tag = kUntrusted;  // 0 = untrusted, else owning enclave id

    // Scratch metadata carried between pipeline stages of one processing
    // unit; never serialized.
    std::uint32_t sec_seq = 0;
    std::uint32_t sec_spi = 0;
    std::uint8_t sec_flags = 0;
    std::uint16_t egress_port = 0;
    MacAddr next_hop_mac{};

    std::span<std::uint8_t> bytes() { return {data.data(), length}; }
    std::span<const std::uint8_t> bytes() const { return {data.data(), length}; }
};

struct EthernetHeader {
    MacAddr dst{};
    MacAddr src{};
    std::uint16_t ethertype = 0;

    static EthernetHeader decode(const std::uint8_t* p);
    void encode(std::uint8_t* p) const;
    bool operator==(const EthernetHeader&) const = default;
};

// Returns std::nullopt when the buffer is too short to hold a header.
std::optional<EthernetHeader> parse_ethernet(const FrameBuffer& buf);

struct Ipv4Header {
    std::uint8_t version = 4;
    std::uint8_t ihl = 5;  // 32-bit words; only 5 (no options) is valid here
    std::uint8_t tos = 0;
    std::uint16_t total_length = 0;
    std::uint16_t identification = 0;
    std::uint16_t flags_fragment = 0;
    std::uint8_t ttl = 0;
    std::uint8_t protocol = 0;
    std::uint16_t checksum = 0;
    std::uint32_t src_ip = 0;
    std::uint32_t dst_ip = 0;

    static Ipv4Header decode(const std::uint8_t* p);
    void encode(std::uint8_t* p) const;
    bool operator==(const Ipv4Header&) const = default;
};

// Ones-complement header checksum over a 20-byte header whose checksum
// field is zeroed.
std::uint16_t ipv4_checksum(const std::uint8_t header[20]);

// True when the ones-complement sum over the header (checksum in place)
// folds to 0xFFFF.
bool ipv4_checksum_ok(const std::uint8_t header[20]);

// ttl -= 1 with the RFC 1624 incremental checksum update, in place.
void ipv4_decrement_ttl(std::uint8_t* header);

struct SanityResult {
    bool ok;
    DropReason reason;  // meaningful only when !ok

    static SanityResult accept() { return {true, DropReason::too_short}; }
    static SanityResult reject(DropReason r) { return {false, r}; }
};

SanityResult sanity_check_l2(const FrameBuffer& buf);
SanityResult sanity_check_l3(const FrameBuffer& buf);

// --- secure formats ---------------------------------------------------------

struct SecureKeys {
    crypto::Key128 enc_key{};
    crypto::Key128 int_key{};
};

enum class DecapStatus : std::uint8_t { ok, malformed, icv_mismatch };

// AES-128-CTR confidentiality + AES-128-CMAC ICV. The CTR nonce block is
// (sender id || packet number || zero pad || block counter); for L2 the
// sender id is the flags/association byte, for L3 it is the SPI.
// With `icv_enabled=false` the ICV field is written as zeros on encap and
// ignored on decap (the integrity-ablation mode).
class SecureCodec {
public:
    SecureCodec(const SecureKeys& keys, bool icv_enabled = true);

    // `out` must not overlap the input and must hold plain.size() + 37 bytes.
    std::size_t encap_l2(ByteSpan plain_frame, std::uint8_t flags, std::uint32_t packet_number,
                         std::uint8_t* out) const;

    struct L2Decap {
        DecapStatus status;
        std::size_t length = 0;  // reconstructed plain frame length
        std::uint8_t flags = 0;
        std::uint32_t packet_number = 0;
    };
    // `out_plain` must not overlap the input; needs secure.size() - 23 bytes.
    L2Decap decap_l2(ByteSpan secure_frame, std::uint8_t* out_plain) const;

    // `out` needs inner.size() + 24 bytes.
    std::size_t encap_l3(ByteSpan inner_packet, std::uint32_t spi, std::uint32_t seq,
                         std::uint8_t* out) const;

    struct L3Decap {
        DecapStatus status;
        std::size_t length = 0;  // inner packet length
        std::uint32_t spi = 0;
        std::uint32_t seq = 0;
    };
    L3Decap decap_l3(ByteSpan secure_packet, std::uint8_t* out_inner) const;

    bool icv_enabled() const { return icv_enabled_; }

private:
    static crypto::Block make_nonce(std::uint32_t sender, std::uint32_t pn);

    crypto::Aes128 aes_;
    crypto::Cmac cmac_;
    bool icv_enabled_;
};

}  // namespace tdp::pkt
