#include "tdp/pktcore.hpp"

#include <cstring>

namespace tdp::pkt {

const char* drop_reason_name(DropReason r) {
    switch (r) {
        case DropReason::too_short: return "too_short";
        case DropReason::too_long: return "too_long";
        case DropReason::bad_version: return "bad_version";
        case DropReason::bad_ihl: return "bad_ihl";
        case DropReason::bad_checksum: return "bad_checksum";
        case DropReason::ttl_expired: return "ttl_expired";
        case DropReason::length_mismatch: return "length_mismatch";
        case DropReason::malformed_secure: return "malformed_secure";
        case DropReason::icv_tamper: return "icv_tamper";
        case DropReason::mac_miss: return "mac_miss";
        case DropReason::lpm_miss: return "lpm_miss";
        case DropReason::filter_miss: return "filter_miss";
    }
    return "unknown";
}

// --- Ethernet ----------------------------------------------------------------

EthernetHeader EthernetHeader::decode(const std::uint8_t* p) {
    EthernetHeader h;
    std::memcpy(h.dst.data(), p, 6);
    std::memcpy(h.src.data(), p + 6, 6);
    h.ethertype = load_be16(p + 12);
    return h;
}

void EthernetHeader::encode(std::uint8_t* p) const {
    std::memcpy(p, dst.data(), 6);
    std::memcpy(p + 6, src.data(), 6);
    store_be16(p + 12, ethertype);
}

std::optional<EthernetHeader> parse_ethernet(const FrameBuffer& buf) {
    if (buf.length < kEthHeaderLen) return std::nullopt;
    return EthernetHeader::decode(buf.data.data());
}

// --- IPv4 ---------------------------------------------------------------------

Ipv4Header Ipv4Header::decode(const std::uint8_t* p) {
    Ipv4Header h;
    h.version = p[0] >> 4;
    h.ihl = p[0] & 0x0f;
    h.tos = p[1];
    h.total_length = load_be16(p + 2);
    h.identification = load_be16(p + 4);
    h.flags_fragment = load_be16(p + 6);
    h.ttl = p[8];
    h.protocol = p[9];
    h.checksum = load_be16(p + 10);
    h.src_ip = load_be32(p + 12);
    h.dst_ip = load_be32(p + 16);
    return h;
}

void Ipv4Header::encode(std::uint8_t* p) const {
    p[0] = static_cast<std::uint8_t>((version << 4) | (ihl & 0x0f));
    p[1] = tos;
    store_be16(p + 2, total_length);
    store_be16(p + 4, identification);
    store_be16(p + 6, flags_fragment);
    p[8] = ttl;
    p[9] = protocol;
    store_be16(p + 10, checksum);
    store_be32(p + 12, src_ip);
    store_be32(p + 16, dst_ip);
}

namespace {

std::uint32_t ones_sum(const std::uint8_t* p, std::size_t len) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2) sum += load_be16(p + i);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return sum;
}

}  // namespace

std::uint16_t ipv4_checksum(const std::uint8_t header[20]) {
    return static_cast<std::uint16_t>(~ones_sum(header, kIpv4HeaderLen) & 0xffff);
}

bool ipv4_checksum_ok(const std::uint8_t header[20]) {
    return ones_sum(header, kIpv4HeaderLen) == 0xffff;
}

void ipv4_decrement_ttl(std::uint8_t* header) {
    const std::uint16_t old_word = load_be16(header + 8);
    header[8] -= 1;
    const std::uint16_t new_word = load_be16(header + 8);
    // RFC 1624: HC' = ~(~HC + ~m + m')
    std::uint32_t sum = (~load_be16(header + 10) & 0xffffu) + (~old_word & 0xffffu) + new_word;
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    store_be16(header + 10, static_cast<std::uint16_t>(~sum & 0xffff));
}

// --- sanity checks -------------------------------------------------------------

SanityResult sanity_check_l2(const FrameBuffer& buf) {
    if (buf.length < kMinFrameLen) return SanityResult::reject(DropReason::too_short);
    if (buf.length > kMaxFrameLen) return SanityResult::reject(DropReason::too_long);
    return SanityResult::accept();
}

SanityResult sanity_check_l3(const FrameBuffer& buf) {
    const SanityResult l2 = sanity_check_l2(buf);
    if (!l2.ok) return l2;

    const std::uint8_t* ip = buf.data.data() + kEthHeaderLen;
    if ((ip[0] >> 4) != 4) return SanityResult::reject(DropReason::bad_version);
    if ((ip[0] & 0x0f) != 5) return SanityResult::reject(DropReason::bad_ihl);
    if (!ipv4_checksum_ok(ip)) return SanityResult::reject(DropReason::bad_checksum);
    if (ip[8] == 0) return SanityResult::reject(DropReason::ttl_expired);

    const std::uint16_t total_length = load_be16(ip + 2);
    if (total_length < kIpv4HeaderLen || kEthHeaderLen + total_length > buf.length)
        return SanityResult::reject(DropReason::length_mismatch);

    return SanityResult::accept();
}

// --- secure codec ----------------------------------------------------------------

SecureCodec::SecureCodec(const SecureKeys& keys, bool icv_enabled)
    : aes_(keys.enc_key), cmac_(keys.int_key), icv_enabled_(icv_enabled) {}

crypto::Block SecureCodec::make_nonce(std::uint32_t sender, std::uint32_t pn) {
    crypto::Block nonce{};
    store_be32(nonce.data(), sender);
    store_be32(nonce.data() + 4, pn);
    // bytes 8..11 zero pad, bytes 12..15 are the block counter
    return nonce;
}

std::size_t SecureCodec::encap_l2(ByteSpan plain_frame, std::uint8_t flags,
                                  std::uint32_t packet_number, std::uint8_t* out) const {
    const std::size_t payload_len = plain_frame.size() - kEthHeaderLen;

    std::memcpy(out, plain_frame.data(), 12);  // dst, src
    store_be16(out + 12, kEthertypeSecureL2);
    out[14] = flags;
    store_be32(out + 15, packet_number);
    std::memcpy(out + 19, plain_frame.data() + 12, 2);  // original ethertype

    if (icv_enabled_) {
        crypto::Cmac::Stream icv(cmac_);
        icv.update({out, kSecureL2HeaderLen});
        icv.update(plain_frame.subspan(kEthHeaderLen));
        const crypto::Block tag = icv.finish();
        std::memcpy(out + kSecureL2HeaderLen + payload_len, tag.data(), kIcvLen);
    } else {
        std::memset(out + kSecureL2HeaderLen + payload_len, 0, kIcvLen);
    }

    std::memcpy(out + kSecureL2HeaderLen, plain_frame.data() + kEthHeaderLen, payload_len);
    ctr_crypt(aes_, make_nonce(flags, packet_number),
              {out + kSecureL2HeaderLen, payload_len});

    return kSecureL2HeaderLen + payload_len + kIcvLen;  // payload + 37
}

SecureCodec::L2Decap SecureCodec::decap_l2(ByteSpan secure_frame,
                                           std::uint8_t* out_plain) const {
    L2Decap r{DecapStatus::malformed, 0, 0, 0};
    if (secure_frame.size() < kSecureL2HeaderLen + kIcvLen) return r;
    if (load_be16(secure_frame.data() + 12) != kEthertypeSecureL2) return r;

    r.flags = secure_frame[14];
    r.packet_number = load_be32(secure_frame.data() + 15);
    const std::size_t ct_len = secure_frame.size() - kSecureL2HeaderLen - kIcvLen;

    // Rebuild the original frame: addresses, original ethertype, payload.
    std::memcpy(out_plain, secure_frame.data(), 12);
    std::memcpy(out_plain + 12, secure_frame.data() + 19, 2);
    std::memcpy(out_plain + kEthHeaderLen, secure_frame.data() + kSecureL2HeaderLen, ct_len);
    ctr_crypt(aes_, make_nonce(r.flags, r.packet_number), {out_plain + kEthHeaderLen, ct_len});

    if (icv_enabled_) {
        crypto::Cmac::Stream icv(cmac_);
        icv.update(secure_frame.first(kSecureL2HeaderLen));
        icv.update({out_plain + kEthHeaderLen, ct_len});
        const crypto::Block tag = icv.finish();
        if (!crypto::tags_equal(tag.data(),
                                secure_frame.data() + kSecureL2HeaderLen + ct_len)) {
            r.status = DecapStatus::icv_mismatch;
            return r;
        }
    }

    r.status = DecapStatus::ok;
    r.length = kEthHeaderLen + ct_len;
    return r;
}

std::size_t SecureCodec::encap_l3(ByteSpan inner_packet, std::uint32_t spi, std::uint32_t seq,
                                  std::uint8_t* out) const {
    store_be32(out, spi);
    store_be32(out + 4, seq);

    if (icv_enabled_) {
        crypto::Cmac::Stream icv(cmac_);
        icv.update({out, kSecureL3HeaderLen});
        icv.update(inner_packet);
        const crypto::Block tag = icv.finish();
        std::memcpy(out + kSecureL3HeaderLen + inner_packet.size(), tag.data(), kIcvLen);
    } else {
        std::memset(out + kSecureL3HeaderLen + inner_packet.size(), 0, kIcvLen);
    }

    std::memcpy(out + kSecureL3HeaderLen, inner_packet.data(), inner_packet.size());
    ctr_crypt(aes_, make_nonce(spi, seq), {out + kSecureL3HeaderLen, inner_packet.size()});

    return inner_packet.size() + kSecureL3Overhead;
}

SecureCodec::L3Decap SecureCodec::decap_l3(ByteSpan secure_packet,
                                           std::uint8_t* out_inner) const {
    L3Decap r{DecapStatus::malformed, 0, 0, 0};
    if (secure_packet.size() < kSecureL3Overhead + kIpv4HeaderLen) return r;

    r.spi = load_be32(secure_packet.data());
    r.seq = load_be32(secure_packet.data() + 4);
    const std::size_t inner_len = secure_packet.size() - kSecureL3Overhead;

    std::memcpy(out_inner, secure_packet.data() + kSecureL3HeaderLen, inner_len);
    ctr_crypt(aes_, make_nonce(r.spi, r.seq), {out_inner, inner_len});

    if (icv_enabled_) {
        crypto::Cmac::Stream icv(cmac_);
        icv.update(secure_packet.first(kSecureL3HeaderLen));
        icv.update({out_inner, inner_len});
        const crypto::Block tag = icv.finish();
        if (!crypto::tags_equal(tag.data(),
                                secure_packet.data() + kSecureL3HeaderLen + inner_len)) {
            r.status = DecapStatus::icv_mismatch;
            return r;
        }
    }

    r.status = DecapStatus::ok;
    r.length = inner_len;
    return r;
}

}  // namespace tdp::pkt
