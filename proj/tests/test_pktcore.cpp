#include <doctest.h>

#include <random>

#include "tdp/pktcore.hpp"
#include "tdp/traffic.hpp"

using namespace tdp;
using namespace tdp::pkt;

namespace {

FrameBuffer make_l3_frame(std::uint32_t frame_size, std::uint8_t ttl = 64) {
    FrameBuffer buf;
    traffic::TrafficSpec spec;
    spec.layer = traffic::Layer::l3;
    spec.frame_size = frame_size;
    spec.address_cardinality = 1000;
    traffic::FrameFactory factory(spec);
    factory.fill(buf, 1);
    if (ttl != 64) {
        buf.data[kEthHeaderLen + 8] = ttl;
        store_be16(buf.data.data() + kEthHeaderLen + 10, 0);
        store_be16(buf.data.data() + kEthHeaderLen + 10,
                   ipv4_checksum(buf.data.data() + kEthHeaderLen));
    }
    return buf;
}

}  // namespace

TEST_CASE("parse_ethernet decodes the first 14 bytes") {
    FrameBuffer buf;
    for (int i = 0; i < 6; ++i) buf.data[i] = 0xff;  // broadcast dst
    for (int i = 6; i < 12; ++i) buf.data[i] = static_cast<std::uint8_t>(i);
    store_be16(buf.data.data() + 12, kEthertypeIpv4);
    buf.length = 14;

    const auto h = parse_ethernet(buf);
    REQUIRE(h.has_value());
    CHECK(h->dst == MacAddr{0xff, 0xff, 0xff, 0xff, 0xff, 0xff});
    CHECK(h->src == MacAddr{6, 7, 8, 9, 10, 11});
    CHECK(h->ethertype == kEthertypeIpv4);

    buf.length = 13;
    CHECK_FALSE(parse_ethernet(buf).has_value());
}

TEST_CASE("ethernet serialize(parse(b)) round-trips random frames") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 10'000; ++i) {
        std::uint8_t raw[14], again[14];
        for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
        EthernetHeader::decode(raw).encode(again);
        CHECK(std::memcmp(raw, again, 14) == 0);
    }
}

TEST_CASE("ipv4 header decode/encode round-trips") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 10'000; ++i) {
        std::uint8_t raw[20], again[20];
        for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
        Ipv4Header::decode(raw).encode(again);
        CHECK(std::memcmp(raw, again, 20) == 0);
    }
}

TEST_CASE("ipv4_checksum of an all-zero header is 0xFFFF") {
    std::uint8_t header[20] = {};
    CHECK(ipv4_checksum(header) == 0xffff);
}

TEST_CASE("ipv4 checksum self-consistency and bit-flip detection") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 1000; ++i) {
        std::uint8_t header[20];
        for (auto& b : header) b = static_cast<std::uint8_t>(rng());
        header[10] = header[11] = 0;
        store_be16(header + 10, ipv4_checksum(header));
        CHECK(ipv4_checksum_ok(header));

        std::uint8_t corrupted[20];
        std::memcpy(corrupted, header, 20);
        const int bit = static_cast<int>(rng() % 160);
        corrupted[bit / 8] ^= static_cast<std::uint8_t>(1 << (bit % 8));
        CHECK_FALSE(ipv4_checksum_ok(corrupted));
    }
}

TEST_CASE("incremental TTL decrement matches a full checksum recompute") {
    std::mt19937_64 rng(24);
    for (int i = 0; i < 1000; ++i) {
        std::uint8_t header[20];
        for (auto& b : header) b = static_cast<std::uint8_t>(rng());
        if (header[8] == 0) header[8] = 1;
        header[10] = header[11] = 0;
        store_be16(header + 10, ipv4_checksum(header));

        std::uint8_t expected[20];
        std::memcpy(expected, header, 20);
        expected[8] -= 1;
        expected[10] = expected[11] = 0;
        store_be16(expected + 10, ipv4_checksum(expected));

        ipv4_decrement_ttl(header);
        CHECK(std::memcmp(header, expected, 20) == 0);
        CHECK(ipv4_checksum_ok(header));
    }
}

TEST_CASE("sanity_check_l2 length window") {
    FrameBuffer buf;
    buf.length = 64;
    CHECK(sanity_check_l2(buf).ok);
    buf.length = 63;
    CHECK(sanity_check_l2(buf).reason == DropReason::too_short);
    buf.length = 1518;
    CHECK(sanity_check_l2(buf).ok);
    buf.length = 1519;
    CHECK(sanity_check_l2(buf).reason == DropReason::too_long);
}

TEST_CASE("sanity_check_l3 verdicts") {
    SUBCASE("well-formed 64-byte frame is ok") {
        const FrameBuffer buf = make_l3_frame(64);
        CHECK(sanity_check_l3(buf).ok);
    }
    SUBCASE("ttl 0 rejects") {
        const FrameBuffer buf = make_l3_frame(64, 0);
        const auto r = sanity_check_l3(buf);
        CHECK_FALSE(r.ok);
        CHECK(r.reason == DropReason::ttl_expired);
    }
    SUBCASE("corrupted checksum rejects") {
        FrameBuffer buf = make_l3_frame(64);
        buf.data[kEthHeaderLen + 16] ^= 0x40;  // flip a dst_ip bit
        const auto r = sanity_check_l3(buf);
        CHECK_FALSE(r.ok);
        CHECK(r.reason == DropReason::bad_checksum);
    }
    SUBCASE("bad version rejects") {
        FrameBuffer buf = make_l3_frame(64);
        buf.data[kEthHeaderLen] = 0x65;  // version 6
        CHECK(sanity_check_l3(buf).reason == DropReason::bad_version);
    }
    SUBCASE("options (ihl != 5) reject") {
        FrameBuffer buf = make_l3_frame(64);
        buf.data[kEthHeaderLen] = 0x46;
        CHECK(sanity_check_l3(buf).reason == DropReason::bad_ihl);
    }
    SUBCASE("total_length beyond the buffer rejects") {
        FrameBuffer buf = make_l3_frame(64);
        store_be16(buf.data.data() + kEthHeaderLen + 2, 1200);
        store_be16(buf.data.data() + kEthHeaderLen + 10, 0);
        store_be16(buf.data.data() + kEthHeaderLen + 10,
                   ipv4_checksum(buf.data.data() + kEthHeaderLen));
        CHECK(sanity_check_l3(buf).reason == DropReason::length_mismatch);
    }
    SUBCASE("checks are pure") {
        FrameBuffer buf = make_l3_frame(64);
        FrameBuffer copy = buf;
        const auto first = sanity_check_l3(buf);
        const auto second = sanity_check_l3(buf);
        CHECK(first.ok == second.ok);
        CHECK(std::equal(buf.data.begin(), buf.data.end(), copy.data.begin()));
    }
}

TEST_CASE("secure L2 encap/decap is the identity for all payload lengths") {
    const SecureKeys keys{crypto::derive_key(1, "e"), crypto::derive_key(1, "i")};
    const SecureCodec codec(keys, true);
    std::mt19937_64 rng(31);

    for (std::size_t payload = 46; payload <= 1472; payload += 31) {
        std::vector<std::uint8_t> plain(kEthHeaderLen + payload);
        for (auto& b : plain) b = static_cast<std::uint8_t>(rng());

        std::vector<std::uint8_t> secure(plain.size() + kSecureL2Overhead);
        const std::size_t sec_len =
            codec.encap_l2(plain, 0, static_cast<std::uint32_t>(payload), secure.data());
        CHECK(sec_len == payload + kSecureL2Overhead);  // total = fixed overhead + payload
        CHECK(load_be16(secure.data() + 12) == kEthertypeSecureL2);

        std::vector<std::uint8_t> out(plain.size());
        const auto r = codec.decap_l2({secure.data(), sec_len}, out.data());
        REQUIRE(r.status == DecapStatus::ok);
        CHECK(r.length == plain.size());
        CHECK(r.packet_number == payload);
        CHECK(out == plain);
    }
}

TEST_CASE("secure L3 encap/decap identity and 8+16 overhead") {
    const SecureKeys keys{crypto::derive_key(2, "e"), crypto::derive_key(2, "i")};
    const SecureCodec codec(keys, true);
    std::mt19937_64 rng(32);

    for (std::size_t inner = 20; inner <= 1480; inner += 97) {
        std::vector<std::uint8_t> packet(inner);
        for (auto& b : packet) b = static_cast<std::uint8_t>(rng());

        std::vector<std::uint8_t> secure(inner + kSecureL3Overhead);
        const std::size_t len = codec.encap_l3(packet, 0x1001, 7, secure.data());
        CHECK(len == inner + kSecureL3Overhead);

        std::vector<std::uint8_t> out(inner);
        const auto r = codec.decap_l3({secure.data(), len}, out.data());
        REQUIRE(r.status == DecapStatus::ok);
        CHECK(r.spi == 0x1001);
        CHECK(r.seq == 7);
        CHECK(out == packet);
    }
}

TEST_CASE("secure decap flags tampered and malformed input") {
    const SecureKeys keys{crypto::derive_key(3, "e"), crypto::derive_key(3, "i")};
    const SecureCodec codec(keys, true);

    std::vector<std::uint8_t> plain(64, 0x11);
    store_be16(plain.data() + 12, kEthertypeIpv4);
    std::vector<std::uint8_t> secure(64 + kSecureL2Overhead);
    const std::size_t len = codec.encap_l2(plain, 0, 5, secure.data());

    std::vector<std::uint8_t> out(plain.size());
    SUBCASE("ciphertext flip") {
        secure[kSecureL2HeaderLen + 3] ^= 0x80;
        CHECK(codec.decap_l2({secure.data(), len}, out.data()).status ==
              DecapStatus::icv_mismatch);
    }
    SUBCASE("icv flip") {
        secure[len - 1] ^= 0x01;
        CHECK(codec.decap_l2({secure.data(), len}, out.data()).status ==
              DecapStatus::icv_mismatch);
    }
    SUBCASE("packet number flip breaks the nonce and the ICV") {
        secure[16] ^= 0x04;
        CHECK(codec.decap_l2({secure.data(), len}, out.data()).status ==
              DecapStatus::icv_mismatch);
    }
    SUBCASE("wrong ethertype is malformed") {
        secure[12] ^= 0xff;
        CHECK(codec.decap_l2({secure.data(), len}, out.data()).status ==
              DecapStatus::malformed);
    }
    SUBCASE("truncated frame is malformed") {
        CHECK(codec.decap_l2({secure.data(), kSecureL2HeaderLen + kIcvLen - 1}, out.data())
                  .status == DecapStatus::malformed);
    }
}

TEST_CASE("icv-disabled codec skips verification and writes a zero ICV") {
    const SecureKeys keys{crypto::derive_key(4, "e"), crypto::derive_key(4, "i")};
    const SecureCodec ablated(keys, false);

    std::vector<std::uint8_t> plain(80, 0x22);
    std::vector<std::uint8_t> secure(80 + kSecureL2Overhead);
    const std::size_t len = ablated.encap_l2(plain, 0, 9, secure.data());

    // The ICV field is zeroed on encap...
    for (std::size_t i = len - kIcvLen; i < len; ++i) CHECK(secure[i] == 0);

    // ...and tampering goes undetected (the ablation's definition).
    secure[kSecureL2HeaderLen] ^= 0xff;
    std::vector<std::uint8_t> out(plain.size());
    CHECK(ablated.decap_l2({secure.data(), len}, out.data()).status == DecapStatus::ok);
}
