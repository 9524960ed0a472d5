#include <doctest.h>

#include <cstdio>
#include <set>

#include "tdp/traffic.hpp"

using namespace tdp;
using namespace tdp::traffic;

TEST_CASE("same spec produces a byte-identical frame stream") {
    for (Layer layer : {Layer::l2, Layer::l3, Layer::secure_l2, Layer::secure_l3}) {
        TrafficSpec spec;
        spec.layer = layer;
        spec.frame_size = 128;
        spec.address_cardinality = 5000;
        spec.seed = 42;
        FrameFactory a(spec), b(spec);
        for (std::uint64_t seq = 0; seq < 200; ++seq) {
            pkt::FrameBuffer fa, fb;
            a.fill(fa, seq);
            b.fill(fb, seq);
            REQUIRE(fa.length == fb.length);
            CHECK(std::equal(fa.bytes().begin(), fa.bytes().end(), fb.bytes().begin()));
        }
    }
}

TEST_CASE("address sets are exactly cardinality distinct values") {
    constexpr std::uint32_t kCard = 10'000;
    std::set<std::uint32_t> ips;
    std::set<pkt::MacAddr> macs;
    for (std::uint64_t i = 0; i < kCard; ++i) {
        ips.insert(dst_ip_at(i, kCard));
        macs.insert(dst_mac_at(i, kCard));
    }
    CHECK(ips.size() == kCard);
    CHECK(macs.size() == kCard);
    // The enumeration cycles past the cardinality.
    CHECK(dst_ip_at(kCard, kCard) == dst_ip_at(0, kCard));
    CHECK(dst_ip_at(0, kCard) == 0x0a000000);  // base 10.0.0.0
}

TEST_CASE("l3 frames carry the fixed port MACs and valid headers") {
    TrafficSpec spec;
    spec.layer = Layer::l3;
    spec.frame_size = 64;
    spec.address_cardinality = 1000;
    FrameFactory factory(spec);

    std::set<std::uint32_t> dsts;
    for (std::uint64_t seq = 0; seq < 1000; ++seq) {
        pkt::FrameBuffer buf;
        factory.fill(buf, seq);
        CHECK(buf.length == 64);

        pkt::MacAddr dst, src;
        std::memcpy(dst.data(), buf.data.data(), 6);
        std::memcpy(src.data(), buf.data.data() + 6, 6);
        CHECK(dst == app_port_mac(0));
        CHECK(src == generator_port_mac(0));
        CHECK(pkt::sanity_check_l3(buf).ok);
        dsts.insert(load_be32(buf.data.data() + 30));
    }
    CHECK(dsts.size() == 1000);  // all distinct within one cycle
}

TEST_CASE("generated secure frames all pass ICV verification") {
    for (Layer layer : {Layer::secure_l2, Layer::secure_l3}) {
        TrafficSpec spec;
        spec.layer = layer;
        spec.frame_size = 64;
        spec.address_cardinality = 512;
        FrameFactory factory(spec);
        const pkt::SecureCodec codec(run_keys(spec.seed), true);

        for (std::uint64_t seq = 0; seq < 1000; ++seq) {
            pkt::FrameBuffer buf;
            factory.fill(buf, seq);
            std::array<std::uint8_t, pkt::FrameBuffer::kCapacity> out;
            if (layer == Layer::secure_l2) {
                const auto r = codec.decap_l2(buf.bytes(), out.data());
                REQUIRE(r.status == pkt::DecapStatus::ok);
                CHECK(r.packet_number == seq + 1);  // strictly increasing
            } else {
                const auto r =
                    codec.decap_l3(buf.bytes().subspan(pkt::kEthHeaderLen), out.data());
                REQUIRE(r.status == pkt::DecapStatus::ok);
                CHECK(r.seq == seq + 1);
                CHECK(r.spi == nf::kIngressSpi);
            }
        }
    }
}

TEST_CASE("secure frame sizes follow the fixed encapsulation overheads") {
    TrafficSpec spec;
    spec.layer = Layer::secure_l2;
    spec.frame_size = 100;
    spec.address_cardinality = 16;
    FrameFactory l2(spec);
    pkt::FrameBuffer buf;
    l2.fill(buf, 0);
    CHECK(buf.length == (100 - pkt::kEthHeaderLen) + pkt::kSecureL2Overhead);

    spec.layer = Layer::secure_l3;
    FrameFactory l3(spec);
    l3.fill(buf, 0);
    CHECK(buf.length == 100 + pkt::kSecureL3Overhead);
}

TEST_CASE("TDPC capture round-trips and rejects corrupt headers") {
    const std::string path = "/tmp/tdp_test_capture.tdpc";
    std::vector<std::vector<std::uint8_t>> frames;
    for (int i = 0; i < 50; ++i) {
        std::vector<std::uint8_t> f(64 + i * 7);
        for (std::size_t j = 0; j < f.size(); ++j)
            f[j] = static_cast<std::uint8_t>(i * 31 + j);
        frames.push_back(std::move(f));
    }

    {
        CaptureWriter w(path);
        for (const auto& f : frames) w.add(f);
    }
    CHECK(CaptureReader::read_all(path) == frames);

    // Corrupt the magic.
    {
        std::FILE* f = std::fopen(path.c_str(), "r+b");
        std::fputc('X', f);
        std::fclose(f);
    }
    CHECK_THROWS(CaptureReader(path));
    std::remove(path.c_str());
}
