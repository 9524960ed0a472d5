#include "tdp/traffic.hpp"

#include <cstring>
#include <stdexcept>

namespace tdp::traffic {

Layer layer_for_scenario(const std::string& scenario) {
    if (scenario == "l2fwd") return Layer::l2;
    if (scenario == "l3fwd") return Layer::l3;
    if (scenario == "l2fwd-enc") return Layer::secure_l2;
    if (scenario == "l3fwd-enc") return Layer::secure_l3;
    if (scenario == "lb-server") return Layer::l3;
    throw std::invalid_argument("unknown scenario: " + scenario);
}

pkt::MacAddr generator_port_mac(int port) {
    return {0x02, 0x47, 0x45, 0x4e, 0x00, static_cast<std::uint8_t>(port)};
}

pkt::MacAddr app_port_mac(int port) {
    return {0x02, 0x41, 0x50, 0x50, 0x00, static_cast<std::uint8_t>(port)};
}

nf::PortMacs app_port_macs() {
    nf::PortMacs macs{};
    for (int p = 0; p < static_cast<int>(nf::kMaxPorts); ++p) macs[p] = app_port_mac(p);
    return macs;
}

std::uint32_t dst_ip_at(std::uint64_t i, std::uint32_t cardinality) {
    return 0x0a000000u + static_cast<std::uint32_t>(i % cardinality);  // 10.0.0.0 + i
}

std::uint32_t src_ip_at(std::uint64_t i, std::uint32_t cardinality) {
    return 0xac100000u + static_cast<std::uint32_t>(i % cardinality);  // 172.16.0.0 + i
}

pkt::MacAddr dst_mac_at(std::uint64_t i, std::uint32_t cardinality) {
    pkt::MacAddr m{0x02, 0x00, 0, 0, 0, 0};
    store_be32(m.data() + 2, static_cast<std::uint32_t>(i % cardinality));
    return m;
}

pkt::MacAddr src_mac_at(std::uint64_t i, std::uint32_t cardinality) {
    pkt::MacAddr m{0x02, 0x01, 0, 0, 0, 0};
    store_be32(m.data() + 2, static_cast<std::uint32_t>(i % cardinality));
    return m;
}

pkt::SecureKeys run_keys(std::uint64_t seed) {
    return {crypto::derive_key(seed, "tdp.enc"), crypto::derive_key(seed, "tdp.int")};
}

crypto::Key128 provisioning_key(std::uint64_t seed) {
    return crypto::derive_key(seed, "tdp.prov");
}

// --- FrameFactory ---------------------------------------------------------------

FrameFactory::FrameFactory(const TrafficSpec& spec)
    : spec_(spec), codec_(run_keys(spec.seed), spec.icv_enabled) {
    if (spec_.frame_size < pkt::kMinFrameLen || spec_.frame_size > 1500)
        throw std::invalid_argument("frame_size must be within 64..1500");
    if (spec_.address_cardinality == 0)
        throw std::invalid_argument("address_cardinality must be positive");
    // Static filler derived from the seed; per-frame sequence markers are
    // patched over it.
    payload_pattern_.resize(pkt::FrameBuffer::kCapacity);
    std::uint64_t x = spec_.seed ^ 0x7470ull;
    for (std::size_t i = 0; i < payload_pattern_.size(); i += 8) {
        x = mix64(x);
        store_be64(payload_pattern_.data() + i, x);
    }
}

void FrameFactory::fill_plain_l2(std::uint8_t* out, std::uint64_t seq) const {
    const pkt::MacAddr dst = dst_mac_at(seq, spec_.address_cardinality);
    const pkt::MacAddr src = src_mac_at(seq, spec_.address_cardinality);
    std::memcpy(out, dst.data(), 6);
    std::memcpy(out + 6, src.data(), 6);
    store_be16(out + 12, pkt::kEthertypeIpv4);
    std::memcpy(out + 14, payload_pattern_.data(), spec_.frame_size - 14);
    store_be64(out + 14, seq);  // per-frame marker for content-equivalence oracles
}

void FrameFactory::fill_plain_l3(std::uint8_t* out, std::uint64_t seq) const {
    const pkt::MacAddr dst = app_port_mac(0);
    const pkt::MacAddr src = generator_port_mac(0);
    std::memcpy(out, dst.data(), 6);
    std::memcpy(out + 6, src.data(), 6);
    store_be16(out + 12, pkt::kEthertypeIpv4);

    pkt::Ipv4Header ip;
    ip.total_length = static_cast<std::uint16_t>(spec_.frame_size - pkt::kEthHeaderLen);
    ip.identification = static_cast<std::uint16_t>(seq);
    ip.ttl = 64;
    ip.protocol = 17;
    ip.src_ip = src_ip_at(seq, spec_.address_cardinality);
    ip.dst_ip = dst_ip_at(seq, spec_.address_cardinality);
    ip.checksum = 0;
    ip.encode(out + 14);
    store_be16(out + 24, pkt::ipv4_checksum(out + 14));

    std::memcpy(out + 34, payload_pattern_.data(), spec_.frame_size - 34);
    store_be64(out + 34, seq);
}

void FrameFactory::fill(pkt::FrameBuffer& buf, std::uint64_t seq) const {
    buf.rx_port = 0;
    buf.trust_tag = pkt::kUntrusted;
    switch (spec_.layer) {
        case Layer::l2:
            fill_plain_l2(buf.data.data(), seq);
            buf.length = spec_.frame_size;
            break;
        case Layer::l3:
            fill_plain_l3(buf.data.data(), seq);
            buf.length = spec_.frame_size;
            break;
        case Layer::secure_l2: {
            fill_plain_l2(scratch_.data(), seq);
            const std::uint32_t pn = static_cast<std::uint32_t>(seq) + 1;
            buf.length = static_cast<std::uint32_t>(codec_.encap_l2(
                {scratch_.data(), spec_.frame_size}, nf::kIngressAssoc, pn, buf.data.data()));
            break;
        }
        case Layer::secure_l3: {
            fill_plain_l3(scratch_.data(), seq);
            std::memcpy(buf.data.data(), scratch_.data(), pkt::kEthHeaderLen);
            store_be16(buf.data.data() + 12, pkt::kEthertypeSecureL3);
            const std::uint32_t sn = static_cast<std::uint32_t>(seq) + 1;
            const std::size_t pkt_len = codec_.encap_l3(
                {scratch_.data() + pkt::kEthHeaderLen, spec_.frame_size - pkt::kEthHeaderLen},
                nf::kIngressSpi, sn, buf.data.data() + pkt::kEthHeaderLen);
            buf.length = static_cast<std::uint32_t>(pkt::kEthHeaderLen + pkt_len);
            break;
        }
    }
}

// --- capture file ------------------------------------------------------------------

CaptureWriter::CaptureWriter(const std::string& path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) throw std::runtime_error("cannot open capture for writing: " + path);
    std::fwrite(kCaptureMagic, 1, 4, f_);
    std::uint8_t ver[2];
    store_be16(ver, kCaptureVersion);
    std::fwrite(ver, 1, 2, f_);
}

CaptureWriter::~CaptureWriter() { close(); }

void CaptureWriter::add(ByteSpan frame) {
    if (!f_) throw std::runtime_error("capture writer is closed");
    std::uint8_t len[2];
    store_be16(len, static_cast<std::uint16_t>(frame.size()));
    std::fwrite(len, 1, 2, f_);
    std::fwrite(frame.data(), 1, frame.size(), f_);
}

void CaptureWriter::close() {
    if (f_) {
        std::fclose(f_);
        f_ = nullptr;
    }
}

CaptureReader::CaptureReader(const std::string& path) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_) throw std::runtime_error("cannot open capture: " + path);
    std::uint8_t header[6];
    if (std::fread(header, 1, 6, f_) != 6 || std::memcmp(header, kCaptureMagic, 4) != 0)
        throw std::runtime_error("not a TDPC capture: " + path);
    if (load_be16(header + 4) != kCaptureVersion)
        throw std::runtime_error("unsupported TDPC version in " + path);
}

CaptureReader::~CaptureReader() {
    if (f_) std::fclose(f_);
}

std::optional<std::vector<std::uint8_t>> CaptureReader::next() {
    std::uint8_t len_bytes[2];
    const std::size_t got = std::fread(len_bytes, 1, 2, f_);
    if (got == 0) return std::nullopt;
    if (got != 2) throw std::runtime_error("truncated TDPC capture");
    const std::uint16_t len = load_be16(len_bytes);
    std::vector<std::uint8_t> frame(len);
    if (std::fread(frame.data(), 1, len, f_) != len)
        throw std::runtime_error("truncated TDPC capture");
    return frame;
}

std::vector<std::vector<std::uint8_t>> CaptureReader::read_all(const std::string& path) {
    CaptureReader r(path);
    std::vector<std::vector<std::uint8_t>> frames;
    while (auto f = r.next()) frames.push_back(std::move(*f));
    return frames;
}

}  // namespace tdp::traffic
