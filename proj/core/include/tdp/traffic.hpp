// Deterministic synthetic workload: address enumeration, frame
// construction for the four traffic layers, sink counters, and the TDPC
// capture file for workload replay/record.
#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "tdp/nf.hpp"
#include "tdp/pktcore.hpp"

namespace tdp::traffic {

enum class Layer : std::uint8_t { l2, l3, secure_l2, secure_l3 };
Layer layer_for_scenario(const std::string& scenario);

struct TrafficSpec {
    Layer layer = Layer::l2;
    std::uint32_t frame_size = 64;  // original/inner frame size, 64..1500
    std::uint32_t address_cardinality = 1'000'000;
    std::uint64_t seed = 1;
    bool icv_enabled = true;
};

// Fixed testbed port identities (generator port 0 feeds app port 0; app
// port 1 feeds generator port 1).
pkt::MacAddr generator_port_mac(int port);
pkt::MacAddr app_port_mac(int port);
nf::PortMacs app_port_macs();

// Constructed address sets: exactly `cardinality` distinct values each.
std::uint32_t dst_ip_at(std::uint64_t i, std::uint32_t cardinality);
std::uint32_t src_ip_at(std::uint64_t i, std::uint32_t cardinality);
pkt::MacAddr dst_mac_at(std::uint64_t i, std::uint32_t cardinality);
pkt::MacAddr src_mac_at(std::uint64_t i, std::uint32_t cardinality);

// Run-scoped key material, derived from the seed so the generator and
// every enclave agree without key exchange.
pkt::SecureKeys run_keys(std::uint64_t seed);
crypto::Key128 provisioning_key(std::uint64_t seed);

// Builds frame #seq of the stream described by `spec`, deterministically.
class FrameFactory {
public:
    explicit FrameFactory(const TrafficSpec& spec);

    void fill(pkt::FrameBuffer& buf, std::uint64_t seq) const;

    const TrafficSpec& spec() const { return spec_; }

private:
    void fill_plain_l2(std::uint8_t* out, std::uint64_t seq) const;
    void fill_plain_l3(std::uint8_t* out, std::uint64_t seq) const;

    TrafficSpec spec_;
    pkt::SecureCodec codec_;
    std::vector<std::uint8_t> payload_pattern_;
    mutable std::array<std::uint8_t, pkt::FrameBuffer::kCapacity> scratch_{};
};

struct SinkCounters {
    std::uint64_t frames = 0;
    std::uint64_t bytes = 0;
    std::vector<std::uint64_t> size_hist;  // indexed by frame length

    SinkCounters() : size_hist(pkt::FrameBuffer::kCapacity + 1, 0) {}

    void count(std::uint32_t length) {
        ++frames;
        bytes += length;
        size_hist[length] += 1;
    }
};

// --- capture file (magic "TDPC", version u16, per-frame u16 length + bytes;
// --- u16 fields big-endian) ---------------------------------------------------

inline constexpr char kCaptureMagic[4] = {'T', 'D', 'P', 'C'};
inline constexpr std::uint16_t kCaptureVersion = 1;

class CaptureWriter {
public:
    explicit CaptureWriter(const std::string& path);
    ~CaptureWriter();
    CaptureWriter(const CaptureWriter&) = delete;
    CaptureWriter& operator=(const CaptureWriter&) = delete;

    void add(ByteSpan frame);
    void close();

private:
    std::FILE* f_ = nullptr;
};

class CaptureReader {
public:
    explicit CaptureReader(const std::string& path);
    ~CaptureReader();
    CaptureReader(const CaptureReader&) = delete;
    CaptureReader& operator=(const CaptureReader&) = delete;

    // Next frame, or nullopt at end of file. Throws on a corrupt file.
    std::optional<std::vector<std::uint8_t>> next();

    static std::vector<std::vector<std::uint8_t>> read_all(const std::string& path);

private:
    std::FILE* f_ = nullptr;
};

}  // namespace tdp::traffic
