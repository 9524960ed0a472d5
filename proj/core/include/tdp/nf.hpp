// The five network functions (plain/encrypted L2 and L3 forwarding,
// load balancing + backend server processing), each split into trusted
// logic (tables and keys in an enclave arena) and untrusted shims.
// Vanilla variants run the same logic with no enclave attached.
//
// Pipeline topologies reuse the same processors with a subset of their
// steps enabled, so stage composition is the full function by
// construction.
#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "tdp/pktcore.hpp"
#include "tdp/pool.hpp"
#include "tdp/tee.hpp"

namespace tdp::nf {

// Association numbers (secure L2 flags byte) and SPIs distinguishing
// generator traffic from NF egress traffic in CTR nonces.
inline constexpr std::uint8_t kIngressAssoc = 0;
inline constexpr std::uint8_t kEgressAssoc = 1;
inline constexpr std::uint32_t kIngressSpi = 0x74647001;
inline constexpr std::uint32_t kEgressSpi = 0x74647002;

inline constexpr std::size_t kMaxPorts = 4;
using PortMacs = std::array<pkt::MacAddr, kMaxPorts>;

// --- lookup structures (enclave-arena residents in trusted mode) -----------

// Exact-match MAC -> output port, open addressing. MACs occupy 48 bits,
// so an all-ones key marks an empty slot.
class MacTable {
public:
    explicit MacTable(std::uint32_t max_entries = 1u << 20);

    void insert(const pkt::MacAddr& mac, std::uint16_t port);
    std::optional<std::uint16_t> lookup(const pkt::MacAddr& mac) const;

    std::size_t size() const { return count_; }
    std::uint32_t capacity() const { return max_entries_; }
    std::uint64_t memory_bytes() const { return slots_.size() * sizeof(Slot); }

private:
    struct Slot {
        std::uint64_t key;
        std::uint16_t port;
    };
    static constexpr std::uint64_t kEmptyKey = ~0ull;
    static std::uint64_t key_of(const pkt::MacAddr& mac);

    std::vector<Slot> slots_;
    std::uint64_t mask_;
    std::size_t count_ = 0;
    std::uint32_t max_entries_;
};

struct NextHop {
    std::uint16_t port = 0;
    pkt::MacAddr mac{};
    bool operator==(const NextHop&) const = default;
};

// Longest-prefix-match table: binary trie over address bits, node-pool
// backed. Inserting an existing (prefix, len) replaces its next hop.
class LpmTable {
public:
    LpmTable();

    void insert(std::uint32_t prefix, std::uint8_t prefix_len, const NextHop& hop);
    std::optional<NextHop> lookup(std::uint32_t addr) const;

    std::size_t size() const { return routes_; }
    std::uint64_t memory_bytes() const {
        return nodes_.size() * sizeof(Node) + hops_.size() * sizeof(NextHop);
    }

private:
    struct Node {
        std::int32_t child[2] = {-1, -1};
        std::int32_t hop = -1;
    };
    std::vector<Node> nodes_;
    std::vector<NextHop> hops_;
    std::size_t routes_ = 0;
};

// dst IPv4 -> backend index.
class FlowTable {
public:
    explicit FlowTable(std::uint32_t max_entries);

    void insert(std::uint32_t dst_ip, std::uint8_t backend);
    std::optional<std::uint8_t> lookup(std::uint32_t dst_ip) const;

    std::size_t size() const { return count_; }
    std::uint64_t memory_bytes() const { return slots_.size() * sizeof(Slot); }

private:
    struct Slot {
        std::uint32_t key;
        std::uint8_t value;
        std::uint8_t used;
    };
    std::vector<Slot> slots_;
    std::uint64_t mask_;
    std::size_t count_ = 0;
};

// Membership set of dst IPs assigned to one backend server.
class IpSet {
public:
    explicit IpSet(std::uint32_t max_entries);

    void insert(std::uint32_t ip);
    bool contains(std::uint32_t ip) const;

    std::size_t size() const { return count_; }
    std::uint64_t memory_bytes() const { return slots_.size() * sizeof(Slot); }

private:
    struct Slot {
        std::uint32_t key;
        std::uint8_t used;
    };
    std::vector<Slot> slots_;
    std::uint64_t mask_;
    std::size_t count_ = 0;
};

// Keys plus per-sender counter state; lives in the enclave arena in
// trusted mode. The counter belongs to whoever originates frames under
// these keys (the generator); forwarders reuse ingress numbers.
struct CryptoCtx {
    pkt::SecureKeys keys;
    bool icv_enabled = true;
    std::uint32_t next_number = 1;

    std::uint32_t take_number() { return next_number++; }
    static constexpr std::uint64_t memory_bytes() { return sizeof(pkt::SecureKeys) + 4; }
};

// Consistent-hash fallback for flow-table misses.
inline std::uint8_t backend_fallback(std::uint32_t dst_ip, std::uint32_t n_backends) {
    return static_cast<std::uint8_t>(mix64(dst_ip) % n_backends);
}

// --- batch processing --------------------------------------------------------

// Collects the fates of one processed batch: per-output-port forwards and
// per-reason drops. The owning actor moves forwards to rings and returns
// dropped handles to the pool.
class Outputs {
public:
    explicit Outputs(std::size_t fan_out) : buckets_(fan_out) {}

    void emit(std::size_t port, Handle h) { buckets_[port].push_back(h); }
    void drop(Handle h, pkt::DropReason r) { drops_.emplace_back(h, r); }

    std::size_t fan_out() const { return buckets_.size(); }
    std::vector<Handle>& bucket(std::size_t i) { return buckets_[i]; }
    std::vector<std::pair<Handle, pkt::DropReason>>& drops() { return drops_; }

    void clear() {
        for (auto& b : buckets_) b.clear();
        drops_.clear();
    }

private:
    std::vector<std::vector<Handle>> buckets_;
    std::vector<std::pair<Handle, pkt::DropReason>> drops_;
};

class Processor {
public:
    virtual ~Processor() = default;

    // Callers must not invoke with an empty batch (an empty batch must not
    // cost an OCALL).
    virtual void process_batch(std::span<const Handle> batch, BufferPool& pool,
                               Outputs& out) = 0;

    virtual std::size_t fan_out() const { return 1; }
    virtual tee::Enclave* enclave() const { return nullptr; }

    // Non-empty batches seen; equals the enclave's ocall count for
    // delegating processors.
    std::uint64_t batches() const { return batches_; }

protected:
    std::uint64_t batches_ = 0;
};

// --- forwarders ---------------------------------------------------------------

struct L2Steps {
    bool sanity = true;
    bool lookup = true;
    bool rewrite = true;
};

class L2Forwarder : public Processor {
public:
    L2Forwarder(std::shared_ptr<const MacTable> table, PortMacs port_macs,
                std::shared_ptr<tee::Enclave> enclave, L2Steps steps = {});

    void process_batch(std::span<const Handle>, BufferPool&, Outputs&) override;
    tee::Enclave* enclave() const override { return enclave_.get(); }

    // Single-frame step shared with the secure path; returns false when the
    // frame was dropped (reason in *why).
    bool forward_frame(pkt::FrameBuffer& buf, pkt::DropReason* why) const;

private:
    std::shared_ptr<const MacTable> table_;
    PortMacs port_macs_;
    std::shared_ptr<tee::Enclave> enclave_;
    L2Steps steps_;
};

struct L3Steps {
    bool sanity = true;
    bool lookup = true;
    bool rewrite = true;
};

class L3Forwarder : public Processor {
public:
    L3Forwarder(std::shared_ptr<const LpmTable> table, PortMacs port_macs,
                std::shared_ptr<tee::Enclave> enclave, L3Steps steps = {});

    void process_batch(std::span<const Handle>, BufferPool&, Outputs&) override;
    tee::Enclave* enclave() const override { return enclave_.get(); }

    bool forward_frame(pkt::FrameBuffer& buf, pkt::DropReason* why) const;

private:
    std::shared_ptr<const LpmTable> table_;
    PortMacs port_macs_;
    std::shared_ptr<tee::Enclave> enclave_;
    L3Steps steps_;
};

struct SecureSteps {
    bool decap = true;    // decrypt + integrity verification
    bool process = true;  // the plain forwarding logic
    bool encap = true;    // new ICV generation + encryption
};

class SecureL2Forwarder : public Processor {
public:
    SecureL2Forwarder(CryptoCtx ctx, std::shared_ptr<const MacTable> table,
                      PortMacs port_macs, std::shared_ptr<tee::Enclave> enclave,
                      SecureSteps steps = {});

    void process_batch(std::span<const Handle>, BufferPool&, Outputs&) override;
    tee::Enclave* enclave() const override { return enclave_.get(); }

private:
    pkt::SecureCodec codec_;
    L2Forwarder plain_;
    std::shared_ptr<tee::Enclave> enclave_;
    SecureSteps steps_;
    pkt::FrameBuffer scratch_;
};

class SecureL3Forwarder : public Processor {
public:
    SecureL3Forwarder(CryptoCtx ctx, std::shared_ptr<const LpmTable> table,
                      PortMacs port_macs, std::shared_ptr<tee::Enclave> enclave,
                      SecureSteps steps = {});

    void process_batch(std::span<const Handle>, BufferPool&, Outputs&) override;
    tee::Enclave* enclave() const override { return enclave_.get(); }

private:
    pkt::SecureCodec codec_;
    L3Forwarder plain_;
    std::shared_ptr<tee::Enclave> enclave_;
    SecureSteps steps_;
    pkt::FrameBuffer scratch_;
};

// Load balancer: classifies packets into flows by destination IP and
// partitions them into per-backend batches. The flow-table lookup itself
// is delegated through one OCALL per batch (keys out, backend indices
// in); with no backends everything goes straight to the Tx output.
class LoadBalancer : public Processor {
public:
    LoadBalancer(std::shared_ptr<const FlowTable> table, std::uint32_t n_backends,
                 std::shared_ptr<tee::Enclave> enclave);

    void process_batch(std::span<const Handle>, BufferPool&, Outputs&) override;
    std::size_t fan_out() const override { return n_backends_ == 0 ? 1 : n_backends_; }
    tee::Enclave* enclave() const override { return enclave_.get(); }

private:
    std::shared_ptr<const FlowTable> table_;
    std::uint32_t n_backends_;
    std::shared_ptr<tee::Enclave> enclave_;

    // Lookup staging. The "trusted" buffers model arena residents; the
    // untrusted pair is what the delegated lookup reads and writes. In
    // untrusted buffer mode the keys are written straight to the untrusted
    // side and nothing crosses by copy.
    std::vector<std::uint32_t> trusted_keys_;
    std::vector<std::uint8_t> trusted_results_;
    std::vector<std::uint32_t> untrusted_keys_;
    std::vector<std::uint8_t> untrusted_results_;
    std::vector<Handle> admitted_;
};

// Backend server: hash-based filter-and-forward over the dst-IP set this
// backend is responsible for; the membership lookup is delegated through
// one OCALL per batch (4 bytes out and 4 bytes in per packet).
class BackendServer : public Processor {
public:
    BackendServer(std::shared_ptr<const IpSet> members,
                  std::shared_ptr<tee::Enclave> enclave);

    void process_batch(std::span<const Handle>, BufferPool&, Outputs&) override;
    tee::Enclave* enclave() const override { return enclave_.get(); }

private:
    std::shared_ptr<const IpSet> members_;
    std::shared_ptr<tee::Enclave> enclave_;

    std::vector<std::uint32_t> trusted_keys_;
    std::vector<std::uint32_t> trusted_results_;
    std::vector<std::uint32_t> untrusted_keys_;
    std::vector<std::uint32_t> untrusted_results_;
    std::vector<Handle> admitted_;
};

}  // namespace tdp::nf
