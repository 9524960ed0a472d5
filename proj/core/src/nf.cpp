#include "tdp/nf.hpp"

#include <cstring>
#include <stdexcept>

namespace tdp::nf {

// --- MacTable -----------------------------------------------------------------

MacTable::MacTable(std::uint32_t max_entries) : max_entries_(max_entries) {
    std::uint64_t slots = 2;
    while (slots < static_cast<std::uint64_t>(max_entries) * 2) slots <<= 1;
    slots_.assign(slots, Slot{kEmptyKey, 0});
    mask_ = slots - 1;
}

std::uint64_t MacTable::key_of(const pkt::MacAddr& mac) {
    return (static_cast<std::uint64_t>(load_be32(mac.data())) << 16) | load_be16(mac.data() + 4);
}

void MacTable::insert(const pkt::MacAddr& mac, std::uint16_t port) {
    const std::uint64_t key = key_of(mac);
    std::uint64_t idx = mix64(key) & mask_;
    for (;;) {
        Slot& s = slots_[idx];
        if (s.key == key) {
            s.port = port;  // most recent insert wins
            return;
        }
        if (s.key == kEmptyKey) {
            if (count_ >= max_entries_) throw std::length_error("MacTable full");
            s.key = key;
            s.port = port;
            ++count_;
            return;
        }
        idx = (idx + 1) & mask_;
    }
}

std::optional<std::uint16_t> MacTable::lookup(const pkt::MacAddr& mac) const {
    const std::uint64_t key = key_of(mac);
    std::uint64_t idx = mix64(key) & mask_;
    for (;;) {
        const Slot& s = slots_[idx];
        if (s.key == key) return s.port;
        if (s.key == kEmptyKey) return std::nullopt;
        idx = (idx + 1) & mask_;
    }
}

// --- LpmTable -----------------------------------------------------------------

LpmTable::LpmTable() { nodes_.emplace_back(); }

void LpmTable::insert(std::uint32_t prefix, std::uint8_t prefix_len, const NextHop& hop) {
    std::int32_t cur = 0;
    for (int i = 0; i < prefix_len; ++i) {
        const int bit = (prefix >> (31 - i)) & 1;
        if (nodes_[cur].child[bit] < 0) {
            nodes_[cur].child[bit] = static_cast<std::int32_t>(nodes_.size());
            nodes_.emplace_back();
        }
        cur = nodes_[cur].child[bit];
    }
    if (nodes_[cur].hop < 0) {
        nodes_[cur].hop = static_cast<std::int32_t>(hops_.size());
        hops_.push_back(hop);
        ++routes_;
    } else {
        hops_[nodes_[cur].hop] = hop;  // identical prefix: replace
    }
}

std::optional<NextHop> LpmTable::lookup(std::uint32_t addr) const {
    std::int32_t cur = 0;
    std::int32_t best = -1;
    for (int i = 0; i <= 32; ++i) {
        if (nodes_[cur].hop >= 0) best = nodes_[cur].hop;
        if (i == 32) break;
        cur = nodes_[cur].child[(addr >> (31 - i)) & 1];
        if (cur < 0) break;
    }
    if (best < 0) return std::nullopt;
    return hops_[best];
}

// --- FlowTable ------------------------------------------------------------------

FlowTable::FlowTable(std::uint32_t max_entries) {
    std::uint64_t slots = 2;
    while (slots < static_cast<std::uint64_t>(max_entries) * 2) slots <<= 1;
    slots_.assign(slots, Slot{0, 0, 0});
    mask_ = slots - 1;
}

void FlowTable::insert(std::uint32_t dst_ip, std::uint8_t backend) {
    std::uint64_t idx = mix64(dst_ip) & mask_;
    for (;;) {
        Slot& s = slots_[idx];
        if (s.used && s.key == dst_ip) {
            s.value = backend;
            return;
        }
        if (!s.used) {
            s.key = dst_ip;
            s.value = backend;
            s.used = 1;
            ++count_;
            return;
        }
        idx = (idx + 1) & mask_;
    }
}

std::optional<std::uint8_t> FlowTable::lookup(std::uint32_t dst_ip) const {
    std::uint64_t idx = mix64(dst_ip) & mask_;
    for (;;) {
        const Slot& s = slots_[idx];
        if (s.used && s.key == dst_ip) return s.value;
        if (!s.used) return std::nullopt;
        idx = (idx + 1) & mask_;
    }
}

// --- IpSet -----------------------------------------------------------------------

IpSet::IpSet(std::uint32_t max_entries) {
    std::uint64_t slots = 2;
    while (slots < static_cast<std::uint64_t>(max_entries) * 2) slots <<= 1;
    slots_.assign(slots, Slot{0, 0});
    mask_ = slots - 1;
}

void IpSet::insert(std::uint32_t ip) {
    std::uint64_t idx = mix64(ip) & mask_;
    for (;;) {
        Slot& s = slots_[idx];
        if (s.used && s.key == ip) return;
        if (!s.used) {
            s.key = ip;
            s.used = 1;
            ++count_;
            return;
        }
        idx = (idx + 1) & mask_;
    }
}

bool IpSet::contains(std::uint32_t ip) const {
    std::uint64_t idx = mix64(ip) & mask_;
    for (;;) {
        const Slot& s = slots_[idx];
        if (s.used && s.key == ip) return true;
        if (!s.used) return false;
        idx = (idx + 1) & mask_;
    }
}

// --- L2Forwarder -------------------------------------------------------------------

L2Forwarder::L2Forwarder(std::shared_ptr<const MacTable> table, PortMacs port_macs,
                         std::shared_ptr<tee::Enclave> enclave, L2Steps steps)
    : table_(std::move(table)), port_macs_(port_macs), enclave_(std::move(enclave)),
      steps_(steps) {}

bool L2Forwarder::forward_frame(pkt::FrameBuffer& buf, pkt::DropReason* why) const {
    if (steps_.sanity) {
        const pkt::SanityResult s = pkt::sanity_check_l2(buf);
        if (!s.ok) {
            *why = s.reason;
            return false;
        }
    }
    if (steps_.lookup) {
        pkt::MacAddr dst;
        std::memcpy(dst.data(), buf.data.data(), 6);
        const auto port = table_->lookup(dst);
        if (!port) {
            *why = pkt::DropReason::mac_miss;
            return false;
        }
        buf.egress_port = *port;
    }
    if (steps_.rewrite) {
        std::memcpy(buf.data.data() + 6, port_macs_[buf.egress_port].data(), 6);
    }
    return true;
}

void L2Forwarder::process_batch(std::span<const Handle> batch, BufferPool& pool,
                                Outputs& out) {
    ++batches_;
    for (Handle h : batch) {
        pkt::FrameBuffer& buf = pool[h];
        if (enclave_) buf.trust_tag = enclave_->id();
        pkt::DropReason why;
        if (!forward_frame(buf, &why)) {
            out.drop(h, why);
            continue;
        }
        buf.trust_tag = pkt::kUntrusted;  // reverts on the way to a Tx ring
        out.emit(0, h);
    }
}

// --- L3Forwarder --------------------------------------------------------------------

L3Forwarder::L3Forwarder(std::shared_ptr<const LpmTable> table, PortMacs port_macs,
                         std::shared_ptr<tee::Enclave> enclave, L3Steps steps)
    : table_(std::move(table)), port_macs_(port_macs), enclave_(std::move(enclave)),
      steps_(steps) {}

bool L3Forwarder::forward_frame(pkt::FrameBuffer& buf, pkt::DropReason* why) const {
    if (steps_.sanity) {
        const pkt::SanityResult s = pkt::sanity_check_l3(buf);
        if (!s.ok) {
            *why = s.reason;
            return false;
        }
    }
    if (steps_.lookup) {
        const std::uint32_t dst_ip = load_be32(buf.data.data() + 30);
        const auto hop = table_->lookup(dst_ip);
        if (!hop) {
            *why = pkt::DropReason::lpm_miss;
            return false;
        }
        buf.egress_port = hop->port;
        buf.next_hop_mac = hop->mac;
    }
    if (steps_.rewrite) {
        pkt::ipv4_decrement_ttl(buf.data.data() + pkt::kEthHeaderLen);
        std::memcpy(buf.data.data(), buf.next_hop_mac.data(), 6);
        std::memcpy(buf.data.data() + 6, port_macs_[buf.egress_port].data(), 6);
    }
    return true;
}

void L3Forwarder::process_batch(std::span<const Handle> batch, BufferPool& pool,
                                Outputs& out) {
    ++batches_;
    for (Handle h : batch) {
        pkt::FrameBuffer& buf = pool[h];
        if (enclave_) buf.trust_tag = enclave_->id();
        pkt::DropReason why;
        if (!forward_frame(buf, &why)) {
            out.drop(h, why);
            continue;
        }
        buf.trust_tag = pkt::kUntrusted;
        out.emit(0, h);
    }
}

// --- SecureL2Forwarder -----------------------------------------------------------------

SecureL2Forwarder::SecureL2Forwarder(CryptoCtx ctx, std::shared_ptr<const MacTable> table,
                                     PortMacs port_macs,
                                     std::shared_ptr<tee::Enclave> enclave, SecureSteps steps)
    : codec_(ctx.keys, ctx.icv_enabled), plain_(std::move(table), port_macs, nullptr),
      enclave_(std::move(enclave)), steps_(steps) {}

void SecureL2Forwarder::process_batch(std::span<const Handle> batch, BufferPool& pool,
                                      Outputs& out) {
    ++batches_;
    for (Handle h : batch) {
        pkt::FrameBuffer& buf = pool[h];
        if (enclave_) buf.trust_tag = enclave_->id();

        pkt::FrameBuffer* cur = &buf;
        std::uint32_t pn = buf.sec_seq;

        if (steps_.decap) {
            const auto r = codec_.decap_l2(buf.bytes(), scratch_.data.data());
            if (r.status == pkt::DecapStatus::malformed) {
                out.drop(h, pkt::DropReason::malformed_secure);
                continue;
            }
            if (r.status == pkt::DecapStatus::icv_mismatch) {
                out.drop(h, pkt::DropReason::icv_tamper);
                continue;
            }
            scratch_.length = static_cast<std::uint32_t>(r.length);
            scratch_.rx_port = buf.rx_port;
            pn = r.packet_number;
            cur = &scratch_;
        }

        if (steps_.process) {
            pkt::DropReason why;
            if (!plain_.forward_frame(*cur, &why)) {
                out.drop(h, why);
                continue;
            }
        }

        if (steps_.encap) {
            if (cur == &scratch_) {
                buf.length = static_cast<std::uint32_t>(
                    codec_.encap_l2(cur->bytes(), kEgressAssoc, pn, buf.data.data()));
            } else {
                const std::size_t len =
                    codec_.encap_l2(buf.bytes(), kEgressAssoc, pn, scratch_.data.data());
                std::memcpy(buf.data.data(), scratch_.data.data(), len);
                buf.length = static_cast<std::uint32_t>(len);
            }
        } else {
            if (cur == &scratch_) {
                std::memcpy(buf.data.data(), scratch_.data.data(), scratch_.length);
                buf.length = scratch_.length;
            }
            buf.sec_seq = pn;  // carried to the encap stage
            buf.sec_flags = kEgressAssoc;
        }

        buf.trust_tag = pkt::kUntrusted;
        out.emit(0, h);
    }
}

// --- SecureL3Forwarder -----------------------------------------------------------------

SecureL3Forwarder::SecureL3Forwarder(CryptoCtx ctx, std::shared_ptr<const LpmTable> table,
                                     PortMacs port_macs,
                                     std::shared_ptr<tee::Enclave> enclave, SecureSteps steps)
    : codec_(ctx.keys, ctx.icv_enabled), plain_(std::move(table), port_macs, nullptr),
      enclave_(std::move(enclave)), steps_(steps) {}

void SecureL3Forwarder::process_batch(std::span<const Handle> batch, BufferPool& pool,
                                      Outputs& out) {
    ++batches_;
    for (Handle h : batch) {
        pkt::FrameBuffer& buf = pool[h];
        if (enclave_) buf.trust_tag = enclave_->id();

        pkt::FrameBuffer* cur = &buf;
        std::uint32_t seq = buf.sec_seq;

        if (steps_.decap) {
            if (buf.length < pkt::kEthHeaderLen + pkt::kSecureL3Overhead + pkt::kIpv4HeaderLen) {
                out.drop(h, pkt::DropReason::malformed_secure);
                continue;
            }
            const auto r = codec_.decap_l3(buf.bytes().subspan(pkt::kEthHeaderLen),
                                           scratch_.data.data() + pkt::kEthHeaderLen);
            if (r.status == pkt::DecapStatus::malformed) {
                out.drop(h, pkt::DropReason::malformed_secure);
                continue;
            }
            if (r.status == pkt::DecapStatus::icv_mismatch) {
                out.drop(h, pkt::DropReason::icv_tamper);
                continue;
            }
            std::memcpy(scratch_.data.data(), buf.data.data(), pkt::kEthHeaderLen);
            store_be16(scratch_.data.data() + 12, pkt::kEthertypeIpv4);
            scratch_.length = static_cast<std::uint32_t>(pkt::kEthHeaderLen + r.length);
            scratch_.rx_port = buf.rx_port;
            seq = r.seq;
            cur = &scratch_;
        }

        if (steps_.process) {
            pkt::DropReason why;
            if (!plain_.forward_frame(*cur, &why)) {
                out.drop(h, why);
                continue;
            }
        }

        if (steps_.encap) {
            pkt::FrameBuffer& dst = (cur == &scratch_) ? buf : scratch_;
            std::memcpy(dst.data.data(), cur->data.data(), pkt::kEthHeaderLen);
            store_be16(dst.data.data() + 12, pkt::kEthertypeSecureL3);
            const std::size_t pkt_len = codec_.encap_l3(
                cur->bytes().subspan(pkt::kEthHeaderLen), kEgressSpi, seq,
                dst.data.data() + pkt::kEthHeaderLen);
            dst.length = static_cast<std::uint32_t>(pkt::kEthHeaderLen + pkt_len);
            if (&dst != &buf) {
                std::memcpy(buf.data.data(), dst.data.data(), dst.length);
                buf.length = dst.length;
            }
        } else {
            if (cur == &scratch_) {
                std::memcpy(buf.data.data(), scratch_.data.data(), scratch_.length);
                buf.length = scratch_.length;
            }
            buf.sec_seq = seq;
            buf.sec_spi = kEgressSpi;
        }

        buf.trust_tag = pkt::kUntrusted;
        out.emit(0, h);
    }
}

// --- LoadBalancer ---------------------------------------------------------------------

LoadBalancer::LoadBalancer(std::shared_ptr<const FlowTable> table, std::uint32_t n_backends,
                           std::shared_ptr<tee::Enclave> enclave)
    : table_(std::move(table)), n_backends_(n_backends), enclave_(std::move(enclave)) {}

void LoadBalancer::process_batch(std::span<const Handle> batch, BufferPool& pool,
                                 Outputs& out) {
    ++batches_;
    admitted_.clear();
    trusted_keys_.clear();
    untrusted_keys_.clear();

    const bool copy_mode =
        enclave_ && enclave_->buffer_mode() == tee::BufferMode::trusted_copy;
    std::vector<std::uint32_t>& key_buf = copy_mode ? trusted_keys_ : untrusted_keys_;

    for (Handle h : batch) {
        pkt::FrameBuffer& buf = pool[h];
        if (enclave_) buf.trust_tag = enclave_->id();
        if (buf.length < pkt::kEthHeaderLen + pkt::kIpv4HeaderLen) {
            out.drop(h, pkt::DropReason::too_short);
            continue;
        }
        key_buf.push_back(load_be32(buf.data.data() + 30));
        admitted_.push_back(h);
    }

    const std::size_t n = admitted_.size();
    if (n == 0) return;

    auto lookup_all = [&](const std::uint32_t* keys, std::uint8_t* results) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto backend = table_->lookup(keys[i]);
            if (backend)
                results[i] = *backend;
            else
                results[i] = n_backends_ ? backend_fallback(keys[i], n_backends_) : 0;
        }
    };

    const std::uint8_t* results;
    if (enclave_) {
        if (copy_mode) {
            enclave_->ocall(4 * n, 1 * n, [&] {
                untrusted_keys_.assign(trusted_keys_.begin(), trusted_keys_.end());
                untrusted_results_.resize(n);
                lookup_all(untrusted_keys_.data(), untrusted_results_.data());
                trusted_results_.assign(untrusted_results_.begin(), untrusted_results_.end());
            });
            results = trusted_results_.data();
        } else {
            enclave_->ocall(4 * n, 1 * n, [&] {
                untrusted_results_.resize(n);
                lookup_all(untrusted_keys_.data(), untrusted_results_.data());
            });
            results = untrusted_results_.data();
        }
    } else {
        untrusted_results_.resize(n);
        lookup_all(untrusted_keys_.data(), untrusted_results_.data());
        results = untrusted_results_.data();
    }

    for (std::size_t i = 0; i < n; ++i) {
        const Handle h = admitted_[i];
        pool[h].trust_tag = pkt::kUntrusted;
        out.emit(n_backends_ ? results[i] : 0, h);
    }
}

// --- BackendServer ---------------------------------------------------------------------

BackendServer::BackendServer(std::shared_ptr<const IpSet> members,
                             std::shared_ptr<tee::Enclave> enclave)
    : members_(std::move(members)), enclave_(std::move(enclave)) {}

void BackendServer::process_batch(std::span<const Handle> batch, BufferPool& pool,
                                  Outputs& out) {
    ++batches_;
    admitted_.clear();
    trusted_keys_.clear();
    untrusted_keys_.clear();

    const bool copy_mode =
        enclave_ && enclave_->buffer_mode() == tee::BufferMode::trusted_copy;
    std::vector<std::uint32_t>& key_buf = copy_mode ? trusted_keys_ : untrusted_keys_;

    for (Handle h : batch) {
        pkt::FrameBuffer& buf = pool[h];
        if (enclave_) buf.trust_tag = enclave_->id();
        if (buf.length < pkt::kEthHeaderLen + pkt::kIpv4HeaderLen) {
            out.drop(h, pkt::DropReason::too_short);
            continue;
        }
        key_buf.push_back(load_be32(buf.data.data() + 30));
        admitted_.push_back(h);
    }

    const std::size_t n = admitted_.size();
    if (n == 0) return;

    auto lookup_all = [&](const std::uint32_t* keys, std::uint32_t* results) {
        for (std::size_t i = 0; i < n; ++i) results[i] = members_->contains(keys[i]) ? 1 : 0;
    };

    const std::uint32_t* results;
    if (enclave_) {
        if (copy_mode) {
            enclave_->ocall(4 * n, 4 * n, [&] {
                untrusted_keys_.assign(trusted_keys_.begin(), trusted_keys_.end());
                untrusted_results_.resize(n);
                lookup_all(untrusted_keys_.data(), untrusted_results_.data());
                trusted_results_.assign(untrusted_results_.begin(), untrusted_results_.end());
            });
            results = trusted_results_.data();
        } else {
            enclave_->ocall(4 * n, 4 * n, [&] {
                untrusted_results_.resize(n);
                lookup_all(untrusted_keys_.data(), untrusted_results_.data());
            });
            results = untrusted_results_.data();
        }
    } else {
        untrusted_results_.resize(n);
        lookup_all(untrusted_keys_.data(), untrusted_results_.data());
        results = untrusted_results_.data();
    }

    for (std::size_t i = 0; i < n; ++i) {
        const Handle h = admitted_[i];
        pool[h].trust_tag = pkt::kUntrusted;
        if (results[i])
            out.emit(0, h);
        else
            out.drop(h, pkt::DropReason::filter_miss);
    }
}

}  // namespace tdp::nf
