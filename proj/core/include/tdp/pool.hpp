// Fixed-size pool of frame buffers. Handles move through rings; buffers
// stay put. The free list is itself a ring (workers release, the
// generator acquires), and the outstanding count doubles as the
// dataplane's in-flight gauge for drain/quiesce decisions.
#pragma once

#include <atomic>
#include <vector>

#include "tdp/pktcore.hpp"
#include "tdp/ring.hpp"

namespace tdp {

class BufferPool {
public:
    explicit BufferPool(std::uint32_t count)
        : buffers_(count), free_(round_up_pow2(count), RingMode::mpsc) {
        for (std::uint32_t i = 0; i < count; ++i) free_.enqueue(i);
    }

    pkt::FrameBuffer& operator[](Handle h) { return buffers_[h]; }
    const pkt::FrameBuffer& operator[](Handle h) const { return buffers_[h]; }

    Handle try_acquire() {
        Handle h;
        if (!free_.dequeue(h)) return kInvalidHandle;
        outstanding_.fetch_add(1, std::memory_order_relaxed);
        return h;
    }

    void release(Handle h) {
        pkt::FrameBuffer& buf = buffers_[h];
        buf.length = 0;
        buf.trust_tag = pkt::kUntrusted;
        free_.enqueue(h);
        outstanding_.fetch_sub(1, std::memory_order_relaxed);
    }

    std::uint64_t outstanding() const { return outstanding_.load(std::memory_order_acquire); }
    std::uint32_t size() const { return static_cast<std::uint32_t>(buffers_.size()); }

private:
    static std::uint32_t round_up_pow2(std::uint32_t v) {
        std::uint32_t p = 2;
        while (p < v) p <<= 1;
        return p;
    }

    std::vector<pkt::FrameBuffer> buffers_;
    Ring free_;
    std::atomic<std::uint64_t> outstanding_{0};
};

}  // namespace tdp
