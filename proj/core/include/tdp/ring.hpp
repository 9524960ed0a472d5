// Bounded lock-free FIFO ring of buffer handles with batch operations,
// the software stand-in for Rx/Tx NIC rings. One slot-sequence (Vyukov
// style) implementation backs all declared producer/consumer modes; the
// declared cardinality is checked in debug builds.
#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <thread>

namespace tdp {

using Handle = std::uint32_t;
inline constexpr Handle kInvalidHandle = 0xffffffffu;

enum class RingMode : std::uint8_t {
    spsc,  // single producer, single consumer
    mpsc,  // many producers, one consumer
    spmc,  // one producer, many consumers
};

class Ring {
public:
    Ring(std::uint32_t capacity, RingMode mode) : mode_(mode), mask_(capacity - 1) {
        if (capacity < 2 || (capacity & (capacity - 1)) != 0)
            throw std::invalid_argument("Ring: capacity must be a power of two >= 2");
        cells_ = std::make_unique<Cell[]>(capacity);
        for (std::uint32_t i = 0; i < capacity; ++i)
            cells_[i].seq.store(i, std::memory_order_relaxed);
    }

    Ring(const Ring&) = delete;
    Ring& operator=(const Ring&) = delete;

    std::uint32_t capacity() const { return static_cast<std::uint32_t>(mask_ + 1); }
    RingMode mode() const { return mode_; }

    // Enqueues a prefix of `handles` limited by free space; returns how many
    // were accepted. Rejected handles remain owned by the caller.
    std::size_t enqueue_batch(std::span<const Handle> handles) {
        check_producer();
        std::size_t n = 0;
        while (n < handles.size() && try_enqueue(handles[n])) ++n;
        return n;
    }

    bool enqueue(Handle h) {
        check_producer();
        return try_enqueue(h);
    }

    // Dequeues up to `max` handles in FIFO order; returns the count.
    std::size_t dequeue_batch(Handle* out, std::size_t max) {
        check_consumer();
        std::size_t n = 0;
        while (n < max && try_dequeue(out[n])) ++n;
        return n;
    }

    bool dequeue(Handle& out) {
        check_consumer();
        return try_dequeue(out);
    }

    // Approximate; exact only when producers and consumers are quiescent.
    std::size_t occupancy() const {
        const std::uint64_t tail = enqueue_pos_.load(std::memory_order_acquire);
        const std::uint64_t head = dequeue_pos_.load(std::memory_order_acquire);
        return tail >= head ? static_cast<std::size_t>(tail - head) : 0;
    }

    bool empty() const { return occupancy() == 0; }

private:
    struct Cell {
        std::atomic<std::uint64_t> seq;
        Handle value;
    };

    bool try_enqueue(Handle h) {
        Cell* cell;
        std::uint64_t pos = enqueue_pos_.load(std::memory_order_relaxed);
        for (;;) {
            cell = &cells_[pos & mask_];
            const std::uint64_t seq = cell->seq.load(std::memory_order_acquire);
            const std::intptr_t dif =
                static_cast<std::intptr_t>(seq) - static_cast<std::intptr_t>(pos);
            if (dif == 0) {
                if (enqueue_pos_.compare_exchange_weak(pos, pos + 1,
                                                       std::memory_order_relaxed))
                    break;
            } else if (dif < 0) {
                return false;  // full
            } else {
                pos = enqueue_pos_.load(std::memory_order_relaxed);
            }
        }
        cell->value = h;
        cell->seq.store(pos + 1, std::memory_order_release);
        return true;
    }

    bool try_dequeue(Handle& out) {
        Cell* cell;
        std::uint64_t pos = dequeue_pos_.load(std::memory_order_relaxed);
        for (;;) {
            cell = &cells_[pos & mask_];
            const std::uint64_t seq = cell->seq.load(std::memory_order_acquire);
            const std::intptr_t dif =
                static_cast<std::intptr_t>(seq) - static_cast<std::intptr_t>(pos + 1);
            if (dif == 0) {
                if (dequeue_pos_.compare_exchange_weak(pos, pos + 1,
                                                       std::memory_order_relaxed))
                    break;
            } else if (dif < 0) {
                return false;  // empty
            } else {
                pos = dequeue_pos_.load(std::memory_order_relaxed);
            }
        }
        out = cell->value;
        cell->seq.store(pos + mask_ + 1, std::memory_order_release);
        return true;
    }

#ifndef NDEBUG
    static std::uint64_t thread_token() {
        return std::hash<std::thread::id>{}(std::this_thread::get_id()) | 1;
    }

    // Violating the declared mode is a programming error; detect the second
    // distinct thread on a single-cardinality side.
    void check_producer() {
        if (mode_ == RingMode::mpsc) return;
        const std::uint64_t me = thread_token();
        std::uint64_t expected = 0;
        if (!producer_tid_.compare_exchange_strong(expected, me, std::memory_order_relaxed))
            assert(expected == me && "Ring: second producer on a single-producer ring");
    }

    void check_consumer() {
        if (mode_ == RingMode::spmc) return;
        const std::uint64_t me = thread_token();
        std::uint64_t expected = 0;
        if (!consumer_tid_.compare_exchange_strong(expected, me, std::memory_order_relaxed))
            assert(expected == me && "Ring: second consumer on a single-consumer ring");
    }
#else
    void check_producer() {}
    void check_consumer() {}
#endif

    RingMode mode_;
    std::uint64_t mask_;
    std::unique_ptr<Cell[]> cells_;
    alignas(64) std::atomic<std::uint64_t> enqueue_pos_{0};
    alignas(64) std::atomic<std::uint64_t> dequeue_pos_{0};
#ifndef NDEBUG
    std::atomic<std::uint64_t> producer_tid_{0};
    std::atomic<std::uint64_t> consumer_tid_{0};
#endif
};

}  // namespace tdp
