#include <benchmark/benchmark.h>

#include <thread>
#include <vector>

#include "tdp/ring.hpp"

using namespace tdp;

static void bm_ring_spsc_batch(benchmark::State& state) {
    const std::size_t batch = static_cast<std::size_t>(state.range(0));
    Ring ring(1024, RingMode::spsc);
    std::vector<Handle> in(batch), out(batch);
    for (std::size_t i = 0; i < batch; ++i) in[i] = static_cast<Handle>(i);

    for (auto _ : state) {
        const std::size_t n = ring.enqueue_batch(in);
        benchmark::DoNotOptimize(ring.dequeue_batch(out.data(), n));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(bm_ring_spsc_batch)->Arg(1)->Arg(8)->Arg(32)->Arg(128);

static void bm_ring_spsc_threaded(benchmark::State& state) {
    constexpr std::size_t kBatch = 32;
    for (auto _ : state) {
        state.PauseTiming();
        Ring ring(1024, RingMode::spsc);
        constexpr std::uint64_t kCount = 1 << 20;
        state.ResumeTiming();

        std::thread producer([&] {
            std::vector<Handle> in(kBatch);
            std::uint64_t sent = 0;
            while (sent < kCount) {
                const std::size_t want =
                    std::min<std::uint64_t>(kBatch, kCount - sent);
                for (std::size_t i = 0; i < want; ++i)
                    in[i] = static_cast<Handle>(sent + i);
                sent += ring.enqueue_batch({in.data(), want});
            }
        });
        std::vector<Handle> out(kBatch);
        std::uint64_t got = 0;
        while (got < kCount) got += ring.dequeue_batch(out.data(), kBatch);
        producer.join();
        state.SetItemsProcessed(state.items_processed() + kCount);
    }
}
BENCHMARK(bm_ring_spsc_threaded)->Unit(benchmark::kMillisecond);
