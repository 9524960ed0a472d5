#include <benchmark/benchmark.h>

#include "tdp/nf.hpp"
#include "tdp/traffic.hpp"

using namespace tdp;

static void bm_mac_table_lookup(benchmark::State& state) {
    const std::uint32_t entries = static_cast<std::uint32_t>(state.range(0));
    nf::MacTable table(std::max(entries, 1u << 20));
    for (std::uint32_t i = 0; i < entries; ++i)
        table.insert(traffic::dst_mac_at(i, entries), 1);

    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(table.lookup(traffic::dst_mac_at(i++, entries)));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_mac_table_lookup)->Arg(1 << 10)->Arg(1 << 20);

static void bm_lpm_lookup(benchmark::State& state) {
    nf::LpmTable table;
    table.insert(0x0a000000, 8, {1, {}});
    for (std::uint32_t b = 0; b < 16; ++b) table.insert(0x0a000000 + (b << 16), 16, {1, {}});

    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(table.lookup(traffic::dst_ip_at(i++, 1'000'000)));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_lpm_lookup);

static void bm_flow_table_lookup(benchmark::State& state) {
    const std::uint32_t entries = 1'000'000;
    nf::FlowTable table(entries);
    for (std::uint32_t i = 0; i < entries; ++i)
        table.insert(traffic::dst_ip_at(i, entries), static_cast<std::uint8_t>(i % 5));

    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(table.lookup(traffic::dst_ip_at(i++, entries)));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_flow_table_lookup);
