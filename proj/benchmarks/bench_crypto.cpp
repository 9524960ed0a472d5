#include <benchmark/benchmark.h>

#include <vector>

#include "tdp/crypto.hpp"
#include "tdp/pktcore.hpp"
#include "tdp/traffic.hpp"

using namespace tdp;

static void bm_aes_ctr(benchmark::State& state) {
    const std::size_t len = static_cast<std::size_t>(state.range(0));
    const crypto::Aes128 aes(crypto::derive_key(1, "bench"));
    std::vector<std::uint8_t> data(len, 0xa5);
    crypto::Block ctr{};
    for (auto _ : state) {
        crypto::ctr_crypt(aes, ctr, data);
        benchmark::DoNotOptimize(data.data());
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(len));
}
BENCHMARK(bm_aes_ctr)->Arg(64)->Arg(256)->Arg(1500);

static void bm_cmac(benchmark::State& state) {
    const std::size_t len = static_cast<std::size_t>(state.range(0));
    const crypto::Cmac cmac(crypto::derive_key(1, "bench"));
    std::vector<std::uint8_t> data(len, 0x5a);
    for (auto _ : state) benchmark::DoNotOptimize(cmac.compute(data));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(len));
}
BENCHMARK(bm_cmac)->Arg(64)->Arg(256)->Arg(1500);

// Full secure-frame path: decap, verify, re-ICV, re-encrypt.
static void bm_secure_l2_roundtrip(benchmark::State& state) {
    const std::uint32_t size = static_cast<std::uint32_t>(state.range(0));
    traffic::TrafficSpec spec;
    spec.layer = traffic::Layer::secure_l2;
    spec.frame_size = size;
    spec.address_cardinality = 1024;
    traffic::FrameFactory factory(spec);

    pkt::FrameBuffer frame;
    factory.fill(frame, 0);
    const pkt::SecureCodec codec(traffic::run_keys(spec.seed), true);
    std::array<std::uint8_t, pkt::FrameBuffer::kCapacity> plain;
    std::array<std::uint8_t, pkt::FrameBuffer::kCapacity> out;

    for (auto _ : state) {
        const auto r = codec.decap_l2(frame.bytes(), plain.data());
        benchmark::DoNotOptimize(
            codec.encap_l2({plain.data(), r.length}, 1, r.packet_number, out.data()));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_secure_l2_roundtrip)->Arg(64)->Arg(512)->Arg(1500);
