// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "spacehsm/accumulator.hpp"
#include "spacehsm/ax25.hpp"
#include "spacehsm/engine.hpp"
#include "spacehsm/hash.hpp"
#include "spacehsm/hsm.hpp"
#include "spacehsm/ratchet.hpp"
#include "spacehsm/scenario.hpp"

namespace {

using namespace spacehsm;

Bytes patterned(size_t n) {
    Bytes out(n);
    for (size_t i = 0; i < n; ++i) out[i] = static_cast<uint8_t>(i * 37 + 11);
    return out;
}

void BM_Sha256(benchmark::State& state) {
    Bytes data = patterned(static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        Digest d = sha256(BytesView(data.data(), data.size()));
        benchmark::DoNotOptimize(d);
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            state.range(0));
}
BENCHMARK(BM_Sha256)->Arg(64)->Arg(2588);

void BM_AccumulatorAppend(benchmark::State& state) {
    Bytes leaf = patterned(330);
    for (auto _ : state) {
        state.PauseTiming();
        MerkleLog log;
        state.ResumeTiming();
        for (int64_t i = 0; i < state.range(0); ++i) log.append(leaf);
        benchmark::DoNotOptimize(log.root());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AccumulatorAppend)->Arg(64)->Arg(1024);

void BM_InclusionProof(benchmark::State& state) {
    MerkleLog log;
    Bytes leaf = patterned(330);
    for (int64_t i = 0; i < state.range(0); ++i) log.append(leaf);
    uint64_t index = 0;
    for (auto _ : state) {
        InclusionProof proof = log.prove_inclusion(index % log.size());
        benchmark::DoNotOptimize(proof);
        ++index;
    }
}
BENCHMARK(BM_InclusionProof)->Arg(1024);

void BM_Fragment(benchmark::State& state) {
    Bytes payload = patterned(static_cast<size_t>(state.range(0)));
    Callsign dest{"SPHSM1", 0};
    Callsign src{"GND1", 0};
    for (auto _ : state) {
        auto frames = fragment(dest, src, 1, MessageKind::Request,
                               BytesView(payload.data(), payload.size()));
        benchmark::DoNotOptimize(frames);
    }
}
BENCHMARK(BM_Fragment)->Arg(2588);

void BM_SignCertificate(benchmark::State& state) {
    Bytes seed = {0x01};
    Digest entropy = sha256(BytesView(seed.data(), seed.size()));
    auto boot = Hsm::bootstrap(
        BytesView(entropy.bytes.data(), entropy.bytes.size()),
        PrgState::from_seed(sha256(BytesView())), HsmConfig{});
    Hsm& hsm = boot.first;
    CsrMessage csr;
    csr.subject = patterned(48);
    uint32_t n = 0;
    for (auto _ : state) {
        csr.request_id[0] = static_cast<uint8_t>(n);
        csr.request_id[1] = static_cast<uint8_t>(n >> 8);
        csr.request_id[2] = static_cast<uint8_t>(n >> 16);
        csr.timestamp_us = n++;
        SignResult r = hsm.sign_certificate(csr);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_SignCertificate);

void BM_Scenario(benchmark::State& state) {
    ScenarioConfig config;
    config.duration_us = uint64_t{5400} * kMicrosPerSecond;
    for (int i = 0; i < 5; ++i) {
        WorkloadRequest r;
        r.id = "r" + std::to_string(i);
        config.workload.push_back(r);
    }
    for (auto _ : state) {
        RunResult result = run_scenario(config);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(BM_Scenario)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
