#include <benchmark/benchmark.h>

#include "stylerl/common.hpp"
#include "stylerl/mat.hpp"
#include "stylerl/model.hpp"

namespace {

void BM_Matmul(benchmark::State& state) {
    const int n = int(state.range(0));
    stylerl::Rng rng(1);
    stylerl::Mat a(n, n), b(n, n), c(n, n);
    for (auto& x : a.a) x = rng.normal(0, 1);
    for (auto& x : b.a) x = rng.normal(0, 1);
    for (auto _ : state) {
        stylerl::matmul(a, b, c);
        benchmark::DoNotOptimize(c.a.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * int64_t(n) * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128);

void BM_DecoderForward(benchmark::State& state) {
    const int T = int(state.range(0));
    stylerl::SequenceModel m(stylerl::decoder_config(200, 64, 2, 2, 64), 7);
    std::vector<int> ids;
    for (int t = 0; t < T; ++t) ids.push_back(5 + (t * 13) % 190);
    for (auto _ : state) {
        auto logits = m.forward_logits(ids);
        benchmark::DoNotOptimize(logits.a.data());
    }
}
BENCHMARK(BM_DecoderForward)->Arg(8)->Arg(24)->Arg(48);

void BM_SessionToken(benchmark::State& state) {
    stylerl::SequenceModel m(stylerl::decoder_config(200, 64, 2, 2, 64), 7);
    stylerl::DecoderSession warm(m);
    for (auto _ : state) {
        state.PauseTiming();
        stylerl::DecoderSession sess(m);
        for (int t = 0; t < 23; ++t) sess.push(5 + t);
        state.ResumeTiming();
        sess.push(60);
        benchmark::DoNotOptimize(sess.logits().data());
    }
}
BENCHMARK(BM_SessionToken);

}  // namespace

BENCHMARK_MAIN();
