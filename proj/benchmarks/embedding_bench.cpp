#include "hfa/synthtest.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace hfa;

static std::vector<std::string> sentences(std::size_t n) {
    const char* words[] = {"midwife", "escalation", "review", "consultant", "trace", "monitoring", "guidance",
                           "delay", "labour", "ward", "plan", "risk", "booking", "handover", "team", "baby"};
    std::mt19937 rng(9);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s;
        for (int w = 0; w < 12; ++w) s += std::string(words[rng() % 16]) + " ";
        out.push_back(s);
    }
    return out;
}

static void BM_TrainEmbeddings(benchmark::State& state) {
    const auto corpus = sentences(static_cast<std::size_t>(state.range(0)));
    synthtest::EmbeddingConfig config;
    config.dimensions = 8;
    for (auto _ : state) benchmark::DoNotOptimize(synthtest::train_embeddings(corpus, config));
}
BENCHMARK(BM_TrainEmbeddings)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_ScorePairs(benchmark::State& state) {
    const auto corpus = sentences(400);
    const auto model = synthtest::train_embeddings(corpus);
    std::vector<synthtest::SentencePair> pairs;
    for (std::size_t i = 0; i + 1 < corpus.size(); ++i) pairs.push_back({corpus[i], corpus[i + 1]});
    for (auto _ : state) benchmark::DoNotOptimize(synthtest::score_pairs(model, pairs));
}
BENCHMARK(BM_ScorePairs);
