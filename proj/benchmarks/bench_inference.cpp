// Unified drug-centric inference vs the pairwise re-encoding baseline.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ade/model.hpp"

using namespace ade;

namespace {

struct Fixture {
    Vocab vocab;
    TokenizedSentence ts;
    std::vector<ScoredMention> candidates;
    ModelConfig cfg;
    ParamSet unified, ner, re;

    Fixture(size_t m_drugs, size_t n_events) {
        vocab.word_to_id["<unk>"] = 0;
        vocab.id_to_word.push_back("<unk>");
        auto add_word = [&](const std::string& w) {
            if (!vocab.word_to_id.count(w)) {
                vocab.word_to_id[w] = static_cast<int>(vocab.id_to_word.size());
                vocab.id_to_word.push_back(w);
            }
        };

        Sentence s;
        s.doc_id = "bench";
        std::string text;
        for (size_t i = 0; i < m_drugs; ++i) {
            std::string name = "drug" + std::to_string(i);
            add_word(name);
            Mention mention;
            mention.start = text.size();
            text += name;
            mention.end = text.size();
            mention.surface = name;
            s.drug_mentions.push_back(mention);
            text += " ";
        }
        add_word("caused");
        text += "caused ";
        for (size_t i = 0; i < n_events; ++i) {
            std::string ev = "event" + std::to_string(i);
            add_word(ev);
            text += ev;
            text += i + 1 < n_events ? " " : ".";
        }
        s.text = text;
        ts = tokenize_sentence(s);

        for (const auto& tok : ts.tokens) {
            if (tok.text.rfind("event", 0) != 0) continue;
            ScoredMention sm;
            sm.mention = {tok.start, tok.end, s.text.substr(tok.start, tok.end - tok.start), {}};
            candidates.push_back(sm);
        }

        cfg.vocab_size = vocab.size();
        cfg.d_model = 64;
        cfg.n_layers = 2;
        cfg.n_heads = 4;
        cfg.d_ff = 128;
        cfg.max_seq_len = 128;
        cfg.seed = 1;
        unified = init_unified_params(cfg);
        ner = init_ner_params(cfg);
        re = init_re_params(cfg);
    }
};

void BM_UnifiedPredict(benchmark::State& state) {
    Fixture f(static_cast<size_t>(state.range(0)), static_cast<size_t>(state.range(1)));
    for (auto _ : state) {
        auto r = predict(f.ts, f.unified, f.cfg, f.vocab, 0.5);
        benchmark::DoNotOptimize(r);
    }
    state.counters["encoder_passes"] = 1;
}

void BM_PairwiseBaseline(benchmark::State& state) {
    Fixture f(static_cast<size_t>(state.range(0)), static_cast<size_t>(state.range(1)));
    auto ids = token_ids(f.ts, f.vocab);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ner_token_probs(ids, f.ner, f.cfg));
        auto r = pairwise_score_candidates(f.ts, f.candidates, f.re, f.cfg, f.vocab, 0.5);
        benchmark::DoNotOptimize(r);
    }
    state.counters["encoder_passes"] =
        static_cast<double>(1 + state.range(0) * state.range(1));
}

void grid(benchmark::internal::Benchmark* b) {
    for (int m : {1, 4, 8, 16})
        for (int n : {1, 4, 8, 16}) b->Args({m, n});
}

BENCHMARK(BM_UnifiedPredict)->Apply(grid)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PairwiseBaseline)->Apply(grid)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
