// Acceptance gate: one pass/fail line per criterion, exit 1 on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ade/corpus.hpp"
#include "ade/eval.hpp"
#include "ade/io.hpp"
#include "ade/lexicon.hpp"
#include "ade/model.hpp"
#include "ade/nn.hpp"
#include "ade/pipeline.hpp"
#include "ade/synth.hpp"
#include "ade/teacher.hpp"

using namespace ade;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail,
            double seconds) {
    std::printf("%s  criterion %d  %-28s %s  [%.1fs]\n", ok ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

// ---- shared fixtures --------------------------------------------------------

std::vector<LexiconEntry> lexicon() {
    static auto entries = load_lexicon_tsv(std::string(ADE_DATA_DIR) + "/sample_lexicon.tsv");
    return entries;
}

struct Dataset {
    std::vector<Sentence> sents;
    std::vector<AdeAnnotation> gold;
};

// generated documents run through the real curate path
Dataset make_dataset(size_t n_sentences, uint64_t seed) {
    SynthConfig sc;
    sc.n_drug_sentences = n_sentences;
    sc.seed = seed;
    auto corpus = synth_corpus(lexicon(), sc);
    auto trie = build_trie(lexicon());
    Dataset ds;
    for (const auto& doc : corpus.documents) {
        auto kept = filter_drug_sentences(split_sentences(doc), trie);
        ds.sents.insert(ds.sents.end(), kept.begin(), kept.end());
    }
    ds.gold = corpus.gold;
    return ds;
}

PipelineOptions default_pipe(uint64_t seed) {
    PipelineOptions opts;
    opts.model.d_model = 32;
    opts.model.n_layers = 2;
    opts.model.n_heads = 4;
    opts.model.d_ff = 64;
    opts.model.max_seq_len = 128;
    opts.model.seed = seed;
    opts.train.epochs = 30;
    opts.train.batch_size = 8;
    opts.train.lr = 2e-3;
    opts.train.seed = seed;
    opts.train.stop_at_dev_score = 0.97;
    opts.threshold = 0.5;
    opts.split_seed = seed;
    return opts;
}

// ---- criterion 1: gradient correctness --------------------------------------

void criterion_1() {
    Timer t;
    ModelConfig cfg;
    cfg.vocab_size = 19;
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.n_heads = 4;
    cfg.d_ff = 32;
    cfg.max_seq_len = 16;
    cfg.seed = 11;
    auto params = init_unified_params(cfg);

    TrainingExample ex;
    ex.ids = {3, 7, 1, 12, 5, 9, 2, 16};  // T = 8
    ex.drug_tokens = {0, 3};
    ex.labels = {0, 0, 1, 0, 1, 1, 0, 0};

    params.zero_grad();
    (void)example_loss(ex, params, cfg, true);
    auto loss_fn = [&]() { return example_loss(ex, params, cfg, false); };
    auto rep = grad_check(params, loss_fn, 400, 1e-5, 23);

    bool ok = rep.max_relative_error < 1e-4 && t.seconds() < 60;
    std::string detail = fmt("max rel err %.2e over %g coords", rep.max_relative_error,
                             static_cast<double>(rep.coordinates));
    if (!ok) detail += " worst=" + rep.worst_param;
    report(1, "gradient correctness", ok, detail, t.seconds());
}

// ---- criterion 2: architecture oracle equivalence ---------------------------

bool spans_match(size_t ps, size_t pe, size_t gs, size_t ge, MatchMode mode) {
    if (mode == MatchMode::Strict) return ps == gs && pe == ge;
    return ps < ge && gs < pe;
}

size_t oracle_group_tp(const std::vector<std::pair<size_t, size_t>>& preds,
                       std::vector<std::pair<size_t, size_t>> golds, MatchMode mode,
                       size_t pi = 0) {
    if (pi == preds.size()) return 0;
    size_t best = oracle_group_tp(preds, golds, mode, pi + 1);
    for (size_t gi = 0; gi < golds.size(); ++gi) {
        if (!spans_match(preds[pi].first, preds[pi].second, golds[gi].first,
                         golds[gi].second, mode))
            continue;
        auto rest = golds;
        rest.erase(rest.begin() + static_cast<long>(gi));
        best = std::max(best, 1 + oracle_group_tp(preds, rest, mode, pi + 1));
    }
    return best;
}

AdeAnnotation rand_ann(SplitMix& rng, size_t drug_slot,
                       std::vector<std::pair<size_t, size_t>> evs) {
    AdeAnnotation a;
    a.key = {"doc", 0};
    a.drug = {drug_slot * 10, drug_slot * 10 + 4, "drug", {}};
    for (auto [s, e] : evs) a.events.push_back({s, e, "ev", {}});
    (void)rng;
    return a;
}

void criterion_2() {
    Timer t;
    SplitMix rng(2024);
    size_t pool_fail = 0, head_fail = 0, score_fail = 0;

    for (int iter = 0; iter < 1000; ++iter) {
        // pool_drug vs scalar mean
        size_t t_len = 1 + rng.below(10), d = 1 + rng.below(12);
        Tensor H({t_len, d});
        for (size_t i = 0; i < H.numel(); ++i) H[i] = rng.unit() * 4 - 2;
        std::vector<size_t> idx;
        for (size_t i = 0, k = 1 + rng.below(t_len); i < k; ++i) idx.push_back(rng.below(t_len));
        auto pooled = pool_drug(H, idx);
        for (size_t j = 0; j < d; ++j) {
            double sum = 0;
            for (size_t i : idx) sum += H.at(i, j);
            if (std::abs(pooled[j] - sum / static_cast<double>(idx.size())) > 1e-12)
                ++pool_fail;
        }

        // head_forward vs scalar loop
        Tensor dbar({d}), W({2 * d});
        for (size_t i = 0; i < d; ++i) dbar[i] = rng.unit() * 2 - 1;
        for (size_t i = 0; i < 2 * d; ++i) W[i] = rng.unit() * 2 - 1;
        double b = rng.unit() - 0.5;
        auto p = head_forward(H, dbar, W, b);
        for (size_t i = 0; i < t_len; ++i) {
            double z = b;
            for (size_t j = 0; j < d; ++j) z += W[j] * H.at(i, j) + W[d + j] * dbar[j];
            if (std::abs(p[i] - 1.0 / (1.0 + std::exp(-z))) > 1e-12) ++head_fail;
        }

        // scorer vs exhaustive max matching
        auto rand_set = [&](bool dups) {
            std::vector<AdeAnnotation> out;
            size_t n_groups = 1 + rng.below(3);
            for (size_t g = 0; g < n_groups; ++g) {
                std::vector<std::pair<size_t, size_t>> evs;
                for (size_t i = 0, n = rng.below(6); i < n; ++i) {
                    size_t s = rng.below(40), e = s + 1 + rng.below(10);
                    evs.push_back({s, e});
                    if (dups && rng.below(4) == 0) evs.push_back({s, e});
                }
                if (!evs.empty()) out.push_back(rand_ann(rng, rng.below(3), evs));
            }
            return out;
        };
        auto preds = rand_set(false);
        auto golds = rand_set(true);
        for (auto mode : {MatchMode::Strict, MatchMode::Lenient}) {
            auto got = score(preds, golds, mode);
            // oracle over merged groups
            using Group = std::tuple<size_t, size_t>;
            std::map<Group, std::vector<std::pair<size_t, size_t>>> pg;
            std::map<Group, std::set<std::pair<size_t, size_t>>> gg;
            for (const auto& a : preds)
                for (const auto& e : a.events) pg[{a.drug.start, a.drug.end}].push_back({e.start, e.end});
            for (const auto& a : golds)
                for (const auto& e : a.events) gg[{a.drug.start, a.drug.end}].insert({e.start, e.end});
            size_t tp = 0, fp = 0, fn = 0;
            std::set<Group> all;
            for (const auto& [g, _] : pg) all.insert(g);
            for (const auto& [g, _] : gg) all.insert(g);
            for (const auto& g : all) {
                auto pv = pg.count(g) ? pg[g] : std::vector<std::pair<size_t, size_t>>{};
                std::vector<std::pair<size_t, size_t>> gv;
                if (gg.count(g)) gv.assign(gg[g].begin(), gg[g].end());
                size_t gtp = oracle_group_tp(pv, gv, mode);
                tp += gtp;
                fp += pv.size() - gtp;
                fn += gv.size() - gtp;
            }
            if (got.tp != tp || got.fp != fp || got.fn != fn) ++score_fail;
        }
    }

    bool ok = pool_fail == 0 && head_fail == 0 && score_fail == 0 && t.seconds() < 120;
    report(2, "architecture oracles", ok,
           fmt("1000 cases: pool/head/scorer mismatches %g/%g/%g",
               static_cast<double>(pool_fail), static_cast<double>(head_fail),
               static_cast<double>(score_fail)),
           t.seconds());
}

// ---- criterion 3: supervised learnability -----------------------------------

void criterion_3() {
    Timer t;
    auto ds = make_dataset(2500, 1);  // 8:1:1 -> 2000/250/250
    auto opts = default_pipe(1);
    auto result = train_and_eval(ds.sents, ds.gold, ds.gold, opts);
    bool ok = result.test_lenient.f1 >= 0.95 && t.seconds() < 300 &&
              result.split.train.size() == 2000 && result.split.dev.size() == 250;
    report(3, "supervised learnability", ok,
           fmt("test lenient F1 %.4f (best epoch %g)", result.test_lenient.f1,
               static_cast<double>(result.best_epoch + 1)),
           t.seconds());
}

// ---- criterion 4: distillation beats its noisy teacher -----------------------

void criterion_4() {
    Timer t;
    std::vector<double> student, teacher;
    for (uint64_t seed : {1, 2, 3}) {
        auto ds = make_dataset(5000, seed);
        NoiseConfig noise{0.10, 0.05, 0.10, seed};
        MockTeacherClient client(ds.sents, ds.gold, noise);

        DistillOptions opts;
        opts.annotate.cache_dir = "";  // in-memory run, no disk cache
        opts.annotate.max_parallel = 4;
        opts.pool_size = 40000;
        opts.pool_seed = seed;
        opts.pipe = default_pipe(seed);
        opts.pipe.train.epochs = 10;
        opts.pipe.train.stop_at_dev_score = -1.0;  // dev vs noisy labels saturates low

        auto rep = distill_run(ds.sents, ds.gold, client, opts);
        student.push_back(rep.student.test_lenient.f1);
        teacher.push_back(rep.teacher_test_lenient.f1);
    }
    double s_mean = (student[0] + student[1] + student[2]) / 3;
    double t_mean = (teacher[0] + teacher[1] + teacher[2]) / 3;
    double s_min = std::min({student[0], student[1], student[2]});

    bool ok = s_mean > t_mean && s_min >= t_mean - 0.005 && t.seconds() < 900;
    report(4, "distillation beats teacher", ok,
           fmt("student mean %.4f vs teacher mean %.4f (student min %.4f)", s_mean,
               t_mean, s_min),
           t.seconds());
}

// ---- criterion 5: complexity reduction ---------------------------------------

void criterion_5() {
    Timer t;
    const std::vector<size_t> sweep = {1, 2, 4, 8, 16};

    Vocab vocab;
    vocab.word_to_id["<unk>"] = 0;
    vocab.id_to_word.push_back("<unk>");
    auto add_word = [&](const std::string& w) {
        if (!vocab.word_to_id.count(w)) {
            vocab.word_to_id[w] = static_cast<int>(vocab.id_to_word.size());
            vocab.id_to_word.push_back(w);
        }
    };
    auto make_sentence = [&](size_t m, size_t n) {
        Sentence s;
        s.doc_id = "bench";
        s.sent_index = 0;
        std::string text;
        for (size_t i = 0; i < m; ++i) {
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
        for (size_t i = 0; i < n; ++i) {
            std::string ev = "event" + std::to_string(i);
            add_word(ev);
            text += ev;
            text += i + 1 < n ? " " : ".";
        }
        s.text = text;
        return s;
    };

    bool counts_ok = true;
    double uni_us = 0, base_us = 0;
    for (size_t m : sweep) {
        for (size_t n : sweep) {
            auto s = make_sentence(m, n);
            auto ts = tokenize_sentence(s);
            ModelConfig cfg;
            cfg.vocab_size = vocab.size();
            cfg.d_model = 32;
            cfg.n_layers = 2;
            cfg.n_heads = 4;
            cfg.d_ff = 64;
            cfg.max_seq_len = 128;
            cfg.seed = 1;
            auto uni = init_unified_params(cfg);
            auto ner = init_ner_params(cfg);
            auto re = init_re_params(cfg);

            std::vector<ScoredMention> candidates;
            for (const auto& tok : ts.tokens) {
                if (tok.text.rfind("event", 0) != 0) continue;
                ScoredMention sm;
                sm.mention = {tok.start, tok.end,
                              s.text.substr(tok.start, tok.end - tok.start), {}};
                candidates.push_back(sm);
            }

            const int reps = (m == 8 && n == 8) ? 10 : 1;
            Timer ut;
            PredictResult up;
            for (int r = 0; r < reps; ++r) up = predict(ts, uni, cfg, vocab, 0.5);
            double u_el = ut.seconds() / reps * 1e6;
            Timer bt;
            PredictResult bp;
            for (int r = 0; r < reps; ++r) {
                (void)ner_token_probs(token_ids(ts, vocab), ner, cfg);
                bp = pairwise_score_candidates(ts, candidates, re, cfg, vocab, 0.5);
                ++bp.report.encoder_passes;
            }
            double b_el = bt.seconds() / reps * 1e6;
            if (m == 8 && n == 8) {
                uni_us = u_el;
                base_us = b_el;
            }

            if (candidates.size() != n || up.report.encoder_passes != 1 ||
                up.report.head_passes != m || up.report.m_drugs != m ||
                bp.report.pairwise_units != n * m ||
                bp.report.encoder_passes != 1 + n * m)
                counts_ok = false;
        }
    }
    double speedup = uni_us > 0 ? base_us / uni_us : 0;
    bool ok = counts_ok && speedup >= 1.5;
    report(5, "complexity reduction", ok,
           fmt("counts exact=%g; M=N=8 speedup %.1fx (floor 1.5x)",
               counts_ok ? 1.0 : 0.0, speedup),
           t.seconds());
}

// ---- criterion 6: split/protocol fidelity ------------------------------------

void criterion_6() {
    Timer t;
    auto s1 = split_8_1_1(4272, 1);
    auto s2 = split_8_1_1(4272, 1);
    bool split_ok = s1.train.size() == 3417 && s1.dev.size() == 427 &&
                    s1.test.size() == 428 && s1.train == s2.train && s1.dev == s2.dev &&
                    s1.test == s2.test;

    auto f1 = kfold(4272, 10, 1);
    auto f2 = kfold(4272, 10, 1);
    size_t of428 = 0, of427 = 0;
    bool deterministic = f1.size() == f2.size();
    for (size_t i = 0; i < f1.size(); ++i) {
        if (f1[i].test.size() == 428) ++of428;
        if (f1[i].test.size() == 427) ++of427;
        deterministic = deterministic && f1[i].test == f2[i].test;
    }
    bool fold_ok = f1.size() == 10 && of428 == 2 && of427 == 8 && deterministic;

    report(6, "split/protocol fidelity", split_ok && fold_ok,
           fmt("8:1:1 -> %g/%g/%g; folds 428x2+427x8", 3417, 427, 428), t.seconds());
}

// ---- criterion 7: prompt byte-exactness ---------------------------------------

void criterion_7() {
    Timer t;
    const std::string sentence =
        "Treatment with cisplatin was complicated by acute renal failure.";
    auto zero = build_prompt(sentence, PromptMode::ZeroShot);
    auto few = build_prompt(sentence, PromptMode::FewShot5);
    auto zero_golden = read_file(std::string(ADE_DATA_DIR) + "/prompts/zero_shot.golden.txt");
    auto few_golden = read_file(std::string(ADE_DATA_DIR) + "/prompts/few_shot.golden.txt");
    bool ok = zero == zero_golden && few == few_golden;
    report(7, "prompt byte-exactness", ok,
           fmt("zero %g/%g bytes match", static_cast<double>(zero == zero_golden ? zero.size() : 0),
               static_cast<double>(few == few_golden ? few.size() : 0)),
           t.seconds());
}

// ---- criterion 8: invariant suites --------------------------------------------

size_t oracle_match_at(const std::string& text, size_t pos, const std::string& s) {
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    size_t j = pos;
    for (size_t si = 0; si < s.size(); ++si) {
        if (j >= text.size()) return 0;
        if (s[si] == ' ') {
            if (!space(text[j])) return 0;
            while (j < text.size() && space(text[j])) ++j;
        } else {
            if (std::tolower(static_cast<unsigned char>(text[j])) != s[si]) return 0;
            ++j;
        }
    }
    if (j < text.size() && alnum(text[j])) return 0;
    return j;
}

void criterion_8() {
    Timer t;
    SplitMix rng(808);
    size_t fails = 0;
    std::map<std::string, size_t> family;
    auto note = [&](const char* name, size_t n) {
        fails += n;
        family[name] += n;
    };

    // trie vs brute-force oracle, 1000 cases
    static const std::vector<std::string> stems = {"a",  "ab", "abc", "ba", "bc",
                                                   "cab", "ca", "c",  "bcb", "aa"};
    static const std::string alphabet = "abcABC  .,-x";
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<LexiconEntry> entries;
        for (size_t i = 0, n = 1 + rng.below(8); i < n; ++i) {
            LexiconEntry e;
            e.concept_id = "C" + std::to_string(100 + i);
            e.preferred_name = stems[rng.below(stems.size())];
            if (rng.below(2)) e.preferred_name += " " + stems[rng.below(stems.size())];
            entries.push_back(e);
        }
        std::string text;
        for (size_t i = 0, n = rng.below(60); i < n; ++i)
            text += alphabet[rng.below(alphabet.size())];

        auto got = build_trie(entries).find_mentions(text);

        std::vector<std::pair<std::string, std::string>> surfaces;
        for (const auto& e : entries)
            surfaces.push_back({normalize_surface(e.preferred_name), e.concept_id});
        std::sort(surfaces.begin(), surfaces.end());
        std::vector<Mention> want;
        size_t pos = 0;
        auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
        auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
        while (pos < text.size()) {
            bool boundary = pos == 0 || !alnum(text[pos - 1]);
            if (!boundary || space(text[pos])) {
                ++pos;
                continue;
            }
            size_t best_end = 0;
            std::string best_id;
            for (const auto& [s, id] : surfaces) {
                size_t end = oracle_match_at(text, pos, s);
                if (end > best_end) {
                    best_end = end;
                    best_id = id;
                }
            }
            if (best_end > 0) {
                want.push_back({pos, best_end, text.substr(pos, best_end - pos), best_id});
                pos = best_end;
            } else {
                ++pos;
            }
        }
        if (got.size() != want.size()) {
            note("trie", 1);
            continue;
        }
        for (size_t i = 0; i < got.size(); ++i)
            if (got[i].start != want[i].start || got[i].end != want[i].end ||
                got[i].concept_id != want[i].concept_id)
                note("trie", 1);
    }

    // parse/format identity, 1000 cases
    static const std::vector<std::string> words = {"nausea", "rash", "fever", "pain",
                                                   "edema",  "cough"};
    for (int iter = 0; iter < 1000; ++iter) {
        ParsedMap m;
        for (size_t i = 0, n = rng.below(4); i < n; ++i) {
            std::vector<std::string> evs;
            for (size_t j = 0, k = 1 + rng.below(3); j < k; ++j) {
                std::string ev = words[rng.below(words.size())] +
                                 (rng.below(2) ? " " + words[rng.below(words.size())] : "");
                // well-formed maps carry no duplicate events per drug
                if (std::find(evs.begin(), evs.end(), ev) == evs.end()) evs.push_back(ev);
            }
            m["drug" + std::to_string(rng.below(5))] = evs;
        }
        auto round = parse_response(render_response(m));
        if (round.entries != m || round.malformed_lines != 0) note("parse", 1);
    }

    // decode inverse on binary labels, 1000 cases
    for (int iter = 0; iter < 1000; ++iter) {
        size_t n = 1 + rng.below(12);
        std::string text;
        std::vector<Token> toks;
        for (size_t i = 0; i < n; ++i) {
            if (i) text += " ";
            Token tok;
            tok.start = text.size();
            text += "w" + std::to_string(i);
            tok.end = text.size();
            toks.push_back(tok);
        }
        Tensor labels({n});
        for (size_t i = 0; i < n; ++i) labels[i] = rng.below(2) ? 1.0 : 0.0;
        auto spans = decode_spans(labels, 0.5, toks, text);
        std::vector<double> round(n, 0.0);
        for (const auto& sm : spans)
            for (size_t i = 0; i < n; ++i)
                if (toks[i].start < sm.mention.end && sm.mention.start < toks[i].end)
                    round[i] = 1.0;
        for (size_t i = 0; i < n; ++i)
            if (round[i] != labels[i]) note("decode", 1);
    }

    // strict <= lenient and grounding conservation, 1000 cases each
    for (int iter = 0; iter < 1000; ++iter) {
        auto rand_set = [&](bool dups) {
            std::vector<AdeAnnotation> out;
            for (size_t g = 0, n = 1 + rng.below(3); g < n; ++g) {
                std::vector<std::pair<size_t, size_t>> evs;
                for (size_t i = 0, k = rng.below(6); i < k; ++i) {
                    size_t s = rng.below(40), e = s + 1 + rng.below(10);
                    evs.push_back({s, e});
                    if (dups && rng.below(4) == 0) evs.push_back({s, e});
                }
                if (!evs.empty()) out.push_back(rand_ann(rng, rng.below(3), evs));
            }
            return out;
        };
        auto preds = rand_set(false);
        auto golds = rand_set(true);
        auto strict = score(preds, golds, MatchMode::Strict);
        auto lenient = score(preds, golds, MatchMode::Lenient);
        if (strict.tp > lenient.tp || strict.f1 > lenient.f1 + 1e-15) note("strict<=lenient", 1);
    }
    {
        auto entries = lexicon();
        auto trie = build_trie(entries);
        for (int iter = 0; iter < 1000; ++iter) {
            std::string text = "cisplatin and heparin gave";
            for (size_t i = 0, n = 1 + rng.below(4); i < n; ++i)
                text += " " + words[rng.below(words.size())];
            text += ".";
            Sentence s;
            s.doc_id = "d";
            s.sent_index = 0;
            s.text = text;
            s.drug_mentions = trie.find_mentions(text);
            ParsedMap parsed;
            for (size_t i = 0, n = rng.below(3); i < n; ++i) {
                std::vector<std::string> evs;
                for (size_t j = 0, k = 1 + rng.below(3); j < k; ++j)
                    evs.push_back(words[rng.below(words.size())]);
                parsed[rng.below(2) ? "cisplatin" : "unknowndrug"] = evs;
            }
            auto g = ground_spans(s, parsed);
            size_t total = 0;
            for (const auto& [d, evs] : parsed) total += evs.size();
            if (g.stats.grounded_events + g.stats.hallucinations != total)
                note("conservation", 1);
            if (g.stats.grounded_drugs + g.stats.ungrounded_drugs != parsed.size())
                note("conservation", 1);
        }
    }

    // cache idempotence on a real annotate round
    {
        auto ds = make_dataset(60, 51);
        NoiseConfig noise{0.1, 0.05, 0.1, 51};
        MockTeacherClient client(ds.sents, ds.gold, noise);
        auto dir = fs::temp_directory_path() / "ade_acc_cache";
        fs::remove_all(dir);
        fs::create_directories(dir);
        AnnotateOptions opts;
        opts.cache_dir = dir.string();
        auto first = annotate(ds.sents, client, opts);
        auto second = annotate(ds.sents, client, opts);
        if (second.client_calls != 0 || first.responses.size() != second.responses.size())
            note("cache", 1);
        for (size_t i = 0; i < first.responses.size() && i < second.responses.size(); ++i)
            if (first.responses[i].raw != second.responses[i].raw) note("cache", 1);
        fs::remove_all(dir);
    }

    bool ok = fails == 0 && t.seconds() < 300;
    std::string detail = fmt("6 property families, %g failures", static_cast<double>(fails));
    for (const auto& [name, n] : family)
        detail += " " + name + "=" + std::to_string(n);
    report(8, "invariant suites", ok, detail, t.seconds());
}

// ---- criterion 9: learning-curve shape ----------------------------------------

void criterion_9() {
    Timer t;
    auto ds = make_dataset(2500, 1);
    const std::vector<size_t> sizes = {100, 500, 2000};

    std::map<SentenceKey, std::vector<AdeAnnotation>> gold_by_key;
    for (const auto& a : ds.gold) gold_by_key[a.key].push_back(a);

    // mean test F1 per size over 3 seeds, each seed with nested subsets
    std::vector<double> mean_f1(sizes.size(), 0.0);
    for (uint64_t seed : {1, 2, 3}) {
        auto opts = default_pipe(seed);
        auto split = split_8_1_1(ds.sents.size(), seed);

        std::vector<Sentence> test_sents;
        for (size_t i : split.test) test_sents.push_back(ds.sents[i]);
        auto gold_test = filter_annotations(ds.gold, keys_of(test_sents));

        auto points = learning_curve(
            split.train.size(), sizes, seed, [&](const std::vector<size_t>& subset) {
                std::vector<TokenizedSentence> tss;
                for (size_t i : subset)
                    tss.push_back(tokenize_sentence(ds.sents[split.train[i]]));
                Vocab vocab = build_vocab(tss);

                std::vector<TrainingExample> exs;
                for (const auto& ts : tss) {
                    auto it = gold_by_key.find(ts.key);
                    static const std::vector<AdeAnnotation> none;
                    auto batch = make_examples(ts, it == gold_by_key.end() ? none : it->second,
                                               vocab);
                    exs.insert(exs.end(), batch.begin(), batch.end());
                }

                ModelConfig cfg = opts.model;
                cfg.vocab_size = vocab.size();
                TrainOptions topts = opts.train;
                topts.epochs = 8;
                topts.stop_at_dev_score = -1.0;
                auto trained = train(exs, cfg, topts);

                auto preds = predict_annotations(test_sents, trained.params, vocab, cfg,
                                                 opts.threshold);
                return score(preds, gold_test, MatchMode::Lenient).f1;
            });
        for (size_t i = 0; i < sizes.size(); ++i) mean_f1[i] += points[i].f1 / 3.0;
    }

    bool ok = true;
    for (size_t i = 1; i < mean_f1.size(); ++i)
        if (mean_f1[i] + 0.01 < mean_f1[i - 1]) ok = false;
    ok = ok && t.seconds() < 900;
    report(9, "learning-curve shape", ok,
           fmt("mean F1 at 100/500/2000: %.3f/%.3f/%.3f", mean_f1[0], mean_f1[1],
               mean_f1[2]),
           t.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto want = [&](int n) { return only.empty() || only.count(n); };
    if (want(1)) criterion_1();
    if (want(2)) criterion_2();
    if (want(3)) criterion_3();
    if (want(4)) criterion_4();
    if (want(5)) criterion_5();
    if (want(6)) criterion_6();
    if (want(7)) criterion_7();
    if (want(8)) criterion_8();
    if (want(9)) criterion_9();
    if (g_failures) {
        std::printf("ACCEPTANCE: %d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("ACCEPTANCE: all 9 criteria passed\n");
    return 0;
}
