#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ade/config.hpp"
#include "ade/corpus.hpp"
#include "ade/eval.hpp"
#include "ade/io.hpp"
#include "ade/lexicon.hpp"
#include "ade/model.hpp"
#include "ade/pipeline.hpp"
#include "ade/synth.hpp"
#include "ade/teacher.hpp"

namespace fs = std::filesystem;
using ade::Config;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;   // assertion / evaluation failure
constexpr int kExitUsage = 2;     // usage / environment error

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string out_path(const Config& cfg, const std::string& key,
                     const std::string& fallback_name) {
    if (cfg.has(key)) return cfg.get_string(key);
    return (fs::path(cfg.get_string("paths.out_dir", "out")) / fallback_name).string();
}

void ensure_out_dir(const Config& cfg) {
    fs::create_directories(cfg.get_string("paths.out_dir", "out"));
}

// Every run records what it consumed so results can be traced to inputs.
void write_manifest(const Config& cfg, const std::string& command,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_paths) {
    nlohmann::json j;
    j["command"] = command;
    j["config_sha256"] = ade::sha256_hex(cfg.canonical());
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& p : input_paths)
        if (fs::exists(p)) inputs[p] = ade::sha256_hex(ade::read_file(p));
    j["inputs"] = inputs;
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& p : output_paths)
        if (fs::exists(p)) outputs[p] = ade::sha256_hex(ade::read_file(p));
    j["outputs"] = outputs;
    const std::string dir = cfg.get_string("paths.out_dir", "out");
    ade::atomic_write((fs::path(dir) / ("manifest." + command + ".json")).string(),
                      j.dump(2) + "\n");
}

ade::ModelConfig model_config(const Config& cfg) {
    ade::ModelConfig mc;
    mc.d_model = static_cast<size_t>(cfg.get_int("model.d_model", 64));
    mc.n_layers = static_cast<size_t>(cfg.get_int("model.n_layers", 2));
    mc.n_heads = static_cast<size_t>(cfg.get_int("model.n_heads", 4));
    mc.d_ff = static_cast<size_t>(cfg.get_int("model.d_ff", 128));
    mc.max_seq_len = static_cast<size_t>(cfg.get_int("model.max_seq_len", 128));
    mc.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
    return mc;
}

ade::PipelineOptions pipeline_options(const Config& cfg) {
    ade::PipelineOptions opts;
    opts.model = model_config(cfg);
    opts.train.epochs = static_cast<size_t>(cfg.get_int("training.epochs", 10));
    opts.train.batch_size = static_cast<size_t>(cfg.get_int("training.batch_size", 8));
    opts.train.lr = cfg.get_double("training.lr", 1e-3);
    opts.train.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
    opts.train.stop_at_dev_score = cfg.get_double("training.stop_at_dev_f1", -1.0);
    opts.train.verbose = cfg.get_bool("training.verbose", false);
    opts.threshold = cfg.get_double("training.threshold", 0.5);
    opts.split_seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
    return opts;
}

ade::NoiseConfig noise_config(const Config& cfg) {
    ade::NoiseConfig n;
    n.drop_rate = cfg.get_double("teacher.noise_drop", 0.0);
    n.spurious_rate = cfg.get_double("teacher.noise_spurious", 0.0);
    n.jitter_rate = cfg.get_double("teacher.noise_jitter", 0.0);
    n.seed = static_cast<uint64_t>(cfg.get_int("teacher.noise_seed",
                                               cfg.get_int("seed", 1)));
    return n;
}

ade::AnnotateOptions annotate_options(const Config& cfg) {
    ade::AnnotateOptions opts;
    opts.cache_dir = cfg.get_string("paths.cache_dir",
                                    (fs::path(cfg.get_string("paths.out_dir", "out")) /
                                     "cache").string());
    opts.mode = cfg.get_string("teacher.prompt_mode", "few") == "zero"
                    ? ade::PromptMode::ZeroShot
                    : ade::PromptMode::FewShot5;
    opts.max_parallel = static_cast<size_t>(cfg.get_int("teacher.max_parallel", 4));
    opts.max_retries = static_cast<size_t>(cfg.get_int("teacher.max_retries", 3));
    return opts;
}

// mode "mock" replays gold with configured noise; "real" talks to the
// configured HTTP endpoint and needs TEACHER_API_KEY.
std::unique_ptr<ade::TeacherClient> make_client(const Config& cfg,
                                                const std::vector<ade::Sentence>& sents) {
    const std::string mode = cfg.get_string("teacher.mode", "mock");
    if (mode == "mock") {
        auto gold = ade::read_annotations_jsonl(cfg.get_string("paths.gold"));
        return std::make_unique<ade::MockTeacherClient>(sents, gold, noise_config(cfg));
    }
    if (mode == "real") {
        if (!std::getenv("TEACHER_API_KEY"))
            throw UsageError("teacher.mode=real requires the TEACHER_API_KEY "
                             "environment variable");
        return std::make_unique<ade::HttpTeacherClient>(
            cfg.get_string("teacher.endpoint"),
            cfg.get_string("teacher.model", "gpt-3.5-turbo"));
    }
    throw UsageError("unknown teacher.mode: " + mode);
}

void print_report(const std::string& name, const ade::EvalReport& r) {
    std::printf("%-24s P=%.4f R=%.4f F1=%.4f  (tp=%zu fp=%zu fn=%zu, %s)\n",
                name.c_str(), r.precision, r.recall, r.f1, r.tp, r.fp, r.fn,
                ade::match_mode_name(r.mode));
}

// ---- subcommands -----------------------------------------------------------

int cmd_synth(const Config& cfg) {
    ensure_out_dir(cfg);
    auto entries = ade::load_lexicon_tsv(cfg.get_string("paths.lexicon"));
    ade::SynthConfig sc;
    sc.n_drug_sentences = static_cast<size_t>(cfg.get_int("synth.n_sentences", 2000));
    sc.seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
    sc.distractor_rate = cfg.get_double("synth.distractor_rate", 0.25);
    sc.two_drug_rate = cfg.get_double("synth.two_drug_rate", 0.3);
    sc.no_event_rate = cfg.get_double("synth.no_event_rate", 0.2);
    auto corpus = ade::synth_corpus(entries, sc);

    const std::string docs_path = out_path(cfg, "paths.corpus", "documents.jsonl");
    const std::string gold_path = out_path(cfg, "paths.gold", "gold.jsonl");
    ade::write_documents_jsonl(docs_path, corpus.documents);
    ade::write_annotations_jsonl(gold_path, corpus.gold);
    std::printf("synth: %zu documents, %zu gold annotations\n", corpus.documents.size(),
                corpus.gold.size());
    write_manifest(cfg, "synth", {cfg.get_string("paths.lexicon")},
                   {docs_path, gold_path});
    return kExitOk;
}

int cmd_curate(const Config& cfg) {
    ensure_out_dir(cfg);
    auto entries = ade::load_lexicon_tsv(cfg.get_string("paths.lexicon"));
    auto trie = ade::build_trie(entries);
    auto docs = ade::read_documents_jsonl(cfg.get_string("paths.corpus"));

    std::vector<ade::Sentence> all;
    for (const auto& d : docs) {
        auto split = ade::split_sentences(d);
        all.insert(all.end(), split.begin(), split.end());
    }
    auto kept = ade::filter_drug_sentences(all, trie);

    const std::string out = out_path(cfg, "paths.sentences", "sentences.jsonl");
    ade::write_sentences_jsonl(out, kept);
    std::printf("curate: %zu documents, %zu sentences, %zu with drug mentions\n",
                docs.size(), all.size(), kept.size());
    write_manifest(cfg, "curate",
                   {cfg.get_string("paths.lexicon"), cfg.get_string("paths.corpus")},
                   {out});
    return kExitOk;
}

int cmd_annotate(const Config& cfg) {
    ensure_out_dir(cfg);
    auto sents = ade::read_sentences_jsonl(cfg.get_string("paths.sentences"));
    auto client = make_client(cfg, sents);
    auto opts = annotate_options(cfg);

    auto result = ade::annotate(sents, *client, opts);

    std::map<ade::SentenceKey, const ade::Sentence*> by_key;
    for (const auto& s : sents) by_key[{s.doc_id, s.sent_index}] = &s;

    std::vector<ade::GroundedSentence> grounded;
    ade::GroundingStats stats;
    size_t malformed = 0;
    for (const auto& resp : result.responses) {
        malformed += resp.malformed_lines;
        auto it = by_key.find(resp.key);
        if (it == by_key.end()) continue;
        auto g = ade::ground_spans(*it->second, resp.parsed, ade::Provenance::Teacher);
        stats += g.stats;
        grounded.push_back(std::move(g));
    }
    auto positive = ade::filter_positive(grounded);

    std::vector<ade::Sentence> pos_sents;
    for (const auto& g : positive) pos_sents.push_back(g.sentence);
    const size_t pool = static_cast<size_t>(cfg.get_int("distill_pool_size", 40000));
    auto pooled = ade::subsample(pos_sents, pool,
                                 static_cast<uint64_t>(cfg.get_int("seed", 1)));
    auto keep = ade::keys_of(pooled);

    std::vector<ade::AdeAnnotation> out_anns;
    for (const auto& g : positive) {
        if (!keep.count({g.sentence.doc_id, g.sentence.sent_index})) continue;
        out_anns.insert(out_anns.end(), g.annotations.begin(), g.annotations.end());
    }

    const std::string out = out_path(cfg, "paths.annotations", "annotations.jsonl");
    ade::write_annotations_jsonl(out, out_anns);
    std::printf("annotate: %zu sentences in, %zu responses (%zu cached, %zu calls, "
                "%zu failed)\n",
                sents.size(), result.responses.size(), result.cache_hits,
                result.client_calls, result.failed.size());
    std::printf("grounding: %zu drugs grounded, %zu ungrounded; %zu events grounded, "
                "%zu hallucinated; %zu malformed lines\n",
                stats.grounded_drugs, stats.ungrounded_drugs, stats.grounded_events,
                stats.hallucinations, malformed);
    std::printf("pool: %zu positive sentences, %zu kept, %zu annotations written\n",
                positive.size(), pooled.size(), out_anns.size());
    write_manifest(cfg, "annotate", {cfg.get_string("paths.sentences")}, {out});
    return kExitOk;
}

int cmd_train(const Config& cfg) {
    ensure_out_dir(cfg);
    auto sents = ade::read_sentences_jsonl(cfg.get_string("paths.sentences"));
    auto labels = ade::read_annotations_jsonl(cfg.get_string("paths.annotations"));
    auto gold_path = cfg.get_string("paths.gold", "");
    auto gold = gold_path.empty() ? labels : ade::read_annotations_jsonl(gold_path);

    auto result = ade::train_and_eval(sents, labels, gold, pipeline_options(cfg));

    const std::string ckpt = out_path(cfg, "paths.checkpoint", "model.ade1");
    const std::string vocab_path = out_path(cfg, "paths.vocab", "vocab.json");
    ade::save_params(ckpt, result.params);
    ade::save_vocab(vocab_path, result.vocab);

    std::printf("train: %zu sentences (%zu/%zu/%zu split), %zu examples, "
                "best epoch %zu\n",
                sents.size(), result.split.train.size(), result.split.dev.size(),
                result.split.test.size(), result.train_examples, result.best_epoch + 1);
    print_report("dev (vs labels)", result.dev_lenient);
    print_report("test lenient", result.test_lenient);
    print_report("test strict", result.test_strict);
    write_manifest(cfg, "train",
                   {cfg.get_string("paths.sentences"), cfg.get_string("paths.annotations")},
                   {ckpt, vocab_path});
    return kExitOk;
}

int cmd_eval(const Config& cfg) {
    const std::string ckpt = out_path(cfg, "paths.checkpoint", "model.ade1");
    const std::string vocab_path = out_path(cfg, "paths.vocab", "vocab.json");
    if (!fs::exists(ckpt)) throw UsageError("missing checkpoint: " + ckpt);
    if (!fs::exists(vocab_path)) throw UsageError("missing vocab: " + vocab_path);

    auto sents = ade::read_sentences_jsonl(cfg.get_string("paths.sentences"));
    auto gold = ade::read_annotations_jsonl(cfg.get_string("paths.gold"));
    auto params = ade::load_params(ckpt);
    auto vocab = ade::load_vocab(vocab_path);
    auto mc = model_config(cfg);
    mc.vocab_size = vocab.size();

    auto preds = ade::predict_annotations(sents, params, vocab, mc,
                                          cfg.get_double("training.threshold", 0.5));
    auto lenient = ade::score(preds, gold, ade::MatchMode::Lenient);
    auto strict = ade::score(preds, gold, ade::MatchMode::Strict);
    std::cout << ade::report_table({{"lenient", lenient}, {"strict", strict}});
    return kExitOk;
}

int cmd_distill(const Config& cfg) {
    ensure_out_dir(cfg);
    auto sents = ade::read_sentences_jsonl(cfg.get_string("paths.sentences"));
    auto gold = ade::read_annotations_jsonl(cfg.get_string("paths.gold"));
    auto client = make_client(cfg, sents);

    ade::DistillOptions opts;
    opts.annotate = annotate_options(cfg);
    opts.pool_size = static_cast<size_t>(cfg.get_int("distill_pool_size", 40000));
    opts.pool_seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
    opts.pipe = pipeline_options(cfg);

    auto rep = ade::distill_run(sents, gold, *client, opts);

    std::printf("distill: %zu sentences -> %zu responses (%zu failed) -> %zu positive "
                "-> %zu pooled\n",
                rep.sentences_in, rep.responses, rep.failed, rep.positive, rep.pooled);
    std::printf("grounding: %zu drugs grounded, %zu ungrounded; %zu events grounded, "
                "%zu hallucinated\n",
                rep.grounding.grounded_drugs, rep.grounding.ungrounded_drugs,
                rep.grounding.grounded_events, rep.grounding.hallucinations);
    print_report("teacher test lenient", rep.teacher_test_lenient);
    print_report("teacher test strict", rep.teacher_test_strict);
    print_report("student test lenient", rep.student.test_lenient);
    print_report("student test strict", rep.student.test_strict);
    std::printf("student - teacher (lenient F1): %+.4f\n",
                rep.student.test_lenient.f1 - rep.teacher_test_lenient.f1);

    const std::string ckpt = out_path(cfg, "paths.checkpoint", "model.ade1");
    const std::string vocab_path = out_path(cfg, "paths.vocab", "vocab.json");
    ade::save_params(ckpt, rep.student.params);
    ade::save_vocab(vocab_path, rep.student.vocab);
    write_manifest(cfg, "distill",
                   {cfg.get_string("paths.sentences"), cfg.get_string("paths.gold")},
                   {ckpt, vocab_path});
    return kExitOk;
}

// Sweeps sentence shapes and checks the inference-cost accounting: the
// unified model runs the encoder once and the head once per drug, while the
// pairwise baseline burns one encoder pass per (candidate, drug) pair.
int cmd_bench(const Config& cfg) {
    ensure_out_dir(cfg);
    const std::vector<size_t> sweep = {1, 2, 4, 8, 16};

    ade::Vocab vocab;
    vocab.word_to_id["<unk>"] = 0;
    vocab.id_to_word.push_back("<unk>");
    auto add_word = [&](const std::string& w) {
        if (!vocab.word_to_id.count(w)) {
            vocab.word_to_id[w] = static_cast<int>(vocab.id_to_word.size());
            vocab.id_to_word.push_back(w);
        }
    };

    auto mc = model_config(cfg);

    // synthetic sentence with exactly M drugs and N event-ish tokens
    auto make_sentence = [&](size_t m_drugs, size_t n_events) {
        ade::Sentence s;
        s.doc_id = "bench";
        s.sent_index = 0;
        std::string text;
        for (size_t i = 0; i < m_drugs; ++i) {
            std::string name = "drug" + std::to_string(i);
            add_word(name);
            ade::Mention m;
            m.start = text.size();
            text += name;
            m.end = text.size();
            m.surface = name;
            s.drug_mentions.push_back(m);
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
        return s;
    };

    std::ostringstream csv;
    csv << "m_drugs,n_events,unified_encoder_passes,unified_head_passes,"
           "baseline_encoder_passes,pairwise_units,unified_us,baseline_us,speedup\n";

    bool counts_ok = true;
    double speedup_at_8 = 0.0;
    for (size_t m : sweep) {
        for (size_t n : sweep) {
            auto s = make_sentence(m, n);
            auto ts = ade::tokenize_sentence(s);
            ade::ModelConfig bmc = mc;
            bmc.vocab_size = vocab.size();

            auto uni = ade::init_unified_params(bmc);
            auto ner = ade::init_ner_params(bmc);
            auto re = ade::init_re_params(bmc);

            // the N candidate spans the NER stage would hand to stage 2:
            // exactly the event tokens of the constructed sentence
            std::vector<ade::ScoredMention> candidates;
            for (const auto& tok : ts.tokens) {
                if (tok.text.rfind("event", 0) != 0) continue;
                ade::ScoredMention sm;
                sm.mention.start = tok.start;
                sm.mention.end = tok.end;
                sm.mention.surface = s.text.substr(tok.start, tok.end - tok.start);
                candidates.push_back(std::move(sm));
            }

            auto t0 = std::chrono::steady_clock::now();
            auto up = ade::predict(ts, uni, bmc, vocab, 0.5);
            auto t1 = std::chrono::steady_clock::now();
            (void)ade::ner_token_probs(ts.drugs.empty()
                                           ? std::vector<int>{}
                                           : ade::token_ids(ts, vocab),
                                       ner, bmc);  // stage-1 proposal pass
            auto bp = ade::pairwise_score_candidates(ts, candidates, re, bmc, vocab, 0.5);
            ++bp.report.encoder_passes;  // count the proposal pass above
            auto t2 = std::chrono::steady_clock::now();

            const double uni_us =
                std::chrono::duration<double, std::micro>(t1 - t0).count();
            const double base_us =
                std::chrono::duration<double, std::micro>(t2 - t1).count();

            if (candidates.size() != n || up.report.encoder_passes != 1 ||
                up.report.head_passes != m || up.report.m_drugs != m ||
                bp.report.pairwise_units != n * m ||
                bp.report.encoder_passes != 1 + n * m) {
                counts_ok = false;
                std::fprintf(stderr,
                             "bench count mismatch at M=%zu N=%zu: unified(enc=%zu "
                             "head=%zu drugs=%zu) baseline(enc=%zu pairs=%zu props=%zu)\n",
                             m, n, up.report.encoder_passes, up.report.head_passes,
                             up.report.m_drugs, bp.report.encoder_passes,
                             bp.report.pairwise_units, candidates.size());
            }
            const double speedup = uni_us > 0 ? base_us / uni_us : 0.0;
            if (m == 8 && n == 8) speedup_at_8 = speedup;
            csv << m << "," << n << "," << up.report.encoder_passes << ","
                << up.report.head_passes << "," << bp.report.encoder_passes << ","
                << bp.report.pairwise_units << "," << uni_us << "," << base_us << ","
                << speedup << "\n";
        }
    }

    const std::string csv_path = out_path(cfg, "paths.bench_csv", "bench.csv");
    ade::atomic_write(csv_path, csv.str());
    std::printf("bench: wrote %s; unified speedup at M=N=8: %.2fx\n", csv_path.c_str(),
                speedup_at_8);
    if (!counts_ok) {
        std::fprintf(stderr, "bench: complexity accounting mismatch\n");
        return kExitFailure;
    }
    if (speedup_at_8 < 1.5) {
        std::fprintf(stderr, "bench: unified speedup %.2fx below 1.5x floor\n",
                     speedup_at_8);
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ADE extraction pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "TOML config file")->required();
    app.add_option("--set", overrides,
                   "override a config entry, e.g. --set training.epochs=5");

    const std::vector<std::pair<std::string, int (*)(const Config&)>> commands = {
        {"curate", cmd_curate},   {"annotate", cmd_annotate}, {"train", cmd_train},
        {"eval", cmd_eval},       {"distill", cmd_distill},   {"bench", cmd_bench},
        {"synth", cmd_synth},
    };
    for (const auto& [name, fn] : commands) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        Config cfg = Config::load(config_path);
        for (const auto& ov : overrides) {
            size_t eq = ov.find('=');
            if (eq == std::string::npos)
                throw UsageError("--set expects key=value, got: " + ov);
            cfg.set(ov.substr(0, eq), ov.substr(eq + 1));
        }
        for (const auto& [name, fn] : commands)
            if (app.got_subcommand(name)) return fn(cfg);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ade::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        // missing files and other environment problems are usage errors
        const std::string what = e.what();
        if (what.find("cannot open") != std::string::npos ||
            what.find("No such file") != std::string::npos)
            return kExitUsage;
        return kExitFailure;
    }
}
