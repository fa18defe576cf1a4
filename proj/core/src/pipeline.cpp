#include "ade/pipeline.hpp"

#include <algorithm>

#include "ade/corpus.hpp"

namespace ade {

std::vector<AdeAnnotation> filter_annotations(const std::vector<AdeAnnotation>& anns,
                                              const std::set<SentenceKey>& keys) {
    std::vector<AdeAnnotation> out;
    for (const auto& a : anns)
        if (keys.count(a.key)) out.push_back(a);
    return out;
}

std::set<SentenceKey> keys_of(const std::vector<Sentence>& sents) {
    std::set<SentenceKey> out;
    for (const auto& s : sents) out.insert({s.doc_id, s.sent_index});
    return out;
}

std::vector<AdeAnnotation> predict_annotations(const std::vector<Sentence>& sents,
                                               const ParamSet& params, const Vocab& vocab,
                                               const ModelConfig& config, double threshold) {
    std::vector<AdeAnnotation> out;
    for (const auto& s : sents) {
        auto ts = tokenize_sentence(s);
        auto result = predict(ts, params, config, vocab, threshold);
        auto anns = predictions_to_annotations(ts, result);
        out.insert(out.end(), anns.begin(), anns.end());
    }
    return out;
}

namespace {

std::vector<Sentence> take(const std::vector<Sentence>& sents,
                           const std::vector<size_t>& idx) {
    std::vector<Sentence> out;
    out.reserve(idx.size());
    for (size_t i : idx) out.push_back(sents[i]);
    return out;
}

std::vector<AdeAnnotation> annotations_for(const std::vector<AdeAnnotation>& anns,
                                           const SentenceKey& key) {
    std::vector<AdeAnnotation> out;
    for (const auto& a : anns)
        if (a.key == key) out.push_back(a);
    return out;
}

}  // namespace

PipelineResult train_and_eval(const std::vector<Sentence>& sentences,
                              const std::vector<AdeAnnotation>& labels,
                              const std::vector<AdeAnnotation>& gold,
                              const PipelineOptions& opts) {
    if (sentences.empty()) throw EmptyTrainingSet();

    PipelineResult res;
    res.split = split_8_1_1(sentences.size(), opts.split_seed);
    auto train_sents = take(sentences, res.split.train);
    auto dev_sents = take(sentences, res.split.dev);
    auto test_sents = take(sentences, res.split.test);

    // index labels by key once; only labeled sentences yield examples
    std::map<SentenceKey, std::vector<AdeAnnotation>> by_key;
    for (const auto& a : labels) by_key[a.key].push_back(a);

    std::vector<TokenizedSentence> train_tok;
    for (const auto& s : train_sents) train_tok.push_back(tokenize_sentence(s));
    res.vocab = build_vocab(train_tok);

    ModelConfig mc = opts.model;
    mc.vocab_size = res.vocab.size();

    std::vector<TrainingExample> examples;
    for (const auto& ts : train_tok) {
        auto it = by_key.find(ts.key);
        if (it == by_key.end()) continue;
        auto ex = make_examples(ts, it->second, res.vocab);
        examples.insert(examples.end(), ex.begin(), ex.end());
    }
    if (examples.empty()) throw EmptyTrainingSet();
    res.train_examples = examples.size();

    const auto dev_labels = filter_annotations(labels, keys_of(dev_sents));
    TrainOptions topts = opts.train;
    if (!dev_sents.empty() && !dev_labels.empty() && !topts.dev_score) {
        topts.dev_score = [&](size_t, const ParamSet& p) {
            auto preds = predict_annotations(dev_sents, p, res.vocab, mc, opts.threshold);
            return score(preds, dev_labels, MatchMode::Lenient).f1;
        };
    }

    auto trained = train(examples, mc, topts);
    res.params = std::move(trained.params);
    res.epoch_loss = std::move(trained.epoch_loss);
    res.best_epoch = trained.best_epoch;

    if (!dev_sents.empty() && !dev_labels.empty()) {
        auto dev_preds = predict_annotations(dev_sents, res.params, res.vocab, mc,
                                             opts.threshold);
        res.dev_lenient = score(dev_preds, dev_labels, MatchMode::Lenient);
    }
    const auto test_gold = filter_annotations(gold, keys_of(test_sents));
    auto test_preds = predict_annotations(test_sents, res.params, res.vocab, mc,
                                          opts.threshold);
    res.test_lenient = score(test_preds, test_gold, MatchMode::Lenient);
    res.test_strict = score(test_preds, test_gold, MatchMode::Strict);
    return res;
}

DistillReport distill_run(const std::vector<Sentence>& sentences,
                          const std::vector<AdeAnnotation>& gold, TeacherClient& client,
                          const DistillOptions& opts) {
    DistillReport rep;
    rep.sentences_in = sentences.size();

    auto ann = annotate(sentences, client, opts.annotate);
    rep.responses = ann.responses.size();
    rep.failed = ann.failed.size();

    std::map<SentenceKey, const Sentence*> sent_by_key;
    for (const auto& s : sentences) sent_by_key[{s.doc_id, s.sent_index}] = &s;

    std::vector<GroundedSentence> grounded;
    for (const auto& resp : ann.responses) {
        auto it = sent_by_key.find(resp.key);
        if (it == sent_by_key.end()) continue;
        auto g = ground_spans(*it->second, resp.parsed, Provenance::Teacher);
        rep.grounding += g.stats;
        grounded.push_back(std::move(g));
    }

    auto positive = filter_positive(grounded);
    rep.positive = positive.size();

    std::vector<Sentence> pos_sents;
    for (const auto& g : positive) pos_sents.push_back(g.sentence);
    auto pooled_sents = subsample(pos_sents, opts.pool_size, opts.pool_seed);
    rep.pooled = pooled_sents.size();
    const auto pooled_keys = keys_of(pooled_sents);

    std::vector<AdeAnnotation> teacher_labels;
    for (const auto& g : positive) {
        if (!pooled_keys.count({g.sentence.doc_id, g.sentence.sent_index})) continue;
        teacher_labels.insert(teacher_labels.end(), g.annotations.begin(),
                              g.annotations.end());
    }

    rep.student = train_and_eval(sentences, teacher_labels, gold, opts.pipe);

    // the teacher's own quality on the same held-out sentences
    auto test_sents = take(sentences, rep.student.split.test);
    const auto test_keys = keys_of(test_sents);
    const auto test_gold = filter_annotations(gold, test_keys);
    std::vector<AdeAnnotation> teacher_test;
    for (const auto& g : grounded) {
        if (!test_keys.count({g.sentence.doc_id, g.sentence.sent_index})) continue;
        for (const auto& a : g.annotations)
            if (!a.events.empty()) teacher_test.push_back(a);
    }
    rep.teacher_test_lenient = score(teacher_test, test_gold, MatchMode::Lenient);
    rep.teacher_test_strict = score(teacher_test, test_gold, MatchMode::Strict);
    return rep;
}

}  // namespace ade
