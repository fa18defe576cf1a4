#include "ade/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"

#include "ade/corpus.hpp"
#include "ade/io.hpp"
#include "ade/lexicon.hpp"

namespace ade {

std::vector<Token> tokenize_text(const std::string& text) {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        unsigned char c = text[i];
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (std::isalnum(c)) {
            size_t b = i;
            while (i < n && std::isalnum(static_cast<unsigned char>(text[i]))) ++i;
            std::string w = text.substr(b, i - b);
            for (auto& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            out.push_back({std::move(w), b, i});
        } else {
            out.push_back({std::string(1, static_cast<char>(c)), i, i + 1});
            ++i;
        }
    }
    return out;
}

namespace {

bool spans_overlap(size_t a_start, size_t a_end, size_t b_start, size_t b_end) {
    return a_start < b_end && b_start < a_end;
}

}  // namespace

TokenizedSentence tokenize_sentence(const Sentence& s) {
    TokenizedSentence ts;
    ts.key = {s.doc_id, s.sent_index};
    ts.text = s.text;
    ts.tokens = tokenize_text(s.text);

    // group drug mentions by normalized surface; token indices are the union
    // over all occurrences
    std::vector<std::string> order;
    std::map<std::string, DrugGroup> groups;
    for (const auto& m : s.drug_mentions) {
        const std::string key = normalize_surface(m.surface);
        auto it = groups.find(key);
        if (it == groups.end()) {
            order.push_back(key);
            it = groups.emplace(key, DrugGroup{m, {}, {}}).first;
        }
        it->second.occurrences.push_back(m);
        for (size_t t = 0; t < ts.tokens.size(); ++t)
            if (spans_overlap(ts.tokens[t].start, ts.tokens[t].end, m.start, m.end))
                it->second.token_indices.push_back(t);
    }
    for (const auto& key : order) {
        DrugGroup g = groups.at(key);
        std::sort(g.token_indices.begin(), g.token_indices.end());
        g.token_indices.erase(std::unique(g.token_indices.begin(), g.token_indices.end()),
                              g.token_indices.end());
        if (!g.token_indices.empty()) ts.drugs.push_back(std::move(g));
    }
    return ts;
}

Vocab build_vocab(const std::vector<TokenizedSentence>& sents) {
    Vocab v;
    v.id_to_word.push_back("<unk>");
    for (const auto& ts : sents)
        for (const auto& tok : ts.tokens)
            if (v.word_to_id.emplace(tok.text, static_cast<int>(v.id_to_word.size())).second)
                v.id_to_word.push_back(tok.text);
    return v;
}

void save_vocab(const std::string& path, const Vocab& vocab) {
    json j = json::array();
    for (const auto& w : vocab.id_to_word) j.push_back(w);
    atomic_write(path, j.dump());
}

Vocab load_vocab(const std::string& path) {
    Vocab v;
    json j = json::parse(read_file(path));
    for (const auto& w : j) {
        const std::string word = w.get<std::string>();
        v.word_to_id.emplace(word, static_cast<int>(v.id_to_word.size()));
        v.id_to_word.push_back(word);
    }
    return v;
}

std::vector<int> token_ids(const TokenizedSentence& ts, const Vocab& vocab) {
    std::vector<int> ids;
    ids.reserve(ts.tokens.size());
    for (const auto& tok : ts.tokens) ids.push_back(vocab.id(tok.text));
    return ids;
}

std::vector<TrainingExample> make_examples(const TokenizedSentence& ts,
                                           const std::vector<AdeAnnotation>& annotations,
                                           const Vocab& vocab) {
    const auto ids = token_ids(ts, vocab);
    std::vector<TrainingExample> out;
    for (const auto& g : ts.drugs) {
        const std::string gkey = normalize_surface(g.representative.surface);
        TrainingExample ex;
        ex.ids = ids;
        ex.drug_tokens = g.token_indices;
        ex.labels.assign(ts.tokens.size(), 0.0);
        for (const auto& ann : annotations) {
            if (normalize_surface(ann.drug.surface) != gkey) continue;
            for (const auto& ev : ann.events)
                for (size_t t = 0; t < ts.tokens.size(); ++t)
                    if (spans_overlap(ts.tokens[t].start, ts.tokens[t].end, ev.start, ev.end))
                        ex.labels[t] = 1.0;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

Tensor pool_drug(const Tensor& H, const std::vector<size_t>& drug_token_indices) {
    if (drug_token_indices.empty()) throw EmptyDrugSpan();
    const size_t d = H.dim(1);
    Tensor out({d});
    for (size_t idx : drug_token_indices) {
        if (idx >= H.dim(0)) throw ShapeMismatch("pool_drug: token index out of range");
        for (size_t j = 0; j < d; ++j) out[j] += H.at(idx, j);
    }
    out.scale_(1.0 / static_cast<double>(drug_token_indices.size()));
    return out;
}

Tensor head_forward(const Tensor& H, const Tensor& d_bar, const Tensor& W, double b) {
    const size_t t_len = H.dim(0), d = H.dim(1);
    if (d_bar.numel() != d || W.numel() != 2 * d)
        throw ShapeMismatch("head_forward: W must have shape [2d]");
    double drug_term = b;
    for (size_t j = 0; j < d; ++j) drug_term += W[d + j] * d_bar[j];
    Tensor p({t_len});
    for (size_t i = 0; i < t_len; ++i) {
        double z = drug_term;
        for (size_t j = 0; j < d; ++j) z += W[j] * H.at(i, j);
        p[i] = sigmoid(z);
    }
    return p;
}

std::vector<ScoredMention> decode_spans(const Tensor& p, double threshold,
                                        const std::vector<Token>& tokens,
                                        const std::string& text) {
    std::vector<ScoredMention> out;
    const size_t t_len = p.numel();
    size_t i = 0;
    while (i < t_len) {
        if (p[i] < threshold) {
            ++i;
            continue;
        }
        size_t j = i;
        double sum = 0.0;
        while (j < t_len && p[j] >= threshold) sum += p[j++];
        ScoredMention sm;
        sm.mention.start = tokens[i].start;
        sm.mention.end = tokens[j - 1].end;
        sm.mention.surface = text.substr(sm.mention.start, sm.mention.end - sm.mention.start);
        sm.score = sum / static_cast<double>(j - i);
        out.push_back(std::move(sm));
        i = j;
    }
    return out;
}

ParamSet init_unified_params(const ModelConfig& config) {
    ParamSet params = init_encoder_params(config);
    SplitMix rng(config.seed * 77 + 3);
    Tensor w({2 * config.d_model});
    for (size_t i = 0; i < w.numel(); ++i)
        w[i] = 0.1 * (rng.unit() * 2.0 - 1.0);
    params.add("head.w", std::move(w));
    params.add("head.b", Tensor({1}));
    return params;
}

namespace {

// stable BCE on the logit: max(z,0) - z*y + log1p(exp(-|z|))
double bce_from_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

double example_loss(const TrainingExample& ex, ParamSet& params, const ModelConfig& config,
                    bool accumulate) {
    const size_t t_len = ex.ids.size();
    const size_t d = config.d_model;
    EncoderCache cache;
    Tensor H = forward_encoder(ex.ids, params, config, accumulate ? &cache : nullptr);
    Tensor d_bar = pool_drug(H, ex.drug_tokens);
    const Tensor& w = params.at("head.w").value;
    const double b = params.at("head.b").value[0];

    double drug_term = b;
    for (size_t j = 0; j < d; ++j) drug_term += w[d + j] * d_bar[j];

    std::vector<double> z(t_len);
    double loss = 0.0;
    for (size_t i = 0; i < t_len; ++i) {
        double zi = drug_term;
        for (size_t j = 0; j < d; ++j) zi += w[j] * H.at(i, j);
        z[i] = zi;
        loss += bce_from_logit(zi, ex.labels[i]);
    }
    loss /= static_cast<double>(t_len);
    if (!accumulate) return loss;

    Tensor d_H({t_len, d});
    Tensor& d_w = params.at("head.w").grad;
    double d_b = 0.0;
    double dz_sum = 0.0;
    for (size_t i = 0; i < t_len; ++i) {
        const double dz = (sigmoid(z[i]) - ex.labels[i]) / static_cast<double>(t_len);
        dz_sum += dz;
        d_b += dz;
        for (size_t j = 0; j < d; ++j) {
            d_w[j] += dz * H.at(i, j);
            d_H.at(i, j) += dz * w[j];
        }
    }
    for (size_t j = 0; j < d; ++j) d_w[d + j] += dz_sum * d_bar[j];
    params.at("head.b").grad[0] += d_b;

    const double pool_scale = 1.0 / static_cast<double>(ex.drug_tokens.size());
    for (size_t idx : ex.drug_tokens)
        for (size_t j = 0; j < d; ++j) d_H.at(idx, j) += dz_sum * w[d + j] * pool_scale;

    backward_encoder(d_H, cache, params, config);
    return loss;
}

namespace {

// Shared seeded minibatch loop for all three model variants.
TrainResult train_core(size_t n_examples, const ModelConfig& config,
                       const TrainOptions& opts, ParamSet initial,
                       const std::function<double(size_t index, ParamSet&, bool)>& loss_fn) {
    if (n_examples == 0) throw EmptyTrainingSet();
    TrainResult result;
    ParamSet params = std::move(initial);
    AdamState adam;
    SplitMix rng(opts.seed * 0x51ed2701ULL + 11);

    std::vector<size_t> order(n_examples);
    for (size_t i = 0; i < n_examples; ++i) order[i] = i;

    double best_score = -1.0;
    bool have_best = false;
    ParamSet best_params;

    for (size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        for (size_t i = 0; i + 1 < order.size(); ++i) {
            size_t j = i + rng.below(order.size() - i);
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        size_t pos = 0;
        while (pos < order.size()) {
            const size_t batch = std::min(opts.batch_size, order.size() - pos);
            params.zero_grad();
            double batch_loss = 0.0;
            for (size_t k = 0; k < batch; ++k)
                batch_loss += loss_fn(order[pos + k], params, true);
            params.scale_grad(1.0 / static_cast<double>(batch));
            optimizer_step(params, adam, opts.lr);
            epoch_loss += batch_loss;
            pos += batch;
        }
        epoch_loss /= static_cast<double>(order.size());
        result.epoch_loss.push_back(epoch_loss);
        if (opts.verbose)
            std::fprintf(stderr, "epoch %zu loss %.6f\n", epoch + 1, epoch_loss);

        if (opts.dev_score) {
            const double score = opts.dev_score(epoch, params);
            result.dev_scores.push_back(score);
            if (!have_best || score > best_score) {
                best_score = score;
                best_params = params;
                result.best_epoch = epoch;
                have_best = true;
            }
            if (opts.stop_at_dev_score >= 0.0 && score >= opts.stop_at_dev_score) break;
        }
    }
    result.params = have_best ? std::move(best_params) : std::move(params);
    return result;
}

}  // namespace

TrainResult train(const std::vector<TrainingExample>& examples, const ModelConfig& config,
                  const TrainOptions& opts) {
    return train_core(examples.size(), config, opts, init_unified_params(config),
                      [&](size_t i, ParamSet& p, bool acc) {
                          return example_loss(examples[i], p, config, acc);
                      });
}

PredictResult predict(const TokenizedSentence& ts, const ParamSet& params,
                      const ModelConfig& config, const Vocab& vocab, double threshold) {
    PredictResult result;
    if (ts.tokens.empty() || ts.drugs.empty()) return result;
    const auto ids = token_ids(ts, vocab);
    Tensor H = forward_encoder(ids, params, config);
    result.report.encoder_passes = 1;
    result.report.m_drugs = ts.drugs.size();

    const Tensor& w = params.at("head.w").value;
    const double b = params.at("head.b").value[0];
    std::set<std::pair<size_t, size_t>> distinct_events;
    for (const auto& g : ts.drugs) {
        Tensor d_bar = pool_drug(H, g.token_indices);
        Tensor p = head_forward(H, d_bar, w, b);
        ++result.report.head_passes;
        DrugPrediction dp;
        dp.drug = g;
        dp.events = decode_spans(p, threshold, ts.tokens, ts.text);
        for (const auto& sm : dp.events)
            distinct_events.emplace(sm.mention.start, sm.mention.end);
        result.per_drug.push_back(std::move(dp));
    }
    result.report.n_events = distinct_events.size();
    result.report.pairwise_units = result.report.n_events * result.report.m_drugs;
    return result;
}

std::vector<AdeAnnotation> predictions_to_annotations(const TokenizedSentence& ts,
                                                      const PredictResult& result) {
    std::vector<AdeAnnotation> out;
    for (const auto& dp : result.per_drug) {
        for (const auto& occurrence : dp.drug.occurrences) {
            AdeAnnotation ann;
            ann.key = ts.key;
            ann.drug = occurrence;
            for (const auto& sm : dp.events) ann.events.push_back(sm.mention);
            ann.provenance = Provenance::Teacher;
            out.push_back(std::move(ann));
        }
    }
    return out;
}

// ---- pairwise baseline ------------------------------------------------------

ParamSet init_ner_params(const ModelConfig& config) {
    ParamSet params = init_encoder_params(config);
    SplitMix rng(config.seed * 131 + 7);
    Tensor w({config.d_model});
    for (size_t i = 0; i < w.numel(); ++i) w[i] = 0.1 * (rng.unit() * 2.0 - 1.0);
    params.add("ner.w", std::move(w));
    params.add("ner.b", Tensor({1}));
    return params;
}

ParamSet init_re_params(const ModelConfig& config) {
    ParamSet params = init_encoder_params(config);
    SplitMix rng(config.seed * 193 + 29);
    Tensor w({2 * config.d_model});
    for (size_t i = 0; i < w.numel(); ++i) w[i] = 0.1 * (rng.unit() * 2.0 - 1.0);
    params.add("re.w", std::move(w));
    params.add("re.b", Tensor({1}));
    Tensor ma({config.d_model}), md({config.d_model});
    for (size_t i = 0; i < ma.numel(); ++i) ma[i] = 0.1 * (rng.unit() * 2.0 - 1.0);
    for (size_t i = 0; i < md.numel(); ++i) md[i] = 0.1 * (rng.unit() * 2.0 - 1.0);
    params.add("marker_ae", std::move(ma));
    params.add("marker_drug", std::move(md));
    return params;
}

Tensor ner_token_probs(const std::vector<int>& ids, const ParamSet& ner_params,
                       const ModelConfig& config) {
    Tensor H = forward_encoder(ids, ner_params, config);
    const Tensor& w = ner_params.at("ner.w").value;
    const double b = ner_params.at("ner.b").value[0];
    const size_t d = config.d_model;
    Tensor p({ids.size()});
    for (size_t i = 0; i < ids.size(); ++i) {
        double z = b;
        for (size_t j = 0; j < d; ++j) z += w[j] * H.at(i, j);
        p[i] = sigmoid(z);
    }
    return p;
}

double ner_example_loss(const NerExample& ex, ParamSet& params, const ModelConfig& config,
                        bool accumulate) {
    const size_t t_len = ex.ids.size();
    const size_t d = config.d_model;
    EncoderCache cache;
    Tensor H = forward_encoder(ex.ids, params, config, accumulate ? &cache : nullptr);
    const Tensor& w = params.at("ner.w").value;
    const double b = params.at("ner.b").value[0];
    std::vector<double> z(t_len);
    double loss = 0.0;
    for (size_t i = 0; i < t_len; ++i) {
        double zi = b;
        for (size_t j = 0; j < d; ++j) zi += w[j] * H.at(i, j);
        z[i] = zi;
        loss += bce_from_logit(zi, ex.labels[i]);
    }
    loss /= static_cast<double>(t_len);
    if (!accumulate) return loss;

    Tensor d_H({t_len, d});
    Tensor& d_w = params.at("ner.w").grad;
    for (size_t i = 0; i < t_len; ++i) {
        const double dz = (sigmoid(z[i]) - ex.labels[i]) / static_cast<double>(t_len);
        params.at("ner.b").grad[0] += dz;
        for (size_t j = 0; j < d; ++j) {
            d_w[j] += dz * H.at(i, j);
            d_H.at(i, j) += dz * w[j];
        }
    }
    backward_encoder(d_H, cache, params, config);
    return loss;
}

namespace {

Tensor pair_markers(size_t t_len, const std::vector<size_t>& ae_tokens,
                    const std::vector<size_t>& drug_tokens, const ParamSet& params,
                    const ModelConfig& config) {
    Tensor extra({t_len, config.d_model});
    const Tensor& ma = params.at("marker_ae").value;
    const Tensor& md = params.at("marker_drug").value;
    for (size_t idx : ae_tokens)
        for (size_t j = 0; j < config.d_model; ++j) extra.at(idx, j) += ma[j];
    for (size_t idx : drug_tokens)
        for (size_t j = 0; j < config.d_model; ++j) extra.at(idx, j) += md[j];
    return extra;
}

}  // namespace

double re_pair_prob(const std::vector<int>& ids, const std::vector<size_t>& ae_tokens,
                    const std::vector<size_t>& drug_tokens, const ParamSet& re_params,
                    const ModelConfig& config) {
    Tensor extra = pair_markers(ids.size(), ae_tokens, drug_tokens, re_params, config);
    Tensor H = forward_encoder(ids, re_params, config, nullptr, "", &extra);
    Tensor a = pool_drug(H, ae_tokens);
    Tensor dvec = pool_drug(H, drug_tokens);
    const Tensor& w = re_params.at("re.w").value;
    const size_t d = config.d_model;
    double z = re_params.at("re.b").value[0];
    for (size_t j = 0; j < d; ++j) z += w[j] * a[j] + w[d + j] * dvec[j];
    return sigmoid(z);
}

double re_example_loss(const ReExample& ex, ParamSet& params, const ModelConfig& config,
                       bool accumulate) {
    const size_t d = config.d_model;
    Tensor extra = pair_markers(ex.ids.size(), ex.ae_tokens, ex.drug_tokens, params, config);
    EncoderCache cache;
    Tensor H = forward_encoder(ex.ids, params, config, accumulate ? &cache : nullptr, "", &extra);
    Tensor a = pool_drug(H, ex.ae_tokens);
    Tensor dvec = pool_drug(H, ex.drug_tokens);
    const Tensor& w = params.at("re.w").value;
    double z = params.at("re.b").value[0];
    for (size_t j = 0; j < d; ++j) z += w[j] * a[j] + w[d + j] * dvec[j];
    const double loss = bce_from_logit(z, ex.label);
    if (!accumulate) return loss;

    const double dz = sigmoid(z) - ex.label;
    params.at("re.b").grad[0] += dz;
    Tensor& d_w = params.at("re.w").grad;
    Tensor d_H({ex.ids.size(), d});
    const double ae_scale = dz / static_cast<double>(ex.ae_tokens.size());
    const double drug_scale = dz / static_cast<double>(ex.drug_tokens.size());
    for (size_t j = 0; j < d; ++j) {
        d_w[j] += dz * a[j];
        d_w[d + j] += dz * dvec[j];
    }
    for (size_t idx : ex.ae_tokens)
        for (size_t j = 0; j < d; ++j) d_H.at(idx, j) += ae_scale * w[j];
    for (size_t idx : ex.drug_tokens)
        for (size_t j = 0; j < d; ++j) d_H.at(idx, j) += drug_scale * w[d + j];

    Tensor d_x0;
    backward_encoder(d_H, cache, params, config, "", &d_x0);
    Tensor& d_ma = params.at("marker_ae").grad;
    Tensor& d_md = params.at("marker_drug").grad;
    for (size_t idx : ex.ae_tokens)
        for (size_t j = 0; j < d; ++j) d_ma[j] += d_x0.at(idx, j);
    for (size_t idx : ex.drug_tokens)
        for (size_t j = 0; j < d; ++j) d_md[j] += d_x0.at(idx, j);
    return loss;
}

TrainResult train_ner(const std::vector<NerExample>& examples, const ModelConfig& config,
                      const TrainOptions& opts) {
    return train_core(examples.size(), config, opts, init_ner_params(config),
                      [&](size_t i, ParamSet& p, bool acc) {
                          return ner_example_loss(examples[i], p, config, acc);
                      });
}

TrainResult train_re(const std::vector<ReExample>& examples, const ModelConfig& config,
                     const TrainOptions& opts) {
    return train_core(examples.size(), config, opts, init_re_params(config),
                      [&](size_t i, ParamSet& p, bool acc) {
                          return re_example_loss(examples[i], p, config, acc);
                      });
}

PredictResult pairwise_score_candidates(const TokenizedSentence& ts,
                                        const std::vector<ScoredMention>& candidates,
                                        const ParamSet& re_params,
                                        const ModelConfig& config, const Vocab& vocab,
                                        double threshold) {
    PredictResult result;
    if (ts.tokens.empty() || ts.drugs.empty()) return result;
    const auto ids = token_ids(ts, vocab);

    result.report.n_events = candidates.size();
    result.report.m_drugs = ts.drugs.size();
    result.report.pairwise_units = candidates.size() * ts.drugs.size();

    // token index ranges for each candidate span
    std::vector<std::vector<size_t>> cand_tokens(candidates.size());
    for (size_t c = 0; c < candidates.size(); ++c)
        for (size_t t = 0; t < ts.tokens.size(); ++t)
            if (spans_overlap(ts.tokens[t].start, ts.tokens[t].end, candidates[c].mention.start,
                              candidates[c].mention.end))
                cand_tokens[c].push_back(t);

    for (const auto& g : ts.drugs) {
        DrugPrediction dp;
        dp.drug = g;
        for (size_t c = 0; c < candidates.size(); ++c) {
            const double prob =
                re_pair_prob(ids, cand_tokens[c], g.token_indices, re_params, config);
            ++result.report.encoder_passes;
            ++result.report.head_passes;
            if (prob >= threshold) {
                ScoredMention sm = candidates[c];
                sm.score = prob;
                dp.events.push_back(std::move(sm));
            }
        }
        result.per_drug.push_back(std::move(dp));
    }
    return result;
}

PredictResult pairwise_baseline_predict(const TokenizedSentence& ts,
                                        const ParamSet& ner_params,
                                        const ParamSet& re_params,
                                        const ModelConfig& config, const Vocab& vocab,
                                        double threshold) {
    PredictResult result;
    if (ts.tokens.empty() || ts.drugs.empty()) return result;
    const auto ids = token_ids(ts, vocab);

    Tensor p = ner_token_probs(ids, ner_params, config);
    auto candidates = decode_spans(p, threshold, ts.tokens, ts.text);

    result = pairwise_score_candidates(ts, candidates, re_params, config, vocab, threshold);
    ++result.report.encoder_passes;  // the shared NER proposal pass
    return result;
}

}  // namespace ade
