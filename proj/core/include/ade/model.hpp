#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ade/nn.hpp"
#include "ade/types.hpp"

namespace ade {

struct EmptyDrugSpan : std::runtime_error {
    EmptyDrugSpan() : std::runtime_error("drug has no tokens to pool") {}
};
struct EmptyTrainingSet : std::runtime_error {
    EmptyTrainingSet() : std::runtime_error("no training examples") {}
};

struct Token {
    std::string text;  // lowercased
    size_t start = 0;
    size_t end = 0;
};

// One drug identity inside a sentence: all mentions sharing a normalized
// surface, pooled over the union of their tokens.
struct DrugGroup {
    Mention representative;  // first occurrence
    std::vector<Mention> occurrences;
    std::vector<size_t> token_indices;  // sorted union
};

struct TokenizedSentence {
    SentenceKey key;
    std::string text;
    std::vector<Token> tokens;
    std::vector<DrugGroup> drugs;
};

// Lowercase, split on whitespace and punctuation; punctuation kept as
// single-char tokens; byte offsets retained.
std::vector<Token> tokenize_text(const std::string& text);
TokenizedSentence tokenize_sentence(const Sentence& s);

struct Vocab {
    std::map<std::string, int> word_to_id;
    std::vector<std::string> id_to_word;
    static constexpr int kUnk = 0;

    int id(const std::string& w) const {
        auto it = word_to_id.find(w);
        return it == word_to_id.end() ? kUnk : it->second;
    }
    size_t size() const { return id_to_word.size(); }
};

Vocab build_vocab(const std::vector<TokenizedSentence>& sents);
void save_vocab(const std::string& path, const Vocab& vocab);
Vocab load_vocab(const std::string& path);

std::vector<int> token_ids(const TokenizedSentence& ts, const Vocab& vocab);

struct TrainingExample {
    std::vector<int> ids;
    std::vector<size_t> drug_tokens;  // token indices of the target drug
    std::vector<double> labels;       // per-token {0,1}
};

// One example per drug group, zero-event drugs included with all-zero labels.
// A token is positive iff it overlaps any event span of that drug.
std::vector<TrainingExample> make_examples(const TokenizedSentence& ts,
                                           const std::vector<AdeAnnotation>& annotations,
                                           const Vocab& vocab);

// Mean of the selected rows of H.
Tensor pool_drug(const Tensor& H, const std::vector<size_t>& drug_token_indices);

// p_i = sigmoid(W . concat(h_i, d_bar) + b); W has shape [2d], b is scalar.
Tensor head_forward(const Tensor& H, const Tensor& d_bar, const Tensor& W, double b);

struct ScoredMention {
    Mention mention;
    double score = 0.0;
};

// Maximal runs of tokens with p_i >= threshold, one Mention per run from
// first token start to last token end. Score is the run's mean probability.
std::vector<ScoredMention> decode_spans(const Tensor& p, double threshold,
                                        const std::vector<Token>& tokens,
                                        const std::string& text);

struct ComplexityReport {
    size_t n_events = 0;
    size_t m_drugs = 0;
    size_t encoder_passes = 0;
    size_t head_passes = 0;
    size_t pairwise_units = 0;
};

struct DrugPrediction {
    DrugGroup drug;
    std::vector<ScoredMention> events;
};

struct PredictResult {
    std::vector<DrugPrediction> per_drug;
    ComplexityReport report;
};

// Unified drug-centric inference: one encoder pass, one head pass per drug.
PredictResult predict(const TokenizedSentence& ts, const ParamSet& params,
                      const ModelConfig& config, const Vocab& vocab,
                      double threshold = 0.5);

std::vector<AdeAnnotation> predictions_to_annotations(const TokenizedSentence& ts,
                                                      const PredictResult& result);

// Head parameters live beside the encoder in the same ParamSet.
ParamSet init_unified_params(const ModelConfig& config);

// Forward + backward of one example; returns the example loss and, when
// `accumulate` is set, adds gradients into the ParamSet.
double example_loss(const TrainingExample& ex, ParamSet& params,
                    const ModelConfig& config, bool accumulate);

struct TrainOptions {
    size_t epochs = 10;
    size_t batch_size = 8;
    double lr = 1e-3;
    uint64_t seed = 1;
    // optional per-epoch dev score; when present the best-scoring epoch's
    // parameters are returned
    std::function<double(size_t epoch, const ParamSet& params)> dev_score;
    double stop_at_dev_score = -1.0;  // early stop once reached (<0 = never)
    bool verbose = false;
};

struct TrainResult {
    ParamSet params;
    std::vector<double> epoch_loss;
    std::vector<double> dev_scores;
    size_t best_epoch = 0;
};

TrainResult train(const std::vector<TrainingExample>& examples, const ModelConfig& config,
                  const TrainOptions& opts);

// ---- O(NM) pairwise baseline ----------------------------------------------
// Stage 1 proposes candidate AE spans with a drug-agnostic token classifier.
// Stage 2 re-runs the encoder once per (candidate, drug) pair with marker
// embeddings added at the pair's positions, then classifies the pooled pair.

ParamSet init_ner_params(const ModelConfig& config);
ParamSet init_re_params(const ModelConfig& config);

Tensor ner_token_probs(const std::vector<int>& ids, const ParamSet& ner_params,
                       const ModelConfig& config);

double re_pair_prob(const std::vector<int>& ids, const std::vector<size_t>& ae_tokens,
                    const std::vector<size_t>& drug_tokens, const ParamSet& re_params,
                    const ModelConfig& config);

struct NerExample {
    std::vector<int> ids;
    std::vector<double> labels;
};
struct ReExample {
    std::vector<int> ids;
    std::vector<size_t> ae_tokens;
    std::vector<size_t> drug_tokens;
    double label = 0.0;
};

double ner_example_loss(const NerExample& ex, ParamSet& params, const ModelConfig& config,
                        bool accumulate);
double re_example_loss(const ReExample& ex, ParamSet& params, const ModelConfig& config,
                       bool accumulate);

TrainResult train_ner(const std::vector<NerExample>& examples, const ModelConfig& config,
                      const TrainOptions& opts);
TrainResult train_re(const std::vector<ReExample>& examples, const ModelConfig& config,
                     const TrainOptions& opts);

PredictResult pairwise_baseline_predict(const TokenizedSentence& ts,
                                        const ParamSet& ner_params,
                                        const ParamSet& re_params,
                                        const ModelConfig& config, const Vocab& vocab,
                                        double threshold = 0.5);

// Stage 2 alone: scores explicit candidate spans against every drug, one
// encoder pass per pair. encoder_passes counts only those pair passes.
PredictResult pairwise_score_candidates(const TokenizedSentence& ts,
                                        const std::vector<ScoredMention>& candidates,
                                        const ParamSet& re_params,
                                        const ModelConfig& config, const Vocab& vocab,
                                        double threshold = 0.5);

}  // namespace ade
