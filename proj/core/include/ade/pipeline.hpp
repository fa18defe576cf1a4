#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ade/eval.hpp"
#include "ade/model.hpp"
#include "ade/teacher.hpp"
#include "ade/types.hpp"

namespace ade {

// End-to-end run settings shared by the CLI and the test harnesses.
struct PipelineOptions {
    ModelConfig model;        // vocab_size is filled in from the data
    TrainOptions train;
    double threshold = 0.5;
    uint64_t split_seed = 1;  // 8/1/1 sentence split
};

struct PipelineResult {
    ParamSet params;
    Vocab vocab;
    SplitIndices split;       // indices into the input sentence order
    EvalReport dev_lenient;   // best epoch, student vs training labels
    EvalReport test_lenient;  // student vs gold
    EvalReport test_strict;
    std::vector<double> epoch_loss;
    size_t best_epoch = 0;
    size_t train_examples = 0;
};

// Annotations whose keys fall in `keys`, order preserved.
std::vector<AdeAnnotation> filter_annotations(const std::vector<AdeAnnotation>& anns,
                                              const std::set<SentenceKey>& keys);

std::set<SentenceKey> keys_of(const std::vector<Sentence>& sents);

// Unified-model inference over whole sentences.
std::vector<AdeAnnotation> predict_annotations(const std::vector<Sentence>& sents,
                                               const ParamSet& params, const Vocab& vocab,
                                               const ModelConfig& config, double threshold);

// Splits sentences 8/1/1, trains the unified model on `labels` (gold or
// teacher output; sentences without any label annotation contribute no
// training examples), selects the best epoch by dev F1 against `labels`,
// and scores the result on the test split against `gold`.
PipelineResult train_and_eval(const std::vector<Sentence>& sentences,
                              const std::vector<AdeAnnotation>& labels,
                              const std::vector<AdeAnnotation>& gold,
                              const PipelineOptions& opts);

struct DistillOptions {
    AnnotateOptions annotate;
    size_t pool_size = 40000;
    uint64_t pool_seed = 1;
    PipelineOptions pipe;
};

struct DistillReport {
    size_t sentences_in = 0;
    size_t responses = 0;
    size_t failed = 0;
    size_t positive = 0;      // sentences with >= 1 grounded event
    size_t pooled = 0;        // after subsampling to pool_size
    GroundingStats grounding;
    EvalReport teacher_test_lenient;  // teacher labels vs gold on the test split
    EvalReport teacher_test_strict;
    PipelineResult student;
};

// The full self-supervision chain: teacher labels everything, labels are
// grounded and filtered to positive sentences, subsampled to the pool size,
// and a student is trained on them. Teacher and student are scored against
// the same held-out gold test split.
DistillReport distill_run(const std::vector<Sentence>& sentences,
                          const std::vector<AdeAnnotation>& gold, TeacherClient& client,
                          const DistillOptions& opts);

}  // namespace ade
