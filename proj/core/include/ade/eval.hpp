#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ade/types.hpp"

namespace ade {

enum class MatchMode { Strict, Lenient };

const char* match_mode_name(MatchMode mode);

struct SentenceSetMismatch : std::runtime_error {
    explicit SentenceSetMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct TooFewItems : std::runtime_error {
    TooFewItems() : std::runtime_error("fewer items than folds") {}
};

struct EvalReport {
    size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    MatchMode mode = MatchMode::Lenient;
};

EvalReport finalize_counts(size_t tp, size_t fp, size_t fn, MatchMode mode);

// End-to-end scoring over (sentence, drug mention, event span) triples. The
// drug must match exactly; the event span per mode (Strict: exact bounds,
// Lenient: >= 1 byte overlap). One-to-one matching within each
// (sentence, drug) group, maximizing matched pairs; duplicate gold triples
// are deduplicated first. Micro-averaged.
EvalReport score(const std::vector<AdeAnnotation>& preds,
                 const std::vector<AdeAnnotation>& golds, MatchMode mode);

// Same, but every annotation key must belong to `universe`.
EvalReport score_with_universe(const std::vector<AdeAnnotation>& preds,
                               const std::vector<AdeAnnotation>& golds, MatchMode mode,
                               const std::set<SentenceKey>& universe);

std::string report_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

// Seeded shuffle, then train = floor(0.8 n), dev = floor(0.1 n),
// test = remainder. Returns index triples into the input order.
struct SplitIndices {
    std::vector<size_t> train, dev, test;
};
SplitIndices split_8_1_1(size_t n, uint64_t seed);

// Seeded shuffle into k folds, the first n mod k folds one element larger.
// Pair i = (all - fold_i, fold_i).
struct FoldIndices {
    std::vector<size_t> train, test;
};
std::vector<FoldIndices> kfold(size_t n, size_t k, uint64_t seed);

// Learning-curve harness: nested seeded subsets of the training indices
// (smaller subset of larger), one full training run per size. The trainer
// receives the subset and returns the test F1.
struct LearningCurvePoint {
    size_t size = 0;
    double f1 = 0.0;
};
std::vector<LearningCurvePoint> learning_curve(
    size_t train_size, const std::vector<size_t>& sizes, uint64_t seed,
    const std::function<double(const std::vector<size_t>& train_subset)>& trainer);

}  // namespace ade
