#include "ade/eval.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "ade/corpus.hpp"

namespace ade {

const char* match_mode_name(MatchMode mode) {
    return mode == MatchMode::Strict ? "strict" : "lenient";
}

EvalReport finalize_counts(size_t tp, size_t fp, size_t fn, MatchMode mode) {
    EvalReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.mode = mode;
    r.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = (r.precision + r.recall > 0.0)
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
    return r;
}

namespace {

struct Span {
    size_t start, end;
    bool operator<(const Span& o) const {
        return std::tie(start, end) < std::tie(o.start, o.end);
    }
    bool operator==(const Span& o) const { return start == o.start && end == o.end; }
};

using GroupKey = std::tuple<std::string, int, size_t, size_t>;  // doc, sent, drug span

size_t overlap_len(const Span& a, const Span& b) {
    const size_t lo = std::max(a.start, b.start);
    const size_t hi = std::min(a.end, b.end);
    return hi > lo ? hi - lo : 0;
}

bool span_matches(const Span& pred, const Span& gold, MatchMode mode) {
    if (mode == MatchMode::Strict) return pred == gold;
    return overlap_len(pred, gold) >= 1;
}

// Maximum one-to-one matching via augmenting paths. Predictions are
// processed in ascending start order; each tries golds in descending
// overlap (ties to the earlier gold), so the chosen pairing is
// deterministic while the matched count stays maximal.
size_t match_group(std::vector<Span> preds, std::vector<Span> golds, MatchMode mode) {
    std::sort(preds.begin(), preds.end());
    std::sort(golds.begin(), golds.end());
    std::vector<int> gold_owner(golds.size(), -1);

    std::function<bool(size_t, std::vector<bool>&)> try_assign =
        [&](size_t p, std::vector<bool>& visited) -> bool {
        std::vector<size_t> order;
        for (size_t g = 0; g < golds.size(); ++g)
            if (!visited[g] && span_matches(preds[p], golds[g], mode)) order.push_back(g);
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return overlap_len(preds[p], golds[a]) > overlap_len(preds[p], golds[b]);
        });
        for (size_t g : order) {
            visited[g] = true;
            if (gold_owner[g] < 0 ||
                try_assign(static_cast<size_t>(gold_owner[g]), visited)) {
                gold_owner[g] = static_cast<int>(p);
                return true;
            }
        }
        return false;
    };

    size_t matched = 0;
    for (size_t p = 0; p < preds.size(); ++p) {
        std::vector<bool> visited(golds.size(), false);
        if (try_assign(p, visited)) ++matched;
    }
    return matched;
}

std::map<GroupKey, std::vector<Span>> collect_triples(const std::vector<AdeAnnotation>& anns,
                                                      bool dedup) {
    std::map<GroupKey, std::vector<Span>> groups;
    for (const auto& a : anns) {
        GroupKey key{a.key.doc_id, a.key.sent_index, a.drug.start, a.drug.end};
        auto& spans = groups[key];
        for (const auto& ev : a.events) spans.push_back({ev.start, ev.end});
    }
    for (auto& [_, spans] : groups) {
        std::sort(spans.begin(), spans.end());
        if (dedup) spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
    }
    return groups;
}

}  // namespace

EvalReport score(const std::vector<AdeAnnotation>& preds,
                 const std::vector<AdeAnnotation>& golds, MatchMode mode) {
    auto pred_groups = collect_triples(preds, false);
    auto gold_groups = collect_triples(golds, true);

    size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [key, pred_spans] : pred_groups) {
        auto git = gold_groups.find(key);
        if (git == gold_groups.end()) {
            fp += pred_spans.size();
            continue;
        }
        const size_t matched = match_group(pred_spans, git->second, mode);
        tp += matched;
        fp += pred_spans.size() - matched;
        fn += git->second.size() - matched;
    }
    for (const auto& [key, gold_spans] : gold_groups)
        if (!pred_groups.count(key)) fn += gold_spans.size();
    return finalize_counts(tp, fp, fn, mode);
}

EvalReport score_with_universe(const std::vector<AdeAnnotation>& preds,
                               const std::vector<AdeAnnotation>& golds, MatchMode mode,
                               const std::set<SentenceKey>& universe) {
    for (const auto& a : preds)
        if (!universe.count(a.key))
            throw SentenceSetMismatch("prediction references unknown sentence " + a.key.doc_id +
                                      ":" + std::to_string(a.key.sent_index));
    for (const auto& a : golds)
        if (!universe.count(a.key))
            throw SentenceSetMismatch("gold references unknown sentence " + a.key.doc_id + ":" +
                                      std::to_string(a.key.sent_index));
    return score(preds, golds, mode);
}

std::string report_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
    std::ostringstream ss;
    ss << "name                 mode     tp     fp     fn   precision  recall      f1\n";
    char buf[160];
    for (const auto& [name, r] : rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %-7s %6zu %6zu %6zu   %8.4f %8.4f %8.4f\n",
                      name.c_str(), match_mode_name(r.mode), r.tp, r.fp, r.fn, r.precision,
                      r.recall, r.f1);
        ss << buf;
    }
    return ss.str();
}

namespace {

std::vector<size_t> shuffled_indices(size_t n, uint64_t seed) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    SplitMix rng(seed);
    for (size_t i = 0; i + 1 < n; ++i) {
        size_t j = i + rng.below(n - i);
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

}  // namespace

SplitIndices split_8_1_1(size_t n, uint64_t seed) {
    auto idx = shuffled_indices(n, seed);
    const size_t n_train = n * 8 / 10;
    const size_t n_dev = n / 10;
    SplitIndices out;
    out.train.assign(idx.begin(), idx.begin() + n_train);
    out.dev.assign(idx.begin() + n_train, idx.begin() + n_train + n_dev);
    out.test.assign(idx.begin() + n_train + n_dev, idx.end());
    return out;
}

std::vector<FoldIndices> kfold(size_t n, size_t k, uint64_t seed) {
    if (k < 2 || n < k) throw TooFewItems();
    auto idx = shuffled_indices(n, seed);
    const size_t base = n / k;
    const size_t extra = n % k;
    std::vector<FoldIndices> out(k);
    size_t pos = 0;
    std::vector<std::pair<size_t, size_t>> bounds;
    for (size_t f = 0; f < k; ++f) {
        const size_t size = base + (f < extra ? 1 : 0);
        bounds.emplace_back(pos, pos + size);
        pos += size;
    }
    for (size_t f = 0; f < k; ++f) {
        auto [b, e] = bounds[f];
        out[f].test.assign(idx.begin() + b, idx.begin() + e);
        out[f].train.reserve(n - (e - b));
        for (size_t i = 0; i < n; ++i)
            if (i < b || i >= e) out[f].train.push_back(idx[i]);
    }
    return out;
}

std::vector<LearningCurvePoint> learning_curve(
    size_t train_size, const std::vector<size_t>& sizes, uint64_t seed,
    const std::function<double(const std::vector<size_t>&)>& trainer) {
    auto idx = shuffled_indices(train_size, seed);
    std::vector<LearningCurvePoint> out;
    for (size_t size : sizes) {
        const size_t take = std::min(size, train_size);
        std::vector<size_t> subset(idx.begin(), idx.begin() + take);
        out.push_back({take, trainer(subset)});
    }
    return out;
}

}  // namespace ade
