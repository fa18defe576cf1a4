#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ade/lexicon.hpp"
#include "ade/types.hpp"

namespace ade {

struct EmptyDocument : std::runtime_error {
    explicit EmptyDocument(const std::string& doc_id)
        : std::runtime_error("document " + doc_id + " has empty text") {}
};

// Rule-based splitter: terminal '.', '!', '?' close a sentence unless the
// period ends a known abbreviation or sits inside a decimal number.
// Sentences are trimmed; doc_offset records where each one starts so the
// document text round-trips through (offset, text) pairs.
std::vector<Sentence> split_sentences(const Document& doc);

// Keeps exactly the sentences with at least one trie mention, in input
// order, with drug_mentions populated.
std::vector<Sentence> filter_drug_sentences(const std::vector<Sentence>& sents,
                                            const DrugTrie& trie);

// Seeded partial Fisher-Yates draw of min(n, |sents|) without replacement.
std::vector<Sentence> subsample(const std::vector<Sentence>& sents, size_t n,
                                uint64_t seed);

// Deterministic bounded uniform draw in [0, n). Rejection sampling over
// mt19937_64 output so results are identical across platforms.
class SplitMix {
  public:
    explicit SplitMix(uint64_t seed) : state_(seed) {}
    uint64_t next();
    // uniform in [0, n), n >= 1
    uint64_t below(uint64_t n);
    double unit();  // uniform in [0, 1)

  private:
    uint64_t state_;
};

}  // namespace ade
