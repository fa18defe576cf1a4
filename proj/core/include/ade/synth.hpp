#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ade/lexicon.hpp"
#include "ade/types.hpp"

namespace ade {

struct SynthConfig {
    size_t n_drug_sentences = 2000;  // sentences containing >= 1 drug
    uint64_t seed = 1;
    double distractor_rate = 0.25;   // extra drug-free sentences per document
    double two_drug_rate = 0.3;
    double no_event_rate = 0.2;      // drug sentences with no ADE
};

struct SynthCorpus {
    std::vector<Document> documents;
    std::vector<AdeAnnotation> gold;  // one per (sentence, drug mention)
};

// Template-based generator over a closed vocabulary: drug slots from the
// lexicon, adverse-event noun phrases from a fixed inventory, with
// distractor sentences mixed in. Gold spans are verbatim surfaces; each
// drug name and event phrase appears at most once per sentence so spans
// ground back exactly.
SynthCorpus synth_corpus(const std::vector<LexiconEntry>& entries, const SynthConfig& config);

// The generator's adverse-event phrase inventory (fixed, for reuse in tests).
const std::vector<std::string>& synth_event_phrases();

}  // namespace ade
