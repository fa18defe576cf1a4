#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace ade {

// Byte-offset entity span. Offsets index into the UTF-8 sentence text,
// start inclusive, end exclusive.
struct Mention {
    size_t start = 0;
    size_t end = 0;
    std::string surface;
    std::optional<std::string> concept_id;

    bool operator==(const Mention& o) const {
        return start == o.start && end == o.end && surface == o.surface &&
               concept_id == o.concept_id;
    }
};

struct Document {
    std::string doc_id;
    std::string text;
};

struct Sentence {
    std::string doc_id;
    int sent_index = 0;
    std::string text;
    // Byte offset of this sentence within the source document text.
    size_t doc_offset = 0;
    std::vector<Mention> drug_mentions;
};

struct SentenceKey {
    std::string doc_id;
    int sent_index = 0;

    bool operator==(const SentenceKey& o) const {
        return doc_id == o.doc_id && sent_index == o.sent_index;
    }
    bool operator<(const SentenceKey& o) const {
        return std::tie(doc_id, sent_index) < std::tie(o.doc_id, o.sent_index);
    }
};

enum class Provenance { Teacher, Gold, Mock };

// One drug mention plus the adverse-event mentions it causes, inside one
// sentence. Events are deduplicated by (start, end).
struct AdeAnnotation {
    SentenceKey key;
    Mention drug;
    std::vector<Mention> events;
    Provenance provenance = Provenance::Gold;
};

}  // namespace ade
