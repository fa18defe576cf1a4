#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ade/types.hpp"

namespace ade {

struct LexiconEntry {
    std::string concept_id;
    std::string preferred_name;
    std::vector<std::string> synonyms;
};

struct EmptyLexicon : std::runtime_error {
    EmptyLexicon() : std::runtime_error("lexicon has no entries") {}
};
struct EmptySurface : std::runtime_error {
    explicit EmptySurface(const std::string& concept_id)
        : std::runtime_error("entry " + concept_id +
                             " has an empty surface after normalization") {}
};

// Case-fold (ASCII), collapse internal whitespace runs to a single space,
// trim. No stemming.
std::string normalize_surface(const std::string& s);

// Immutable after build; safe for concurrent lookup.
class DrugTrie {
  public:
    // Lookup of a normalized surface; empty optional when absent.
    std::optional<std::string> lookup(const std::string& normalized) const;

    // Longest-match, word-boundary, case-insensitive scan. Returns
    // non-overlapping mentions sorted by start (leftmost-longest greedy).
    std::vector<Mention> find_mentions(const std::string& text) const;

    size_t surface_count() const { return surface_count_; }

  private:
    friend DrugTrie build_trie(const std::vector<LexiconEntry>& entries);

    struct Node {
        std::map<char, int> children;
        std::string concept_id;  // empty = non-terminal
    };
    std::vector<Node> nodes_{1};
    size_t surface_count_ = 0;

    void insert(const std::string& surface, const std::string& concept_id);
};

DrugTrie build_trie(const std::vector<LexiconEntry>& entries);

// TSV: concept_id <TAB> preferred_name <TAB> pipe-separated synonyms
// (third column optional).
std::vector<LexiconEntry> load_lexicon_tsv(const std::string& path);

}  // namespace ade
