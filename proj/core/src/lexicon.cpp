#include "ade/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ade {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace

std::string normalize_surface(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = s[i];
        if (is_space(c)) {
            while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
            if (!out.empty() && i < s.size()) out.push_back(' ');
        } else {
            out.push_back(static_cast<char>(std::tolower(c)));
            ++i;
        }
    }
    return out;
}

void DrugTrie::insert(const std::string& surface, const std::string& concept_id) {
    int cur = 0;
    for (char c : surface) {
        auto it = nodes_[cur].children.find(c);
        if (it == nodes_[cur].children.end()) {
            nodes_.emplace_back();
            it = nodes_[cur].children.emplace(c, static_cast<int>(nodes_.size()) - 1).first;
        }
        cur = it->second;
    }
    // On a shared surface the lexicographically smallest concept_id wins.
    if (nodes_[cur].concept_id.empty()) {
        nodes_[cur].concept_id = concept_id;
        ++surface_count_;
    } else if (concept_id < nodes_[cur].concept_id) {
        nodes_[cur].concept_id = concept_id;
    }
}

std::optional<std::string> DrugTrie::lookup(const std::string& normalized) const {
    int cur = 0;
    for (char c : normalized) {
        auto it = nodes_[cur].children.find(c);
        if (it == nodes_[cur].children.end()) return std::nullopt;
        cur = it->second;
    }
    if (nodes_[cur].concept_id.empty()) return std::nullopt;
    return nodes_[cur].concept_id;
}

std::vector<Mention> DrugTrie::find_mentions(const std::string& text) const {
    std::vector<Mention> out;
    const size_t n = text.size();
    size_t pos = 0;
    while (pos < n) {
        bool boundary_before =
            pos == 0 || !is_alnum(static_cast<unsigned char>(text[pos - 1]));
        if (!boundary_before || is_space(static_cast<unsigned char>(text[pos]))) {
            ++pos;
            continue;
        }
        // Walk the trie feeding normalized characters; whitespace runs in the
        // text collapse to a single space. Track the longest valid terminal.
        int cur = 0;
        size_t j = pos;
        size_t best_end = 0;
        const std::string* best_id = nullptr;
        while (j < n) {
            unsigned char c = text[j];
            size_t next_j;
            char key;
            if (is_space(c)) {
                next_j = j;
                while (next_j < n && is_space(static_cast<unsigned char>(text[next_j])))
                    ++next_j;
                key = ' ';
            } else {
                next_j = j + 1;
                key = static_cast<char>(std::tolower(c));
            }
            auto it = nodes_[cur].children.find(key);
            if (it == nodes_[cur].children.end()) break;
            cur = it->second;
            j = next_j;
            if (!nodes_[cur].concept_id.empty() &&
                (j == n || !is_alnum(static_cast<unsigned char>(text[j])))) {
                best_end = j;
                best_id = &nodes_[cur].concept_id;
            }
        }
        if (best_id) {
            Mention m;
            m.start = pos;
            m.end = best_end;
            m.surface = text.substr(pos, best_end - pos);
            m.concept_id = *best_id;
            out.push_back(std::move(m));
            pos = best_end;
        } else {
            ++pos;
        }
    }
    return out;
}

DrugTrie build_trie(const std::vector<LexiconEntry>& entries) {
    if (entries.empty()) throw EmptyLexicon();
    DrugTrie trie;
    for (const auto& e : entries) {
        std::vector<std::string> surfaces;
        surfaces.push_back(normalize_surface(e.preferred_name));
        for (const auto& s : e.synonyms) surfaces.push_back(normalize_surface(s));
        std::sort(surfaces.begin(), surfaces.end());
        surfaces.erase(std::unique(surfaces.begin(), surfaces.end()), surfaces.end());
        for (const auto& s : surfaces) {
            if (s.empty()) throw EmptySurface(e.concept_id);
            trie.insert(s, e.concept_id);
        }
    }
    return trie;
}

std::vector<LexiconEntry> load_lexicon_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open lexicon file: " + path);
    std::vector<LexiconEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        LexiconEntry e;
        std::string syn_col;
        if (!std::getline(ss, e.concept_id, '\t')) continue;
        if (!std::getline(ss, e.preferred_name, '\t'))
            throw std::runtime_error("malformed lexicon line: " + line);
        if (std::getline(ss, syn_col, '\t')) {
            std::istringstream syns(syn_col);
            std::string s;
            while (std::getline(syns, s, '|'))
                if (!s.empty()) e.synonyms.push_back(s);
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace ade
