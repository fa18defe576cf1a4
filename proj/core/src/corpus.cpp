#include "ade/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace ade {

uint64_t SplitMix::next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t SplitMix::below(uint64_t n) {
    // rejection sampling keeps the draw unbiased and platform-independent
    uint64_t threshold = (~uint64_t{0} - n + 1) % n;
    for (;;) {
        uint64_t r = next();
        if (r >= threshold) return r % n;
    }
}

double SplitMix::unit() {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0);
}

namespace {

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> kAbbrev = {
        "e.g.", "i.e.",  "i.v.", "i.m.",  "p.o.",   "b.i.d.", "t.i.d.",
        "q.d.", "dr.",   "mr.",  "mrs.",  "ms.",    "prof.",  "st.",
        "vs.",  "etc.",  "fig.", "figs.", "al.",    "ca.",    "approx.",
        "no.",  "vol.",  "resp.", "spp.", "cf.",
    };
    return kAbbrev;
}

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

// Token ending at the period at position i, lowercased, period included.
bool ends_with_abbreviation(const std::string& text, size_t i) {
    size_t k = i;
    while (k > 0) {
        unsigned char c = text[k - 1];
        if (std::isalnum(c) || c == '.') --k;
        else break;
    }
    if (k == i) return false;  // bare period
    std::string token = text.substr(k, i - k + 1);
    for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (abbreviations().count(token)) return true;
    // single uppercase letter reads as an initial ("J. Smith")
    if (i - k == 1 && std::isupper(static_cast<unsigned char>(text[k]))) return true;
    return false;
}

}  // namespace

std::vector<Sentence> split_sentences(const Document& doc) {
    if (doc.text.empty()) throw EmptyDocument(doc.doc_id);
    const std::string& text = doc.text;
    const size_t n = text.size();

    std::vector<Sentence> out;
    size_t sent_start = 0;
    auto emit = [&](size_t end) {
        size_t b = sent_start, e = end;
        while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b < e) {
            Sentence s;
            s.doc_id = doc.doc_id;
            s.sent_index = static_cast<int>(out.size());
            s.text = text.substr(b, e - b);
            s.doc_offset = b;
            out.push_back(std::move(s));
        }
        sent_start = end;
    };

    for (size_t i = 0; i < n; ++i) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        if (c == '.') {
            if (ends_with_abbreviation(text, i)) continue;
            bool digit_before = i > 0 && std::isdigit(static_cast<unsigned char>(text[i - 1]));
            bool digit_after = i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1]));
            if (digit_before && digit_after) continue;  // decimal number
        }
        size_t j = i + 1;
        while (j < n && (text[j] == ')' || text[j] == ']' || text[j] == '"' || text[j] == '\''))
            ++j;
        if (j == n || is_space(static_cast<unsigned char>(text[j]))) {
            emit(j);
            i = j > 0 ? j - 1 : 0;
        }
    }
    if (sent_start < n) emit(n);
    return out;
}

std::vector<Sentence> filter_drug_sentences(const std::vector<Sentence>& sents,
                                            const DrugTrie& trie) {
    std::vector<Sentence> out;
    for (const auto& s : sents) {
        auto mentions = trie.find_mentions(s.text);
        if (mentions.empty()) continue;
        Sentence kept = s;
        kept.drug_mentions = std::move(mentions);
        out.push_back(std::move(kept));
    }
    return out;
}

std::vector<Sentence> subsample(const std::vector<Sentence>& sents, size_t n,
                                uint64_t seed) {
    const size_t total = sents.size();
    const size_t k = std::min(n, total);
    std::vector<size_t> idx(total);
    for (size_t i = 0; i < total; ++i) idx[i] = i;
    SplitMix rng(seed);
    std::vector<Sentence> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + rng.below(total - i);
        std::swap(idx[i], idx[j]);
        out.push_back(sents[idx[i]]);
    }
    return out;
}

}  // namespace ade
