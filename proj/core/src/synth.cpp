#include "ade/synth.hpp"

#include <algorithm>
#include <stdexcept>

#include "ade/corpus.hpp"

namespace ade {

const std::vector<std::string>& synth_event_phrases() {
    static const std::vector<std::string> kPhrases = {
        "acute renal failure",      "severe thrombocytopenia", "hemorrhagic cystitis",
        "peripheral neuropathy",    "cardiac arrhythmia",      "interstitial pneumonitis",
        "hepatic dysfunction",      "febrile neutropenia",     "generalized skin rash",
        "persistent vomiting",      "acute pancreatitis",      "optic neuritis",
        "hemolytic anemia",         "pulmonary fibrosis",      "severe mucositis",
        "renal tubular acidosis",   "cerebral edema",          "prolonged myelosuppression",
        "atrial fibrillation",      "toxic epidermal necrolysis", "ototoxicity",
        "hyponatremia",             "rhabdomyolysis",          "congestive heart failure",
    };
    return kPhrases;
}

namespace {

const std::vector<std::string>& distractor_sentences() {
    static const std::vector<std::string> kDistractors = {
        "The patient was admitted with a three day history of fever.",
        "Laboratory tests were otherwise unremarkable.",
        "A chest radiograph showed no abnormality.",
        "The symptoms resolved after supportive care.",
        "Follow up at six weeks showed complete recovery.",
        "Past medical history was notable for hypertension.",
        "Vital signs on admission were within normal limits.",
    };
    return kDistractors;
}

// Accumulates one sentence, recording the byte spans of slot values.
class SentenceBuilder {
  public:
    SentenceBuilder& lit(const std::string& s) {
        text_ += s;
        return *this;
    }
    Mention slot(const std::string& value, const std::optional<std::string>& concept_id = {}) {
        Mention m;
        m.start = text_.size();
        text_ += value;
        m.end = text_.size();
        m.surface = value;
        m.concept_id = concept_id;
        return m;
    }
    const std::string& text() const { return text_; }

  private:
    std::string text_;
};

struct BuiltSentence {
    std::string text;
    // per drug: (drug mention, its event mentions)
    std::vector<std::pair<Mention, std::vector<Mention>>> relations;
};

// a name ending in a one-letter token ("amphotericin B") cannot sit directly
// before the sentence period: the splitter reads "B." as an initial
bool ends_with_initial(const std::string& s) {
    size_t end = s.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    size_t start = end;
    while (start > 0 && !std::isspace(static_cast<unsigned char>(s[start - 1]))) --start;
    return end - start <= 1;
}

BuiltSentence build_drug_sentence(const std::vector<LexiconEntry>& entries,
                                  const SynthConfig& cfg, SplitMix& rng) {
    const auto& phrases = synth_event_phrases();
    auto pick_drug = [&](size_t avoid) {
        size_t i;
        do {
            i = rng.below(entries.size());
        } while (entries.size() > 1 && i == avoid);
        return i;
    };
    auto pick_events = [&](size_t count, std::vector<size_t>& used) {
        std::vector<std::string> out;
        while (out.size() < count) {
            size_t i = rng.below(phrases.size());
            if (std::find(used.begin(), used.end(), i) != used.end()) continue;
            used.push_back(i);
            out.push_back(phrases[i]);
        }
        return out;
    };

    BuiltSentence bs;
    SentenceBuilder b;
    std::vector<size_t> used_events;

    const bool two_drugs = entries.size() > 1 && rng.unit() < cfg.two_drug_rate;
    if (two_drugs) {
        const size_t d1 = pick_drug(entries.size());
        const size_t d2 = pick_drug(d1);
        const auto& n1 = entries[d1];
        const auto& n2 = entries[d2];
        switch (rng.below(3)) {
            case 0: {
                // both drugs share both events: with a single encoder pass and
                // a linear head, per-drug logits within one sentence differ
                // only by a constant shift, so disjoint per-drug event sets
                // are not expressible and would poison training
                auto ev = pick_events(2, used_events);
                b.lit("Coadministration of ");
                Mention m1 = b.slot(n1.preferred_name, n1.concept_id);
                b.lit(" and ");
                Mention m2 = b.slot(n2.preferred_name, n2.concept_id);
                b.lit(" resulted in ");
                Mention e1 = b.slot(ev[0]);
                b.lit(" and ");
                Mention e2 = b.slot(ev[1]);
                b.lit(".");
                bs.relations.push_back({m1, {e1, e2}});
                bs.relations.push_back({m2, {e1, e2}});
                break;
            }
            case 1: {
                auto ev = pick_events(1, used_events);
                Mention m1 = b.slot(n1.preferred_name, n1.concept_id);
                b.lit(" caused ");
                Mention e1 = b.slot(ev[0]);
                b.lit(", and ");
                Mention m2 = b.slot(n2.preferred_name, n2.concept_id);
                b.lit(" was well tolerated.");
                bs.relations.push_back({m1, {e1}});
                bs.relations.push_back({m2, {}});
                break;
            }
            default: {
                auto ev = pick_events(1, used_events);
                b.lit("The patient developed ");
                Mention e1 = b.slot(ev[0]);
                b.lit(" after ");
                Mention m1 = b.slot(n1.preferred_name, n1.concept_id);
                b.lit(", while ");
                Mention m2 = b.slot(n2.preferred_name, n2.concept_id);
                b.lit(" therapy continued safely.");
                bs.relations.push_back({m1, {e1}});
                bs.relations.push_back({m2, {}});
                break;
            }
        }
        bs.text = b.text();
        return bs;
    }

    const size_t d1 = rng.below(entries.size());
    const auto& name = entries[d1];
    if (rng.unit() < cfg.no_event_rate) {
        switch (rng.below(3)) {
            case 0: {
                Mention m = b.slot(name.preferred_name, name.concept_id);
                b.lit(" was administered without complications.");
                bs.relations.push_back({m, {}});
                break;
            }
            case 1: {
                b.lit("No adverse events were observed during ");
                Mention m = b.slot(name.preferred_name, name.concept_id);
                b.lit(" therapy.");
                bs.relations.push_back({m, {}});
                break;
            }
            default: {
                b.lit("The patient remained stable on ");
                Mention m = b.slot(name.preferred_name, name.concept_id);
                b.lit(ends_with_initial(name.preferred_name) ? " therapy." : ".");
                bs.relations.push_back({m, {}});
                break;
            }
        }
        bs.text = b.text();
        return bs;
    }

    switch (rng.below(5)) {
        case 0: {
            auto ev = pick_events(2, used_events);
            b.lit("Treatment with ");
            Mention m = b.slot(name.preferred_name, name.concept_id);
            b.lit(" caused ");
            Mention e1 = b.slot(ev[0]);
            b.lit(" and ");
            Mention e2 = b.slot(ev[1]);
            b.lit(".");
            bs.relations.push_back({m, {e1, e2}});
            break;
        }
        case 1: {
            auto ev = pick_events(1, used_events);
            b.lit("Treatment with ");
            Mention m = b.slot(name.preferred_name, name.concept_id);
            b.lit(" caused ");
            Mention e1 = b.slot(ev[0]);
            b.lit(".");
            bs.relations.push_back({m, {e1}});
            break;
        }
        case 2: {
            auto ev = pick_events(1, used_events);
            Mention m = b.slot(name.preferred_name, name.concept_id);
            b.lit(" therapy resulted in ");
            Mention e1 = b.slot(ev[0]);
            b.lit(".");
            bs.relations.push_back({m, {e1}});
            break;
        }
        case 3: {
            auto ev = pick_events(1, used_events);
            b.lit("The patient developed ");
            Mention e1 = b.slot(ev[0]);
            b.lit(" after receiving ");
            Mention m = b.slot(name.preferred_name, name.concept_id);
            b.lit(ends_with_initial(name.preferred_name) ? " therapy." : ".");
            bs.relations.push_back({m, {e1}});
            break;
        }
        default: {
            auto ev = pick_events(2, used_events);
            Mention m = b.slot(name.preferred_name, name.concept_id);
            b.lit(" was discontinued because of ");
            Mention e1 = b.slot(ev[0]);
            b.lit(" and ");
            Mention e2 = b.slot(ev[1]);
            b.lit(".");
            bs.relations.push_back({m, {e1, e2}});
            break;
        }
    }
    bs.text = b.text();
    return bs;
}

}  // namespace

SynthCorpus synth_corpus(const std::vector<LexiconEntry>& entries, const SynthConfig& config) {
    if (entries.empty()) throw EmptyLexicon();
    SynthCorpus out;
    SplitMix rng(config.seed * 0x2545f4914f6cdd1dULL + 1);
    size_t produced = 0;
    size_t doc_counter = 0;

    while (produced < config.n_drug_sentences) {
        // a short abstract: 1-2 drug sentences plus optional distractors
        const size_t n_drug =
            std::min<size_t>(1 + rng.below(2), config.n_drug_sentences - produced);
        std::vector<std::string> texts;
        std::vector<int> origin;  // index into built, -1 for distractors
        std::vector<BuiltSentence> built;
        for (size_t i = 0; i < n_drug; ++i) {
            built.push_back(build_drug_sentence(entries, config, rng));
            texts.push_back(built.back().text);
            origin.push_back(static_cast<int>(i));
        }
        size_t n_distract = 0;
        if (rng.unit() < config.distractor_rate) n_distract = 1 + rng.below(2);
        for (size_t i = 0; i < n_distract; ++i) {
            size_t pos = rng.below(texts.size() + 1);
            texts.insert(texts.begin() + pos,
                         distractor_sentences()[rng.below(distractor_sentences().size())]);
            origin.insert(origin.begin() + pos, -1);
        }

        Document doc;
        char id[32];
        std::snprintf(id, sizeof(id), "doc%06zu", doc_counter++);
        doc.doc_id = id;
        for (size_t i = 0; i < texts.size(); ++i) {
            if (i) doc.text += " ";
            doc.text += texts[i];
        }

        // keys come from the splitter so curate output and gold stay aligned
        auto split = split_sentences(doc);
        if (split.size() != texts.size())
            throw std::runtime_error("synth template broke the sentence splitter: " + doc.text);
        for (size_t i = 0; i < split.size(); ++i) {
            if (split[i].text != texts[i])
                throw std::runtime_error("synth sentence text mismatch in " + doc.doc_id);
            if (origin[i] >= 0) {
                const auto& bsent = built[static_cast<size_t>(origin[i])];
                for (const auto& [drug, events] : bsent.relations) {
                    AdeAnnotation ann;
                    ann.key = {doc.doc_id, split[i].sent_index};
                    ann.drug = drug;
                    ann.events = events;
                    ann.provenance = Provenance::Gold;
                    out.gold.push_back(std::move(ann));
                }
            }
        }
        produced += n_drug;
        out.documents.push_back(std::move(doc));
    }
    return out;
}

}  // namespace ade
