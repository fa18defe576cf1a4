#include "ade/teacher.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "ade/corpus.hpp"
#include "ade/io.hpp"
#include "ade/lexicon.hpp"

namespace ade {

namespace {

constexpr const char* kInstruction =
    "Extract the adverse events each drug causes in the Message. "
    "If no ADE is found, return None.";

struct FewShotExample {
    const char* message;
    const char* annotations;
};

constexpr FewShotExample kFewShotExamples[5] = {
    {"We postulate that the bolus of sulprostone resulted in possible coronary "
     "spasm that resulted in cardiac arrest.",
     "sulprostone: cardiac arrest|coronary spasm"},
    {"In each of the three reported patients, alteration of eyelid appearance "
     "with deepening of the lid sulcus was evident as the result of topical "
     "bimatoprost therapy.",
     "bimatoprost: alteration of eyelid appearance|deepening of the lid sulcus"},
    {"Immobilization, while Paget's bone disease was present, and perhaps "
     "enhanced activation of dihydrotachysterol by rifampicin, could have led "
     "to increased calcium - release into the circulation.",
     "dihydrotachysterol: increased calcium - release"},
    {"In two patients clozapine was reinstated after risperidone was "
     "discontinued; serum triglyceride levels increased.",
     "clozapine: serum triglyceride levels increased"},
    {"The cause of these previously unreported side effects of niacin therapy "
     "is uncertain but may be related to prostaglandin - mediated "
     "vasodilatation, hyperalgesia of sensory nerve receptors, and "
     "potentiation of inflammation in the gingiva with referral of pain to "
     "the teeth.",
     "niacin: hyperalgesia of sensory nerve receptors|pain to the "
     "teeth|potentiation of inflammation in the gingiva|prostaglandin - "
     "mediated vasodilatation"},
};

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(const std::string& s) {
    std::string out = s;
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// deterministic across platforms, unlike std::hash
uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

const char* prompt_mode_name(PromptMode mode) {
    return mode == PromptMode::ZeroShot ? "zero" : "few";
}

std::string build_prompt(const std::string& sentence_text, PromptMode mode) {
    if (sentence_text.empty()) throw EmptySentenceError();
    std::string out = kInstruction;
    out += "\n\n";
    if (mode == PromptMode::FewShot5) {
        for (int i = 0; i < 5; ++i) {
            out += "Example " + std::to_string(i + 1) + ":\n";
            out += "Message: ";
            out += kFewShotExamples[i].message;
            out += "\nAnnotations: ";
            out += kFewShotExamples[i].annotations;
            out += "\n\n";
        }
    }
    out += "Message: " + sentence_text + "\nAnnotations:";
    return out;
}

ParseResult parse_response(const std::string& raw) {
    ParseResult result;
    if (lower(trim(raw)) == "none") return result;
    size_t pos = 0;
    while (pos <= raw.size()) {
        size_t nl = raw.find('\n', pos);
        std::string line = raw.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? raw.size() + 1 : nl + 1;
        line = trim(line);
        if (line.empty()) continue;
        size_t colon = line.find(':');
        if (colon == std::string::npos) {
            ++result.malformed_lines;
            continue;
        }
        std::string drug = trim(line.substr(0, colon));
        std::vector<std::string> events;
        std::string rest = line.substr(colon + 1);
        size_t p = 0;
        while (p <= rest.size()) {
            size_t bar = rest.find('|', p);
            std::string ev =
                trim(rest.substr(p, bar == std::string::npos ? std::string::npos : bar - p));
            p = bar == std::string::npos ? rest.size() + 1 : bar + 1;
            if (!ev.empty()) events.push_back(std::move(ev));
        }
        if (drug.empty() || events.empty()) {
            ++result.malformed_lines;
            continue;
        }
        auto& slot = result.entries[drug];
        for (auto& ev : events)
            if (std::find(slot.begin(), slot.end(), ev) == slot.end())
                slot.push_back(std::move(ev));
    }
    return result;
}

std::string render_response(const ParsedMap& parsed) {
    if (parsed.empty()) return "None";
    std::string out;
    for (const auto& [drug, events] : parsed) {
        out += drug + ": ";
        for (size_t i = 0; i < events.size(); ++i) {
            if (i) out += '|';
            out += events[i];
        }
        out += '\n';
    }
    if (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

namespace {

// All non-overlapping case-insensitive occurrences, leftmost first.
std::vector<Mention> find_all_occurrences(const std::string& text, const std::string& needle) {
    std::vector<Mention> out;
    if (needle.empty()) return out;
    std::string lt = lower(text), ln = lower(needle);
    size_t pos = 0;
    while ((pos = lt.find(ln, pos)) != std::string::npos) {
        Mention m;
        m.start = pos;
        m.end = pos + needle.size();
        m.surface = text.substr(pos, needle.size());
        out.push_back(std::move(m));
        pos += needle.size();
    }
    return out;
}

}  // namespace

GroundedSentence ground_spans(const Sentence& sentence, const ParsedMap& parsed,
                              Provenance provenance) {
    GroundedSentence out;
    out.sentence = sentence;
    for (const auto& [drug_str, events] : parsed) {
        const std::string norm_drug = normalize_surface(drug_str);
        std::vector<const Mention*> matches;
        for (const auto& dm : sentence.drug_mentions)
            if (normalize_surface(dm.surface) == norm_drug) matches.push_back(&dm);

        // event occurrences are tallied whether or not the drug grounds,
        // so grounded_events + hallucinations == parsed event strings
        std::vector<Mention> event_mentions;
        for (const auto& ev : events) {
            auto occ = find_all_occurrences(sentence.text, ev);
            if (occ.empty()) {
                ++out.stats.hallucinations;
            } else {
                ++out.stats.grounded_events;
                event_mentions.insert(event_mentions.end(), occ.begin(), occ.end());
            }
        }
        if (matches.empty()) {
            ++out.stats.ungrounded_drugs;
            continue;
        }
        ++out.stats.grounded_drugs;

        std::sort(event_mentions.begin(), event_mentions.end(),
                  [](const Mention& a, const Mention& b) {
                      return std::tie(a.start, a.end) < std::tie(b.start, b.end);
                  });
        event_mentions.erase(std::unique(event_mentions.begin(), event_mentions.end(),
                                         [](const Mention& a, const Mention& b) {
                                             return a.start == b.start && a.end == b.end;
                                         }),
                             event_mentions.end());
        for (const Mention* dm : matches) {
            AdeAnnotation ann;
            ann.key = {sentence.doc_id, sentence.sent_index};
            ann.drug = *dm;
            ann.events = event_mentions;
            ann.provenance = provenance;
            out.annotations.push_back(std::move(ann));
        }
    }
    return out;
}

std::vector<GroundedSentence> filter_positive(const std::vector<GroundedSentence>& in) {
    std::vector<GroundedSentence> out;
    for (const auto& gs : in) {
        bool positive = std::any_of(gs.annotations.begin(), gs.annotations.end(),
                                    [](const AdeAnnotation& a) { return !a.events.empty(); });
        if (positive) out.push_back(gs);
    }
    return out;
}

namespace {

struct Token {
    size_t start, end;
};

std::vector<Token> whitespace_tokens(const std::string& text) {
    std::vector<Token> toks;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        size_t b = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > b) toks.push_back({b, i});
    }
    return toks;
}

}  // namespace

TeacherResponse mock_teacher(const Sentence& sentence,
                             const std::vector<AdeAnnotation>& gold,
                             const NoiseConfig& noise) {
    SplitMix rng(noise.seed ^ fnv1a(sentence.doc_id + ":" + std::to_string(sentence.sent_index)));
    const auto toks = whitespace_tokens(sentence.text);

    ParsedMap parsed;
    for (const auto& ann : gold) {
        std::vector<std::string> events;
        for (const auto& ev : ann.events) {
            if (rng.unit() < noise.drop_rate) continue;
            size_t s = ev.start, e = ev.end;
            if (rng.unit() < noise.jitter_rate && !toks.empty()) {
                // locate the token range covering [s, e)
                size_t first = 0, last = 0;
                for (size_t t = 0; t < toks.size(); ++t) {
                    if (toks[t].end <= s) first = t + 1;
                    if (toks[t].start < e) last = t;
                }
                if (first <= last) {
                    switch (rng.below(4)) {
                        case 0:  // expand left
                            if (first > 0) s = toks[first - 1].start;
                            break;
                        case 1:  // expand right
                            if (last + 1 < toks.size()) e = toks[last + 1].end;
                            break;
                        case 2:  // shrink left
                            if (first < last) s = toks[first + 1].start;
                            break;
                        default:  // shrink right
                            if (first < last) e = toks[last - 1].end;
                            break;
                    }
                }
            }
            events.push_back(sentence.text.substr(s, e - s));
        }
        if (!toks.empty() && rng.unit() < noise.spurious_rate) {
            size_t len = 1 + rng.below(3);
            size_t first = rng.below(toks.size());
            size_t last = std::min(first + len - 1, toks.size() - 1);
            events.push_back(
                sentence.text.substr(toks[first].start, toks[last].end - toks[first].start));
        }
        if (events.empty()) continue;
        auto& slot = parsed[ann.drug.surface];
        for (auto& ev : events)
            if (std::find(slot.begin(), slot.end(), ev) == slot.end())
                slot.push_back(std::move(ev));
    }

    TeacherResponse resp;
    resp.key = {sentence.doc_id, sentence.sent_index};
    resp.raw = render_response(parsed);
    resp.parsed = std::move(parsed);
    return resp;
}

MockTeacherClient::MockTeacherClient(const std::vector<Sentence>& sentences,
                                     const std::vector<AdeAnnotation>& gold,
                                     const NoiseConfig& noise)
    : noise_(noise) {
    for (const auto& s : sentences) by_text_[s.text].sentence = s;
    for (const auto& a : gold) {
        for (auto& [text, entry] : by_text_) {
            if (entry.sentence.doc_id == a.key.doc_id &&
                entry.sentence.sent_index == a.key.sent_index) {
                entry.gold.push_back(a);
                break;
            }
        }
    }
}

std::string MockTeacherClient::model_name() const {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mock-d%g-s%g-j%g-r%llu", noise_.drop_rate,
                  noise_.spurious_rate, noise_.jitter_rate,
                  static_cast<unsigned long long>(noise_.seed));
    return buf;
}

std::string MockTeacherClient::complete(const std::string& prompt) {
    static std::mutex mu;
    {
        std::lock_guard<std::mutex> lock(mu);
        ++calls_;
    }
    const std::string marker = "Message: ";
    size_t pos = prompt.rfind(marker);
    if (pos == std::string::npos) throw PermanentTeacherError("prompt has no Message line");
    size_t end = prompt.find("\nAnnotations:", pos);
    std::string text = prompt.substr(pos + marker.size(),
                                     end == std::string::npos ? std::string::npos
                                                              : end - pos - marker.size());
    auto it = by_text_.find(text);
    if (it == by_text_.end()) return "None";
    return mock_teacher(it->second.sentence, it->second.gold, noise_).raw;
}

HttpTeacherClient::HttpTeacherClient(std::string base_url, std::string model)
    : base_url_(std::move(base_url)), model_(std::move(model)) {
    const char* key = std::getenv("TEACHER_API_KEY");
    if (!key || !*key)
        throw std::runtime_error("TEACHER_API_KEY is not set (required for the real teacher)");
    api_key_ = key;
}

std::string HttpTeacherClient::request_body(const std::string& prompt) const {
    json body{{"model", model_},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", 0.0}};
    return body.dump();
}

std::string HttpTeacherClient::complete(const std::string& prompt) {
    httplib::Client cli(base_url_);
    cli.set_connection_timeout(30);
    cli.set_read_timeout(120);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto res = cli.Post("/v1/chat/completions", headers, request_body(prompt),
                        "application/json");
    if (!res) throw TransientTeacherError("no response from " + base_url_);
    if (res->status == 429 || res->status >= 500)
        throw TransientTeacherError("status " + std::to_string(res->status));
    if (res->status != 200)
        throw PermanentTeacherError("status " + std::to_string(res->status) + ": " + res->body);
    auto j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
}

AnnotateResult annotate(const std::vector<Sentence>& sents, TeacherClient& client,
                        const AnnotateOptions& options) {
    namespace fs = std::filesystem;
    if (!options.cache_dir.empty()) fs::create_directories(options.cache_dir);

    struct Slot {
        bool ok = false;
        TeacherResponse resp;
    };
    std::vector<Slot> slots(sents.size());
    AnnotateResult result;
    std::mutex mu;
    std::atomic<size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= sents.size()) return;
            const Sentence& s = sents[i];
            const std::string prompt = build_prompt(s.text, options.mode);
            const std::string key = sha256_hex(prompt + "\x1f" + prompt_mode_name(options.mode) +
                                               "\x1f" + client.model_name());
            const fs::path cache_path =
                options.cache_dir.empty() ? fs::path{} : fs::path(options.cache_dir) / (key + ".txt");

            std::string raw;
            bool have = false;
            if (!cache_path.empty() && fs::exists(cache_path)) {
                raw = read_file(cache_path.string());
                have = true;
                std::lock_guard<std::mutex> lock(mu);
                ++result.cache_hits;
            }
            if (!have) {
                for (size_t attempt = 0; attempt <= options.max_retries; ++attempt) {
                    try {
                        {
                            std::lock_guard<std::mutex> lock(mu);
                            ++result.client_calls;
                        }
                        raw = client.complete(prompt);
                        have = true;
                        break;
                    } catch (const TransientTeacherError&) {
                        if (attempt == options.max_retries) break;
                        std::this_thread::sleep_for(std::chrono::milliseconds(
                            options.backoff_base_ms << attempt));
                    } catch (const PermanentTeacherError&) {
                        break;
                    }
                }
                if (have && !cache_path.empty()) {
                    std::lock_guard<std::mutex> lock(mu);
                    atomic_write(cache_path.string(), raw);
                }
            }
            if (!have) {
                std::lock_guard<std::mutex> lock(mu);
                result.failed.push_back({s.doc_id, s.sent_index});
                continue;
            }
            auto parsed = parse_response(raw);
            slots[i].ok = true;
            slots[i].resp = {{s.doc_id, s.sent_index}, raw, std::move(parsed.entries),
                             parsed.malformed_lines};
        }
    };

    size_t n_threads = std::max<size_t>(1, std::min(options.max_parallel, sents.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    for (auto& slot : slots)
        if (slot.ok) result.responses.push_back(std::move(slot.resp));
    std::sort(result.failed.begin(), result.failed.end());
    return result;
}

}  // namespace ade
