#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ade/types.hpp"

namespace ade {

enum class PromptMode { ZeroShot, FewShot5 };

const char* prompt_mode_name(PromptMode mode);

struct EmptySentenceError : std::runtime_error {
    EmptySentenceError() : std::runtime_error("sentence text is empty") {}
};

// Zero-shot: instruction plus the query message. Five-shot additionally
// carries the five worked examples, verbatim, before the query.
std::string build_prompt(const std::string& sentence_text, PromptMode mode);

using ParsedMap = std::map<std::string, std::vector<std::string>>;

struct ParseResult {
    ParsedMap entries;
    size_t malformed_lines = 0;
};

// Lenient line parser for the "drug: e1|e2" response format. A response
// that trims and case-folds to "none" yields an empty map.
ParseResult parse_response(const std::string& raw);

// Inverse of parse_response for well-formed maps.
std::string render_response(const ParsedMap& parsed);

struct GroundingStats {
    size_t grounded_drugs = 0;
    size_t ungrounded_drugs = 0;
    size_t grounded_events = 0;   // event strings with >= 1 occurrence
    size_t hallucinations = 0;    // event strings with no occurrence

    GroundingStats& operator+=(const GroundingStats& o) {
        grounded_drugs += o.grounded_drugs;
        ungrounded_drugs += o.ungrounded_drugs;
        grounded_events += o.grounded_events;
        hallucinations += o.hallucinations;
        return *this;
    }
};

struct GroundedSentence {
    Sentence sentence;
    std::vector<AdeAnnotation> annotations;
    GroundingStats stats;
};

// Anchors parsed strings to byte offsets. Drug keys ground only against the
// sentence's lexicon-found drug_mentions; event strings are located by
// case-insensitive search, every non-overlapping occurrence becoming a
// Mention. Unlocatable event strings are dropped as hallucinations.
GroundedSentence ground_spans(const Sentence& sentence, const ParsedMap& parsed,
                              Provenance provenance = Provenance::Teacher);

// Keeps sentences with at least one annotation that has at least one event.
std::vector<GroundedSentence> filter_positive(const std::vector<GroundedSentence>& in);

struct TeacherResponse {
    SentenceKey key;
    std::string raw;
    ParsedMap parsed;
    size_t malformed_lines = 0;
};

struct TransientTeacherError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct PermanentTeacherError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class TeacherClient {
  public:
    virtual ~TeacherClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string model_name() const = 0;
};

struct NoiseConfig {
    double drop_rate = 0.0;
    double spurious_rate = 0.0;
    double jitter_rate = 0.0;
    uint64_t seed = 0;
};

// Deterministic stand-in for a hosted LLM: renders the gold annotations in
// the response line format, with seeded label noise (dropped events,
// spurious spans, one-token boundary jitter).
TeacherResponse mock_teacher(const Sentence& sentence,
                             const std::vector<AdeAnnotation>& gold,
                             const NoiseConfig& noise);

// Client wrapper over mock_teacher. Looks the sentence up by the text
// embedded in the prompt.
class MockTeacherClient : public TeacherClient {
  public:
    MockTeacherClient(const std::vector<Sentence>& sentences,
                      const std::vector<AdeAnnotation>& gold,
                      const NoiseConfig& noise);
    std::string complete(const std::string& prompt) override;
    // noise settings are part of the identity so cached responses from one
    // noise level never leak into runs at another
    std::string model_name() const override;
    size_t calls() const { return calls_; }

  private:
    struct Entry {
        Sentence sentence;
        std::vector<AdeAnnotation> gold;
    };
    std::map<std::string, Entry> by_text_;
    NoiseConfig noise_;
    size_t calls_ = 0;
};

// JSON-over-HTTP chat-completion client. Endpoint URL from config, key from
// the TEACHER_API_KEY environment variable.
class HttpTeacherClient : public TeacherClient {
  public:
    HttpTeacherClient(std::string base_url, std::string model);
    std::string complete(const std::string& prompt) override;
    std::string model_name() const override { return model_; }

    // Exposed for tests: the JSON body sent to the endpoint.
    std::string request_body(const std::string& prompt) const;

  private:
    std::string base_url_;
    std::string model_;
    std::string api_key_;
};

struct AnnotateOptions {
    std::string cache_dir;
    PromptMode mode = PromptMode::FewShot5;
    size_t max_parallel = 4;
    size_t max_retries = 3;
    unsigned backoff_base_ms = 100;
};

struct AnnotateResult {
    std::vector<TeacherResponse> responses;    // sentence order preserved
    std::vector<SentenceKey> failed;           // retries exhausted
    size_t cache_hits = 0;
    size_t client_calls = 0;
};

// One response per sentence, disk-cached by prompt hash so reruns issue no
// duplicate calls. Transient failures retry with exponential backoff;
// permanent failures are recorded and skipped.
AnnotateResult annotate(const std::vector<Sentence>& sents, TeacherClient& client,
                        const AnnotateOptions& options);

}  // namespace ade
