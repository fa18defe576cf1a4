#include "ade/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ade {

json mention_to_json(const Mention& m) {
    json j{{"start", m.start}, {"end", m.end}, {"surface", m.surface}};
    if (m.concept_id) j["concept_id"] = *m.concept_id;
    return j;
}

Mention mention_from_json(const json& j) {
    Mention m;
    m.start = j.at("start").get<size_t>();
    m.end = j.at("end").get<size_t>();
    m.surface = j.at("surface").get<std::string>();
    if (j.contains("concept_id")) m.concept_id = j.at("concept_id").get<std::string>();
    return m;
}

json sentence_to_json(const Sentence& s) {
    json mentions = json::array();
    for (const auto& m : s.drug_mentions) mentions.push_back(mention_to_json(m));
    return json{{"doc_id", s.doc_id},
                {"sent_index", s.sent_index},
                {"text", s.text},
                {"doc_offset", s.doc_offset},
                {"drug_mentions", std::move(mentions)}};
}

Sentence sentence_from_json(const json& j) {
    Sentence s;
    s.doc_id = j.at("doc_id").get<std::string>();
    s.sent_index = j.at("sent_index").get<int>();
    s.text = j.at("text").get<std::string>();
    s.doc_offset = j.value("doc_offset", size_t{0});
    if (j.contains("drug_mentions"))
        for (const auto& m : j.at("drug_mentions")) s.drug_mentions.push_back(mention_from_json(m));
    return s;
}

namespace {
const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Teacher: return "teacher";
        case Provenance::Gold: return "gold";
        case Provenance::Mock: return "mock";
    }
    return "gold";
}
Provenance provenance_from_name(const std::string& s) {
    if (s == "teacher") return Provenance::Teacher;
    if (s == "mock") return Provenance::Mock;
    return Provenance::Gold;
}
}  // namespace

json annotation_to_json(const AdeAnnotation& a) {
    json events = json::array();
    for (const auto& e : a.events) events.push_back(mention_to_json(e));
    return json{{"doc_id", a.key.doc_id},
                {"sent_index", a.key.sent_index},
                {"drug", mention_to_json(a.drug)},
                {"events", std::move(events)},
                {"provenance", provenance_name(a.provenance)}};
}

AdeAnnotation annotation_from_json(const json& j) {
    AdeAnnotation a;
    a.key.doc_id = j.at("doc_id").get<std::string>();
    a.key.sent_index = j.at("sent_index").get<int>();
    a.drug = mention_from_json(j.at("drug"));
    for (const auto& e : j.at("events")) a.events.push_back(mention_from_json(e));
    a.provenance = provenance_from_name(j.value("provenance", "gold"));
    return a;
}

namespace {

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<json> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<Document> read_documents_jsonl(const std::string& path) {
    std::vector<Document> docs;
    for (const auto& j : read_jsonl(path))
        docs.push_back({j.at("doc_id").get<std::string>(), j.at("text").get<std::string>()});
    return docs;
}

std::vector<Sentence> read_sentences_jsonl(const std::string& path) {
    std::vector<Sentence> out;
    for (const auto& j : read_jsonl(path)) out.push_back(sentence_from_json(j));
    return out;
}

std::vector<AdeAnnotation> read_annotations_jsonl(const std::string& path) {
    std::vector<AdeAnnotation> out;
    for (const auto& j : read_jsonl(path)) out.push_back(annotation_from_json(j));
    return out;
}

void write_documents_jsonl(const std::string& path, const std::vector<Document>& docs) {
    std::ostringstream ss;
    for (const auto& d : docs) ss << json{{"doc_id", d.doc_id}, {"text", d.text}}.dump() << '\n';
    atomic_write(path, ss.str());
}

void write_sentences_jsonl(const std::string& path, const std::vector<Sentence>& sents) {
    std::ostringstream ss;
    for (const auto& s : sents) ss << sentence_to_json(s).dump() << '\n';
    atomic_write(path, ss.str());
}

void write_annotations_jsonl(const std::string& path, const std::vector<AdeAnnotation>& anns) {
    std::ostringstream ss;
    for (const auto& a : anns) ss << annotation_to_json(a).dump() << '\n';
    atomic_write(path, ss.str());
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace ade
