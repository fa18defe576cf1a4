#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "ade/types.hpp"

namespace ade {

using json = nlohmann::json;

json mention_to_json(const Mention& m);
Mention mention_from_json(const json& j);

json sentence_to_json(const Sentence& s);
Sentence sentence_from_json(const json& j);

json annotation_to_json(const AdeAnnotation& a);
AdeAnnotation annotation_from_json(const json& j);

std::vector<Document> read_documents_jsonl(const std::string& path);
std::vector<Sentence> read_sentences_jsonl(const std::string& path);
std::vector<AdeAnnotation> read_annotations_jsonl(const std::string& path);

void write_documents_jsonl(const std::string& path, const std::vector<Document>& docs);
void write_sentences_jsonl(const std::string& path, const std::vector<Sentence>& sents);
void write_annotations_jsonl(const std::string& path, const std::vector<AdeAnnotation>& anns);

// Writes to <path>.tmp then renames.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Hex digest.
std::string sha256_hex(const std::string& data);

}  // namespace ade
