// Copyright 2026 The depth-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "depth/corpus_io.h"

#include <algorithm>
#include <cctype>

#include "depth/errors.h"
#include "depth/random.h"
#include "json.hpp"

namespace depth {
namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

void validate_fraction(double val_fraction) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in [0, 1), got " +
                      std::to_string(val_fraction));
  }
}

}  // namespace

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "plain-lines" || name == "plain") return CorpusFormat::kPlainLines;
  if (name == "json-lines" || name == "jsonl") return CorpusFormat::kJsonLines;
  throw ConfigError("unknown corpus format '" + name +
                    "' (expected plain-lines or json-lines)");
}

std::string to_string(CorpusFormat format) {
  return format == CorpusFormat::kPlainLines ? "plain-lines" : "json-lines";
}

void CorpusConfig::validate() const { validate_fraction(val_fraction); }

CorpusReader::CorpusReader(std::filesystem::path path, CorpusFormat format)
    : path_(std::move(path)), format_(format), in_(path_, std::ios::binary) {
  if (!in_) throw DataError("cannot open corpus file " + path_.string());
}

std::optional<Document> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    const std::uint64_t index = line_index_++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string text;
    if (format_ == CorpusFormat::kPlainLines) {
      text = std::move(line);
    } else {
      if (is_blank(line)) {
        ++skipped_;
        continue;
      }
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path_.string() + ": malformed JSON on line " +
                        std::to_string(index + 1) + ": " + e.what());
      }
      if (!record.is_object() || !record.contains("text") ||
          !record["text"].is_string()) {
        throw DataError(path_.string() + ": line " + std::to_string(index + 1) +
                        " has no string field \"text\"");
      }
      text = record["text"].get<std::string>();
    }
    if (is_blank(text)) {
      ++skipped_;
      continue;
    }
    return Document{index, std::move(text)};
  }
  if (in_.bad()) throw DataError("I/O error while reading " + path_.string());
  return std::nullopt;
}

CorpusReader load_corpus(const CorpusConfig& config) {
  config.validate();
  return CorpusReader(config.path, config.format);
}

std::vector<Document> read_all(CorpusReader& reader) {
  std::vector<Document> docs;
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

SplitSide assign_split(std::uint64_t doc_id, double val_fraction,
                       std::uint64_t seed) {
  if (val_fraction <= 0.0) return SplitSide::kTrain;
  const std::uint64_t h = derive_seed(
      {seed, static_cast<std::uint64_t>(Stream::kSplit), doc_id});
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < val_fraction ? SplitSide::kValidation : SplitSide::kTrain;
}

SplitStream::SplitStream(CorpusReader reader, SplitSide side,
                         double val_fraction, std::uint64_t seed)
    : reader_(std::move(reader)),
      side_(side),
      val_fraction_(val_fraction),
      seed_(seed) {
  validate_fraction(val_fraction);
}

std::optional<Document> SplitStream::next() {
  while (auto doc = reader_.next()) {
    if (assign_split(doc->doc_id, val_fraction_, seed_) == side_) return doc;
  }
  return std::nullopt;
}

SplitResult split_corpus(std::vector<Document> docs, double val_fraction,
                         std::uint64_t seed) {
  validate_fraction(val_fraction);
  SplitResult result;
  for (auto& doc : docs) {
    if (assign_split(doc.doc_id, val_fraction, seed) == SplitSide::kTrain) {
      result.train.push_back(std::move(doc));
    } else {
      result.validation.push_back(std::move(doc));
    }
  }
  return result;
}

}  // namespace depth
