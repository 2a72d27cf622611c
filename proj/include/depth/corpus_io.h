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

#ifndef DEPTH_CORPUS_IO_H_
#define DEPTH_CORPUS_IO_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace depth {

struct Document {
  std::uint64_t doc_id = 0;
  std::string text;
};

enum class CorpusFormat { kPlainLines, kJsonLines };

CorpusFormat parse_corpus_format(const std::string& name);
std::string to_string(CorpusFormat format);

struct CorpusConfig {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::kPlainLines;
  double val_fraction = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Line-at-a-time reader. Documents come out in file order with doc_id equal
// to the 0-based line index; blank records are skipped and counted.
class CorpusReader {
 public:
  CorpusReader(std::filesystem::path path, CorpusFormat format);

  std::optional<Document> next();

  std::uint64_t skipped() const { return skipped_; }
  std::uint64_t lines_read() const { return line_index_; }

 private:
  std::filesystem::path path_;
  CorpusFormat format_;
  std::ifstream in_;
  std::uint64_t line_index_ = 0;
  std::uint64_t skipped_ = 0;
};

CorpusReader load_corpus(const CorpusConfig& config);

// Reads the whole stream into memory. Convenience for small corpora.
std::vector<Document> read_all(CorpusReader& reader);

enum class SplitSide { kTrain, kValidation };

// Per-document assignment; a pure function of (seed, doc_id).
SplitSide assign_split(std::uint64_t doc_id, double val_fraction,
                       std::uint64_t seed);

// Filters a reader down to one side of the split. Each side should own its
// own reader.
class SplitStream {
 public:
  SplitStream(CorpusReader reader, SplitSide side, double val_fraction,
              std::uint64_t seed);

  std::optional<Document> next();
  const CorpusReader& reader() const { return reader_; }

 private:
  CorpusReader reader_;
  SplitSide side_;
  double val_fraction_;
  std::uint64_t seed_;
};

struct SplitResult {
  std::vector<Document> train;
  std::vector<Document> validation;
};

SplitResult split_corpus(std::vector<Document> docs, double val_fraction,
                         std::uint64_t seed);

}  // namespace depth

#endif  // DEPTH_CORPUS_IO_H_
