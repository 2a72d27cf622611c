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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "depth/errors.h"

namespace depth {
namespace {

std::filesystem::path write_file(const std::string& name, const std::string& body) {
  const std::filesystem::path dir = std::filesystem::path(DEPTH_TEST_TMP) / "corpus_io";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path, std::ios::binary) << body;
  return path;
}

TEST(CorpusReader, IdsFollowLineOrder) {
  CorpusReader r(write_file("three.txt", "One.\nTwo.\nThree.\n"), CorpusFormat::kPlainLines);
  const auto docs = read_all(r);
  ASSERT_EQ(docs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(docs[i].doc_id, i);
  EXPECT_EQ(docs[2].text, "Three.");
  EXPECT_EQ(r.skipped(), 0u);
}

TEST(CorpusReader, BlankLinesAreSkippedAndCounted) {
  CorpusReader r(write_file("blank.txt", "One.\n   \nThree.\n"), CorpusFormat::kPlainLines);
  const auto docs = read_all(r);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(r.skipped(), 1u);
  EXPECT_EQ(docs[0].doc_id, 0u);
  EXPECT_EQ(docs[1].doc_id, 2u);
}

TEST(CorpusReader, JsonLinesTextField) {
  CorpusReader r(write_file("a.jsonl", "{\"text\": \"Hi there.\", \"id\": 4}\n"),
                 CorpusFormat::kJsonLines);
  const auto docs = read_all(r);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].text, "Hi there.");
}

TEST(CorpusReader, MalformedJsonNamesTheLine) {
  CorpusReader r(write_file("bad.jsonl", "{\"text\": \"ok\"}\n{\"text\": oops}\n"),
                 CorpusFormat::kJsonLines);
  ASSERT_TRUE(r.next().has_value());
  try {
    r.next();
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(CorpusReader, MissingTextFieldIsAnError) {
  CorpusReader r(write_file("notext.jsonl", "{\"body\": \"x\"}\n"), CorpusFormat::kJsonLines);
  EXPECT_THROW(r.next(), DataError);
}

TEST(CorpusReader, UnreadablePath) {
  EXPECT_THROW(CorpusReader("/nonexistent/corpus.txt", CorpusFormat::kPlainLines), DataError);
}

TEST(CorpusFormat, Names) {
  EXPECT_EQ(parse_corpus_format("json-lines"), CorpusFormat::kJsonLines);
  EXPECT_EQ(parse_corpus_format("plain-lines"), CorpusFormat::kPlainLines);
  EXPECT_THROW(parse_corpus_format("xml"), ConfigError);
}

std::vector<Document> numbered(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back({i, "doc " + std::to_string(i)});
  return docs;
}

TEST(SplitCorpus, ZeroFractionKeepsEverythingInTrain) {
  const auto s = split_corpus(numbered(500), 0.0, 1);
  EXPECT_EQ(s.train.size(), 500u);
  EXPECT_TRUE(s.validation.empty());
}

TEST(SplitCorpus, HalfSplitWithinBinomialBound) {
  // Binomial(10000, 0.5): sd 50, so 3 sd = 150.
  const auto s = split_corpus(numbered(10000), 0.5, 7);
  EXPECT_NEAR(static_cast<double>(s.validation.size()), 5000.0, 150.0);
  EXPECT_EQ(s.train.size() + s.validation.size(), 10000u);
}

TEST(SplitCorpus, AssignmentIsStable) {
  for (std::uint64_t id = 0; id < 200; ++id) {
    EXPECT_EQ(assign_split(id, 0.3, 9), assign_split(id, 0.3, 9));
  }
  const auto a = split_corpus(numbered(300), 0.3, 9);
  const auto b = split_corpus(numbered(300), 0.3, 9);
  ASSERT_EQ(a.validation.size(), b.validation.size());
  for (std::size_t i = 0; i < a.validation.size(); ++i) {
    EXPECT_EQ(a.validation[i].doc_id, b.validation[i].doc_id);
  }
}

TEST(SplitCorpus, FractionOutOfRangeIsRejected) {
  EXPECT_THROW(split_corpus(numbered(3), 1.0, 0), ConfigError);
  EXPECT_THROW(split_corpus(numbered(3), -0.1, 0), ConfigError);
}

TEST(SplitStream, MatchesInMemorySplit) {
  std::string body;
  for (int i = 0; i < 100; ++i) body += "Doc " + std::to_string(i) + ".\n";
  const auto path = write_file("hundred.txt", body);
  SplitStream val(CorpusReader(path, CorpusFormat::kPlainLines), SplitSide::kValidation, 0.25, 3);
  CorpusReader all(path, CorpusFormat::kPlainLines);
  const auto expected = split_corpus(read_all(all), 0.25, 3).validation;
  std::size_t i = 0;
  while (auto d = val.next()) {
    ASSERT_LT(i, expected.size());
    EXPECT_EQ(d->doc_id, expected[i++].doc_id);
  }
  EXPECT_EQ(i, expected.size());
}

}  // namespace
}  // namespace depth
