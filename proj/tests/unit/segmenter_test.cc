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
#include "depth/segmenter.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace depth {
namespace {

using Sentences = std::vector<std::string>;

TEST(Segmenter, TerminatorRule) {
  EXPECT_EQ(Segmenter().segment("A? B! C."), (Sentences{"A?", "B!", "C."}));
}

TEST(Segmenter, NoTerminatorGivesOneSentence) {
  EXPECT_EQ(Segmenter().segment("Hello world"), (Sentences{"Hello world"}));
}

TEST(Segmenter, AbbreviationSuppressesBoundary) {
  EXPECT_EQ(Segmenter().segment("Dr. Smith left. He ran."),
            (Sentences{"Dr. Smith left.", "He ran."}));
}

TEST(Segmenter, SingleCapitalInitial) {
  EXPECT_EQ(Segmenter().segment("J. Doe wrote it. Then he left."),
            (Sentences{"J. Doe wrote it.", "Then he left."}));
}

TEST(Segmenter, LowercaseContinuationIsNotABoundary) {
  EXPECT_EQ(Segmenter().segment("It cost 3 dollars. and more"),
            (Sentences{"It cost 3 dollars. and more"}));
}

TEST(Segmenter, ClosingQuoteStaysWithSentence) {
  EXPECT_EQ(Segmenter().segment("He said \"stop.\" Then he left."),
            (Sentences{"He said \"stop.\"", "Then he left."}));
}

TEST(Segmenter, OpeningQuoteAndDigitStartNewSentence) {
  EXPECT_EQ(Segmenter().segment("One. \"Two.\" 3 is next."),
            (Sentences{"One.", "\"Two.\"", "3 is next."}));
}

TEST(Segmenter, NewlinesAreWhitespace) {
  EXPECT_EQ(Segmenter().segment("First line\nstill first. Second\n\n here."),
            (Sentences{"First line still first.", "Second here."}));
}

TEST(Segmenter, LosslessModuloWhitespace) {
  const std::string text = "  Mr. Brown met Ms. Green.\tThey talked, e.g. about\nrain!  Why?   Because. ";
  const auto sentences = Segmenter().segment(text);
  std::string joined;
  for (std::size_t i = 0; i < sentences.size(); ++i) joined += (i ? " " : "") + sentences[i];
  EXPECT_EQ(joined, normalize_whitespace(text));
  for (const auto& s : sentences) {
    EXPECT_FALSE(s.empty());
    EXPECT_EQ(Segmenter().segment(s), Sentences{s}) << s;
  }
}

TEST(Segmenter, CustomListFromFile) {
  const std::filesystem::path dir = std::filesystem::path(DEPTH_TEST_TMP) / "segmenter";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "abbr.txt") << "# custom\n\nApprox.\n";
  const Segmenter s = Segmenter::from_file(dir / "abbr.txt");
  EXPECT_EQ(s.abbreviation_count(), 1u);
  EXPECT_EQ(s.segment("Approx. Ten left. Dr. No."),
            (Sentences{"Approx. Ten left.", "Dr.", "No."}));
}

TEST(Segmenter, ShippedListMatchesBuiltIn) {
  const Segmenter s =
      Segmenter::from_file(std::filesystem::path(DEPTH_RESOURCE_DIR) / "abbreviations.txt");
  EXPECT_EQ(s.abbreviation_count(), Segmenter().abbreviation_count());
  for (const auto& a : default_abbreviations()) EXPECT_TRUE(s.is_abbreviation(a)) << a;
}

}  // namespace
}  // namespace depth
