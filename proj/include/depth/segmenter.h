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

#ifndef DEPTH_SEGMENTER_H_
#define DEPTH_SEGMENTER_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace depth {

// Rule-based English sentence splitter.
//
// A boundary sits after '.', '!' or '?' (plus any closing quotes/brackets)
// when the next character is a space followed by an uppercase ASCII letter,
// a digit, or an opening quote/bracket. A '.' that ends a listed
// abbreviation, or a single capital letter followed by '.', never ends a
// sentence. Newlines are ordinary whitespace. Ellipses get no special
// treatment: "wait... Then" splits after the last dot.
class Segmenter {
 public:
  // Uses the built-in abbreviation list (same entries as
  // resources/abbreviations.txt).
  Segmenter();
  explicit Segmenter(std::vector<std::string> abbreviations);

  // One abbreviation per line; blank lines and lines starting with '#' are
  // ignored.
  static Segmenter from_file(const std::filesystem::path& path);

  std::vector<std::string> segment(std::string_view text) const;

  bool is_abbreviation(std::string_view word) const;
  std::size_t abbreviation_count() const { return abbreviations_.size(); }

 private:
  std::unordered_set<std::string> abbreviations_;
};

// Collapses every run of ASCII whitespace to one space and trims the ends.
std::string normalize_whitespace(std::string_view text);

const std::vector<std::string>& default_abbreviations();

}  // namespace depth

#endif  // DEPTH_SEGMENTER_H_
