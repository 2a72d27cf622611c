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

#include <fstream>

#include "depth/errors.h"

namespace depth {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Length of a closing quote/bracket at text[pos], or 0.
std::size_t closing_mark(std::string_view text, std::size_t pos) {
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') return 1;
  const std::string_view rest = text.substr(pos);
  if (rest.starts_with("\xE2\x80\x9D") || rest.starts_with("\xE2\x80\x99"))
    return 3;  // right double / single quotation mark
  if (rest.starts_with("\xC2\xBB")) return 2;  // right guillemet
  return 0;
}

// Length of an opening quote/bracket at text[pos], or 0.
std::size_t opening_mark(std::string_view text, std::size_t pos) {
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == '(' || c == '[' || c == '{') return 1;
  const std::string_view rest = text.substr(pos);
  if (rest.starts_with("\xE2\x80\x9C") || rest.starts_with("\xE2\x80\x98"))
    return 3;
  if (rest.starts_with("\xC2\xAB")) return 2;
  return 0;
}

}  // namespace

const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> kList = {
      "Dr.",   "Mr.",   "Mrs.",  "Ms.",     "Prof.", "Sr.",  "Jr.",  "St.",
      "Mt.",   "Gen.",  "Col.",  "Capt.",   "Lt.",   "Sgt.", "Rev.", "Hon.",
      "Inc.",  "Ltd.",  "Co.",   "Corp.",   "e.g.",  "i.e.", "etc.", "vs.",
      "cf.",   "al.",   "approx.", "Jan.",  "Feb.",  "Mar.", "Apr.", "Jun.",
      "Jul.",  "Aug.",  "Sep.",  "Sept.",   "Oct.",  "Nov.", "Dec.", "No.",
      "U.S.",  "U.K."};
  return kList;
}

Segmenter::Segmenter() : Segmenter(default_abbreviations()) {}

Segmenter::Segmenter(std::vector<std::string> abbreviations)
    : abbreviations_(std::make_move_iterator(abbreviations.begin()),
                     std::make_move_iterator(abbreviations.end())) {}

Segmenter Segmenter::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open abbreviation file " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const std::string entry = normalize_whitespace(line);
    if (entry.empty() || entry.front() == '#') continue;
    entries.push_back(entry);
  }
  return Segmenter(std::move(entries));
}

bool Segmenter::is_abbreviation(std::string_view word) const {
  if (word.size() == 2 && is_upper(word[0]) && word[1] == '.') return true;
  return abbreviations_.contains(std::string(word));
}

std::vector<std::string> Segmenter::segment(std::string_view raw) const {
  const std::string text = normalize_whitespace(raw);
  std::vector<std::string> sentences;
  const std::size_t n = text.size();
  std::size_t start = 0;
  std::size_t word_start = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (c == ' ') {
      word_start = i + 1;
      continue;
    }
    if (c != '.' && c != '!' && c != '?') continue;

    std::size_t end = i + 1;
    while (end < n) {
      const std::size_t len = closing_mark(text, end);
      if (len == 0) break;
      end += len;
    }
    if (end + 1 >= n || text[end] != ' ') continue;
    const std::size_t next = end + 1;
    if (!is_upper(text[next]) && !is_digit(text[next]) &&
        opening_mark(text, next) == 0) {
      continue;
    }
    if (c == '.') {
      std::size_t ws = word_start;
      while (ws < i) {
        const std::size_t len = opening_mark(text, ws);
        if (len == 0) break;
        ws += len;
      }
      if (is_abbreviation(std::string_view(text).substr(ws, i + 1 - ws)))
        continue;
    }
    sentences.push_back(text.substr(start, end - start));
    start = next;
    word_start = next;
    i = end;  // loop increment lands on `next`
  }
  if (start < n) sentences.push_back(text.substr(start));
  return sentences;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace depth
