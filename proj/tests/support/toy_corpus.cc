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

#include "toy_corpus.h"

#include "depth/pipeline.h"
#include "depth/random.h"
#include "depth/segmenter.h"

namespace depth::testing {
namespace {

const std::vector<std::string> kNames = {"Alice", "Bruno", "Chen", "Dana", "Emeka", "Farah",
                                         "Goran", "Hana", "Ivan", "Jun", "Kofi", "Lena",
                                         "Mira", "Nils", "Omar", "Pia"};
const std::vector<std::string> kPlaces = {"kitchen", "garden", "attic", "library", "harbor",
                                          "station", "market", "forest", "bakery", "museum",
                                          "office", "cabin"};
const std::vector<std::string> kFoods = {"bread", "soup", "apples", "rice", "cheese",
                                         "noodles", "pears", "eggs"};
const std::vector<std::string> kTopics = {"whales", "trains", "stars", "bridges", "music",
                                          "maps", "bees", "castles"};
const std::vector<std::string> kWords = {
    "river", "stone", "light", "quiet", "green", "table", "winter", "paper", "window", "road",
    "small", "bright", "cloud", "horse", "garden", "silver", "market", "music", "morning",
    "village", "yellow", "coffee", "letter", "mountain", "ocean", "little", "busy", "old",
    "new", "warm", "cold", "open", "under", "above", "near", "far", "slow", "fast", "red",
    "blue", "machine", "teacher", "student", "story", "school", "friend", "door", "lamp",
    "chair", "clock", "bird", "tree", "field", "summer", "city", "north", "south", "bridge"};

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

}  // namespace

std::vector<Document> ordinal_stories(std::size_t n, std::uint64_t seed,
                                      std::uint64_t first_doc_id) {
  std::vector<Document> docs;
  Rng rng(derive_seed({seed, 0x5701}));
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& name = pick(kNames, rng);
    std::string text = "First, " + name + " woke up in the " + pick(kPlaces, rng) + ". ";
    text += "Next, " + name + " ate " + pick(kFoods, rng) + " with " + pick(kNames, rng) + ". ";
    text += "Then " + name + " walked to the " + pick(kPlaces, rng) + " in the rain. ";
    text += "Later that day, " + name + " read a book about " + pick(kTopics, rng) + ". ";
    text += "Finally, " + name + " went to sleep early.";
    docs.push_back({first_doc_id + i, text});
  }
  return docs;
}

std::vector<Document> random_documents(std::size_t n, std::uint64_t seed,
                                       std::size_t min_sentences, std::size_t max_sentences,
                                       std::uint64_t first_doc_id) {
  std::vector<Document> docs;
  Rng rng(derive_seed({seed, 0x5702}));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = min_sentences + rng.below(max_sentences - min_sentences + 1);
    std::string text;
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t words = 6 + rng.below(10);
      std::string sentence = pick(kWords, rng);
      sentence[0] = static_cast<char>(sentence[0] - 'a' + 'A');
      for (std::size_t w = 1; w < words; ++w) sentence += " " + pick(kWords, rng);
      text += (s ? " " : "") + sentence + ".";
    }
    docs.push_back({first_doc_id + i, text});
  }
  return docs;
}

Vocab toy_vocab(const std::vector<Document>& docs, std::uint32_t size) {
  return train_vocab(std::span<const Document>(docs), size);
}

ToyPipeline build_pipeline(const std::vector<Document>& train_docs,
                           const std::vector<Document>& val_docs,
                           const ToyPipelineOptions& opts) {
  std::vector<Document> all = train_docs;
  all.insert(all.end(), val_docs.begin(), val_docs.end());
  ToyPipeline p{toy_vocab(all, opts.vocab_size), {}, {}, {}, {}};
  const Segmenter segmenter;
  const std::uint64_t seed = opts.corruption.global_seed;
  p.train_docs = tokenize_documents(p.vocab, segmenter, train_docs, seed);
  p.val_docs = tokenize_documents(p.vocab, segmenter, val_docs, seed);
  const ShardHeader header{p.vocab.layout(), opts.corruption, opts.batch_size};
  p.train.header = header;
  p.val.header = header;
  p.train.examples = corrupt_documents(p.train_docs, p.vocab.layout(), opts.corruption,
                                       {opts.batch_size, opts.epochs, opts.shuffle_order});
  if (!p.val_docs.empty()) {
    p.val.examples = corrupt_documents(p.val_docs, p.vocab.layout(), opts.corruption,
                                       {opts.batch_size, 1, false});
  }
  return p;
}

}  // namespace depth::testing
