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

#include "depth/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "depth/errors.h"
#include "depth/random.h"

namespace depth {
namespace {

// Runs fn(i) for i in [0, n) on `workers` threads. The first exception is
// rethrown after all threads finish.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DEPTH_THREADS"); env && *env) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    } catch (const std::exception&) {
      throw ConfigError(std::string("DEPTH_THREADS is not a number: ") + env);
    }
  }
  if (jobs < n) n = static_cast<unsigned>(std::max<std::size_t>(jobs, 1));
  return n;
}

std::vector<TokenizedExample> tokenize_documents(const Vocab& vocab, const Segmenter& segmenter,
                                                 std::span<const Document> docs,
                                                 std::uint64_t seed, unsigned workers) {
  std::vector<TokenizedExample> out(docs.size());
  if (workers == 0) workers = worker_count(docs.size());
  parallel_for(docs.size(), workers,
               [&](std::size_t i) { out[i] = depth_tokenize(vocab, segmenter, docs[i], seed); });
  return out;
}

std::vector<CorruptedExample> corrupt_documents(std::span<const TokenizedExample> docs,
                                                const VocabLayout& layout,
                                                const CorruptionConfig& cfg,
                                                const CorruptionPlan& plan, unsigned workers) {
  cfg.validate();
  if (plan.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (plan.epochs == 0) throw ConfigError("epochs must be >= 1");
  const std::size_t n = docs.size();
  const std::uint64_t batches_per_epoch = (n + plan.batch_size - 1) / plan.batch_size;

  struct Job {
    std::size_t doc;
    std::uint64_t batch_index;
  };
  std::vector<Job> jobs;
  jobs.reserve(n * plan.epochs);
  for (std::uint32_t epoch = 0; epoch < plan.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (plan.shuffle_order) {
      Rng rng(derive_seed({cfg.global_seed, static_cast<std::uint64_t>(Stream::kBatchOrder), 0,
                           epoch}));
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (std::size_t pos = 0; pos < n; ++pos) {
      jobs.push_back({order[pos], epoch * batches_per_epoch + pos / plan.batch_size});
    }
  }

  std::vector<std::optional<CorruptedExample>> results(jobs.size());
  if (workers == 0) workers = worker_count(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    results[i] = corrupt_example(docs[jobs[i].doc], jobs[i].batch_index, layout, cfg);
  });
  std::vector<CorruptedExample> out;
  out.reserve(results.size());
  for (auto& r : results) {
    if (r) out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace depth
