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

// depth-lab: command-line entry point for the DEPTH pipeline.
//
//   depth-lab tokenize  train a subword vocabulary
//   depth-lab corrupt   build train/validation shards (or dump examples)
//   depth-lab masks     print and verify the attention masks of one example
//   depth-lab train     train a model on shards
//   depth-lab eval      evaluate a checkpoint on a validation shard
//   depth-lab plot      merge metrics files and draw an SVG chart
//
// Any subcommand accepts --config FILE with key=value lines (keys are flag
// names with '_' for '-'); explicit flags win over the file.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "depth/checkpoint.h"
#include "depth/corpus_io.h"
#include "depth/corruptor.h"
#include "depth/errors.h"
#include "depth/masks.h"
#include "depth/model.h"
#include "depth/objective.h"
#include "depth/pipeline.h"
#include "depth/plot.h"
#include "depth/segmenter.h"
#include "depth/shard.h"
#include "depth/tokenizer.h"
#include "depth/trainer.h"
#include "depth/vocab.h"

namespace {

using depth::ConfigError;
using depth::DataError;

std::string key_of(const CLI::Option* opt) {
  std::string name = opt->get_lnames().empty() ? "" : opt->get_lnames().front();
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

std::map<std::string, std::string> resolved_config(const CLI::App* sub) {
  std::map<std::string, std::string> out;
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string key = key_of(opt);
    if (key.empty() || key == "help" || key == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    out[key] = value;
  }
  return out;
}

void print_resolved(const CLI::App* sub) {
  std::cerr << "# resolved config for " << sub->get_name() << "\n";
  for (const auto& [k, v] : resolved_config(sub)) std::cerr << k << "=" << v << "\n";
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + " line " + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::uint64_t> parse_steps(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ConfigError("bad checkpoint step '" + item + "'");
    }
  }
  return out;
}

// ---- tokenize ----

struct TokenizeArgs {
  std::string corpus, format = "plain-lines", vocab_out;
  std::uint32_t vocab_size = 2000;
  std::uint32_t k = depth::kDefaultSentenceTokens;
};

int run_tokenize(const TokenizeArgs& a) {
  depth::CorpusReader reader(a.corpus, depth::parse_corpus_format(a.format));
  const depth::Vocab vocab = depth::train_vocab(reader, a.vocab_size, a.k);
  vocab.save(a.vocab_out);
  std::cout << "wrote " << a.vocab_out << ": " << vocab.layout().n_subwords << " subwords, "
            << vocab.size() << " ids total (k=" << vocab.k() << ")\n";
  return 0;
}

// ---- corrupt ----

struct CorruptArgs {
  std::string corpus, format = "plain-lines", vocab, abbrev_file, objective = "depth", out_dir;
  depth::CorruptionConfig cfg;
  double val_fraction = 0.05;
  std::uint32_t batch_size = 16;
  std::uint32_t epochs = 1;
  bool dump_text = false;
  std::size_t limit = 0;
};

depth::Segmenter make_segmenter(const std::string& abbrev_file) {
  return abbrev_file.empty() ? depth::Segmenter() : depth::Segmenter::from_file(abbrev_file);
}

int run_corrupt(CorruptArgs a) {
  a.cfg.objective = depth::parse_objective(a.objective);
  a.cfg.validate();
  if (a.out_dir.empty() && !a.dump_text) {
    throw ConfigError("nothing to do: give --out-dir and/or --dump-text");
  }
  const depth::Vocab vocab = depth::Vocab::load(a.vocab);
  const depth::Segmenter segmenter = make_segmenter(a.abbrev_file);
  depth::CorpusReader reader(a.corpus, depth::parse_corpus_format(a.format));
  std::vector<depth::Document> docs = depth::read_all(reader);
  if (docs.empty()) throw DataError("corpus " + a.corpus + " holds no documents");
  depth::SplitResult split = depth::split_corpus(std::move(docs), a.val_fraction, a.cfg.global_seed);

  const auto train_tok =
      depth::tokenize_documents(vocab, segmenter, split.train, a.cfg.global_seed);
  const auto val_tok =
      depth::tokenize_documents(vocab, segmenter, split.validation, a.cfg.global_seed);
  depth::CorruptionPlan train_plan{a.batch_size, a.epochs, true};
  depth::CorruptionPlan val_plan{a.batch_size, 1, false};
  const auto train_ex = depth::corrupt_documents(train_tok, vocab.layout(), a.cfg, train_plan);
  const auto val_ex = depth::corrupt_documents(val_tok, vocab.layout(), a.cfg, val_plan);

  if (a.dump_text) {
    const std::size_t n = a.limit == 0 ? train_ex.size() : std::min(a.limit, train_ex.size());
    for (std::size_t i = 0; i < n; ++i) {
      std::cout << depth::describe(train_ex[i], vocab) << "\n";
    }
  }
  if (!a.out_dir.empty()) {
    std::filesystem::create_directories(a.out_dir);
    depth::ShardHeader header{vocab.layout(), a.cfg, a.batch_size};
    depth::Shard train{header, train_ex};
    depth::Shard val{header, val_ex};
    train.save(std::filesystem::path(a.out_dir) / "train.shard");
    val.save(std::filesystem::path(a.out_dir) / "val.shard");
    std::cerr << "train.shard: " << train_ex.size() << " examples from " << split.train.size()
              << " documents x " << a.epochs << " epochs; val.shard: " << val_ex.size()
              << " examples\n";
  }
  return 0;
}

// ---- masks ----

struct MasksArgs {
  std::string shard, vocab, pbm_prefix;
  std::size_t example_index = 0;
  bool eosen_hierarchical = false;
};

int run_masks(const MasksArgs& a) {
  depth::ShardReader reader(a.shard);
  const depth::VocabLayout layout = reader.header().layout;
  std::optional<depth::CorruptedExample> ex;
  for (std::size_t i = 0; i <= a.example_index; ++i) {
    ex = reader.next();
    if (!ex) {
      throw DataError("shard " + a.shard + " has only " + std::to_string(i) + " examples");
    }
  }
  depth::MaskOptions opts{a.eosen_hierarchical};
  const auto masks = depth::build_masks(ex->encoder_ids, ex->decoder_input_ids, layout, opts);
  if (!a.vocab.empty()) {
    std::cout << depth::describe(*ex, depth::Vocab::load(a.vocab)) << "\n";
  }
  std::cout << "encoder self-attention (" << masks.enc_self.rows() << "x"
            << masks.enc_self.cols() << ")\n"
            << depth::render_ascii(masks.enc_self) << "\n"
            << "decoder self-attention (" << masks.dec_self.rows() << "x"
            << masks.dec_self.cols() << ")\n"
            << depth::render_ascii(masks.dec_self) << "\n"
            << "cross-attention (" << masks.cross.rows() << "x" << masks.cross.cols() << ")\n"
            << depth::render_ascii(masks.cross) << "\n";
  const auto report =
      depth::verify_masks(ex->encoder_ids, ex->decoder_input_ids, masks, layout, opts);
  std::cout << "verify: " << report.cells_checked << " cells, " << report.mismatches.size()
            << " mismatches\n";
  if (!a.pbm_prefix.empty()) {
    depth::write_pbm(masks.enc_self, a.pbm_prefix + "_enc.pbm");
    depth::write_pbm(masks.dec_self, a.pbm_prefix + "_dec.pbm");
    depth::write_pbm(masks.cross, a.pbm_prefix + "_cross.pbm");
  }
  return report.ok() ? 0 : 2;
}

// ---- train / eval ----

struct TrainArgs {
  std::string train_shard, val_shard, run_dir, resume, objective = "depth", schedule = "linear",
                                                     loss_scheme = "token_avg",
                                                     checkpoint_steps =
                                                         "250,500,1000,2000,4000,8000,10000";
  depth::TrainConfig cfg;
  depth::ModelConfig model;
  std::uint32_t batch_size = 0;  // 0: take the shard's
  bool eosen_in_sentence_loss = true;
  std::int64_t progress_every = 100;
  std::int64_t init_seed = -1;
};

int run_train(TrainArgs a, const CLI::App* sub) {
  const depth::Shard train = depth::Shard::load(a.train_shard);
  std::optional<depth::Shard> val;
  if (!a.val_shard.empty()) val = depth::Shard::load(a.val_shard);
  a.cfg.objective = depth::parse_objective(a.objective);
  a.cfg.schedule = depth::parse_schedule_kind(a.schedule);
  a.cfg.loss.scheme = depth::parse_loss_scheme(a.loss_scheme);
  a.cfg.loss.objective.eosen_in_sentence_loss = a.eosen_in_sentence_loss;
  a.cfg.checkpoint_steps.clear();
  for (auto s : parse_steps(a.checkpoint_steps)) {
    a.cfg.checkpoint_steps.push_back(static_cast<std::int64_t>(s));
  }
  a.cfg.batch_size = a.batch_size == 0 ? train.header.batch_size : a.batch_size;
  a.model.vocab_size = static_cast<int>(train.header.layout.size());
  a.model.init_seed = a.init_seed < 0 ? a.cfg.seed : static_cast<std::uint64_t>(a.init_seed);

  depth::Trainer trainer(a.cfg, depth::Transformer<float>(a.model), train,
                         val ? &*val : nullptr);
  if (!a.resume.empty()) {
    trainer.restore(depth::load_checkpoint(a.resume, a.model.vocab_size));
    std::cerr << "resumed from " << a.resume << " at step " << trainer.step() << "\n";
  }
  std::cerr << "model parameters: " << trainer.model().parameter_count() << "\n";

  depth::Trainer::RunOptions opts;
  opts.run_dir = a.run_dir;
  opts.progress = &std::cerr;
  opts.progress_every = a.progress_every;
  const std::string described = depth::describe_config(trainer.config(), trainer.model().config());
  for (const auto& [k, v] : resolved_config(sub)) {
    if (described.find("\n" + k + "=") == std::string::npos &&
        described.rfind(k + "=", 0) != 0) {
      opts.extra_config[k] = v;
    }
  }
  trainer.run(opts);
  std::cout << "finished at step " << trainer.step() << "; run directory " << a.run_dir << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint, val_shard, loss_scheme = "token_avg";
  bool eosen_hierarchical = false;
  std::size_t max_eval_examples = 0;
};

int run_eval(const EvalArgs& a) {
  const depth::Shard val = depth::Shard::load(a.val_shard);
  const depth::Checkpoint ckpt =
      depth::load_checkpoint(a.checkpoint, static_cast<int>(val.header.layout.size()));
  const depth::Transformer<float> model(ckpt.model, ckpt.params);
  depth::TrainConfig cfg;
  cfg.loss.scheme = depth::parse_loss_scheme(a.loss_scheme);
  cfg.loss.masks.eosen_hierarchical = a.eosen_hierarchical;
  cfg.max_eval_examples = a.max_eval_examples;
  const depth::MetricsRecord r = depth::evaluate(model, val, cfg, ckpt.step, 0.0);
  std::cout << depth::metrics_csv_header() << "\n" << depth::metrics_csv_row(r) << "\n";
  return 0;
}

// ---- plot ----

struct PlotArgs {
  std::vector<std::string> inputs, labels;
  std::string column = "reconstruction_loss", out_svg = "plot.svg", out_csv = "merged.csv", title;
};

int run_plot(const PlotArgs& a) {
  if (!a.labels.empty() && a.labels.size() != a.inputs.size()) {
    throw ConfigError("give one --label per --in");
  }
  std::vector<depth::CsvTable> tables;
  std::vector<std::string> labels;
  std::vector<depth::Series> series;
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    tables.push_back(depth::CsvTable::load(a.inputs[i]));
    std::string label = a.labels.empty()
                            ? std::filesystem::path(a.inputs[i]).parent_path().filename().string()
                            : a.labels[i];
    if (label.empty()) label = a.inputs[i];
    labels.push_back(label);
    series.push_back(depth::extract_series(tables.back(), label, a.column));
  }
  std::ofstream csv(a.out_csv);
  if (!csv) throw DataError("cannot write " + a.out_csv);
  csv << depth::merge_csv(tables, labels);
  depth::PlotOptions opts;
  opts.title = a.title.empty() ? a.column + " vs. step" : a.title;
  opts.y_label = a.column;
  std::ofstream svg(a.out_svg);
  if (!svg) throw DataError("cannot write " + a.out_svg);
  svg << depth::render_svg(series, opts);
  std::cout << "wrote " << a.out_svg << " (" << series.size() << " series) and " << a.out_csv
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-lab: sentence-aware span corruption pre-training at desk scale"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key=value file merged under explicit flags");

  TokenizeArgs tok;
  auto* s_tok = app.add_subcommand("tokenize", "train a subword vocabulary");
  s_tok->add_option("--corpus", tok.corpus, "corpus file")->required();
  s_tok->add_option("--format", tok.format, "plain-lines or json-lines");
  s_tok->add_option("--vocab-out", tok.vocab_out, "output vocabulary file")->required();
  s_tok->add_option("--vocab-size", tok.vocab_size, "subword table size cap (>= 300)");
  s_tok->add_option("--k", tok.k, "number of <SENT_i> tokens");

  CorruptArgs cor;
  auto* s_cor = app.add_subcommand("corrupt", "build corrupted train/validation shards");
  s_cor->add_option("--corpus", cor.corpus, "corpus file")->required();
  s_cor->add_option("--format", cor.format, "plain-lines or json-lines");
  s_cor->add_option("--vocab", cor.vocab, "vocabulary file")->required();
  s_cor->add_option("--abbrev-file", cor.abbrev_file, "abbreviation list, one per line");
  s_cor->add_option("--objective", cor.objective, "depth or t5");
  s_cor->add_option("--p", cor.cfg.p, "mask fraction");
  s_cor->add_option("--lambda", cor.cfg.lambda, "mean span length");
  s_cor->add_option("--max-span", cor.cfg.max_span, "span length clip");
  s_cor->add_option("--shuffle-prob", cor.cfg.shuffle_prob, "per-batch shuffle probability");
  s_cor->add_option("--max-len", cor.cfg.max_len, "encoder length cap");
  s_cor->add_option("--seed", cor.cfg.global_seed, "global seed");
  s_cor->add_option("--val-fraction", cor.val_fraction, "validation share of documents");
  s_cor->add_option("--batch-size", cor.batch_size, "documents per batch");
  s_cor->add_option("--epochs", cor.epochs, "corruption passes over the training documents");
  s_cor->add_option("--out-dir", cor.out_dir, "writes train.shard and val.shard here");
  s_cor->add_flag("--dump-text", cor.dump_text, "print training examples with token names");
  s_cor->add_option("--limit", cor.limit, "examples to print with --dump-text (0: all)");

  MasksArgs msk;
  auto* s_msk = app.add_subcommand("masks", "print and verify one example's masks");
  s_msk->add_option("--shard", msk.shard, "shard file")->required();
  s_msk->add_option("--vocab", msk.vocab, "vocabulary file, to print token names");
  s_msk->add_option("--example-index", msk.example_index, "0-based record index");
  s_msk->add_option("--pbm-prefix", msk.pbm_prefix, "also write <prefix>_{enc,dec,cross}.pbm");
  s_msk->add_flag("--eosen-hierarchical", msk.eosen_hierarchical,
                  "treat <EOSEN> as a sentence token in every mask rule");

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "train a model on shards");
  s_tr->add_option("--train-shard", tr.train_shard, "training shard")->required();
  s_tr->add_option("--val-shard", tr.val_shard, "validation shard");
  s_tr->add_option("--run-dir", tr.run_dir, "output directory")->required();
  s_tr->add_option("--resume", tr.resume, "checkpoint to resume from");
  s_tr->add_option("--objective", tr.objective, "depth or t5 (must match the shards)");
  s_tr->add_option("--batch-size", tr.batch_size, "must match the shard (0: take the shard's)");
  s_tr->add_option("--total-steps", tr.cfg.total_steps, "optimizer steps");
  s_tr->add_option("--warmup-steps", tr.cfg.warmup_steps, "linear warmup steps");
  s_tr->add_option("--peak-lr", tr.cfg.peak_lr, "peak learning rate");
  s_tr->add_option("--schedule", tr.schedule, "linear or inv_sqrt");
  s_tr->add_option("--beta1", tr.cfg.beta1, "Adam beta1");
  s_tr->add_option("--beta2", tr.cfg.beta2, "Adam beta2");
  s_tr->add_option("--adam-eps", tr.cfg.adam_eps, "Adam epsilon");
  s_tr->add_option("--weight-decay", tr.cfg.weight_decay, "decoupled weight decay");
  s_tr->add_option("--clip-norm", tr.cfg.clip_norm, "global gradient norm clip");
  s_tr->add_option("--eval-every", tr.cfg.eval_every, "steps between evaluations");
  s_tr->add_option("--checkpoint-steps", tr.checkpoint_steps, "comma-separated steps");
  s_tr->add_option("--seed", tr.cfg.seed, "training seed (batch order, dropout)");
  s_tr->add_option("--loss-scheme", tr.loss_scheme, "token_avg, sum_of_means or sentence_x5");
  s_tr->add_option("--eosen-in-sentence-loss", tr.eosen_in_sentence_loss,
                   "count <EOSEN> targets in the sentence loss (1/0)");
  s_tr->add_flag("--eosen-in-accuracy", tr.cfg.loss.objective.eosen_in_accuracy,
                 "count <EOSEN> targets in sentence accuracy");
  s_tr->add_flag("--eosen-hierarchical", tr.cfg.loss.masks.eosen_hierarchical,
                 "treat <EOSEN> as a sentence token in every mask rule");
  s_tr->add_flag("--pad-to-batch-max", tr.cfg.pad_to_batch_max, "pad examples to batch max");
  s_tr->add_option("--max-eval-examples", tr.cfg.max_eval_examples, "0: whole validation shard");
  s_tr->add_option("--d-model", tr.model.d_model, "model width");
  s_tr->add_option("--n-heads", tr.model.n_heads, "attention heads");
  s_tr->add_option("--enc-layers", tr.model.enc_layers, "encoder layers");
  s_tr->add_option("--dec-layers", tr.model.dec_layers, "decoder layers");
  s_tr->add_option("--d-ff", tr.model.d_ff, "feed-forward width");
  s_tr->add_option("--max-len", tr.model.max_len, "position table length");
  s_tr->add_option("--dropout", tr.model.dropout, "dropout rate");
  s_tr->add_option("--init-seed", tr.init_seed, "parameter init seed (-1: use --seed)");
  s_tr->add_option("--progress-every", tr.progress_every, "steps between progress lines");

  EvalArgs ev;
  auto* s_ev = app.add_subcommand("eval", "evaluate a checkpoint");
  s_ev->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
  s_ev->add_option("--val-shard", ev.val_shard, "validation shard")->required();
  s_ev->add_option("--loss-scheme", ev.loss_scheme, "token_avg, sum_of_means or sentence_x5");
  s_ev->add_flag("--eosen-hierarchical", ev.eosen_hierarchical,
                 "treat <EOSEN> as a sentence token in every mask rule");
  s_ev->add_option("--max-eval-examples", ev.max_eval_examples, "0: whole shard");

  PlotArgs pl;
  auto* s_pl = app.add_subcommand("plot", "merge metrics files and draw an SVG");
  s_pl->add_option("--in", pl.inputs, "metrics.csv (repeatable)")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s_pl->add_option("--label", pl.labels, "series label per --in")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  s_pl->add_option("--col", pl.column, "column to plot against step");
  s_pl->add_option("--out-svg", pl.out_svg, "SVG output");
  s_pl->add_option("--out-csv", pl.out_csv, "merged CSV output");
  s_pl->add_option("--title", pl.title, "chart title");

  // Splice config-file entries in front of the explicit flags so the flags
  // win under TakeLast.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::vector<std::string> rest;
    std::string cfg_file;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        cfg_file = args[++i];
      } else if (args[i].rfind("--config=", 0) == 0) {
        cfg_file = args[i].substr(9);
      } else {
        rest.push_back(args[i]);
      }
    }
    if (!cfg_file.empty() && !rest.empty()) {
      CLI::App* sub = nullptr;
      for (CLI::App* s : app.get_subcommands([](CLI::App*) { return true; })) {
        if (s->get_name() == rest.front()) sub = s;
      }
      if (!sub) throw ConfigError("--config needs a subcommand");
      std::vector<std::string> spliced{rest.front()};
      for (const auto& [key, value] : read_config_file(cfg_file)) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (!opt) {
          std::cerr << "config: ignoring '" << key << "' (not an option of "
                    << sub->get_name() << ")\n";
          continue;
        }
        if (opt->get_items_expected_max() > 1) {
          std::stringstream ss(value);
          for (std::string item; std::getline(ss, item, ',');) spliced.push_back(flag + "=" + item);
        } else {
          spliced.push_back(flag + "=" + value);
        }
      }
      spliced.insert(spliced.end(), rest.begin() + 1, rest.end());
      rest = std::move(spliced);
    }
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    print_resolved(sub);
    if (sub == s_tok) return run_tokenize(tok);
    if (sub == s_cor) return run_corrupt(cor);
    if (sub == s_msk) return run_masks(msk);
    if (sub == s_tr) return run_train(tr, sub);
    if (sub == s_ev) return run_eval(ev);
    if (sub == s_pl) return run_plot(pl);
  } catch (const depth::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const depth::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
