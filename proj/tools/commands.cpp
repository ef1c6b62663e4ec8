#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "wordorder/cli.hpp"
#include "wordorder/corpus.hpp"
#include "wordorder/decoder.hpp"
#include "wordorder/error.hpp"
#include "wordorder/eval.hpp"
#include "wordorder/file_util.hpp"
#include "wordorder/lstm_lm.hpp"
#include "wordorder/lstm_model.hpp"
#include "wordorder/ngram_lm.hpp"
#include "wordorder/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace wordorder::cli {

namespace {

struct PrepareOptions {
  std::string train;
  std::string train_spans;
  std::string text;
  std::string spans;
  std::string variant = "words";
  int min_count = 1;
  std::uint64_t seed = 1;
  std::string out;
};

struct TrainOptions {
  std::string model = "ngram";
  std::string corpus;
  std::string vocab;
  std::size_t order = 5;
  bool prune_singletons = false;
  std::size_t hidden = 128;
  std::size_t layers = 2;
  LstmTrainConfig lstm;
  std::string out;
};

struct OrderOptions {
  std::string model = "ngram";
  std::string model_file;
  std::string vocab;
  std::string instances;
  std::size_t beam = 64;
  std::string future_cost = "on";
  std::string eos = "on";
  std::uint64_t seed = 1;
  std::string out;
};

struct EvaluateOptions {
  std::string outputs;
  std::string instances;
  std::size_t max_len = 40;
  std::string out;
};

struct SweepOptions {
  std::string model = "ngram";
  std::string vocab;
  std::string words_model;
  std::string words_instances;
  std::string bnps_model;
  std::string bnps_instances;
  std::vector<std::size_t> beams{1, 10, 64};
  std::string eos = "on";
  std::uint64_t seed = 1;
  std::string out;
};

struct SynthOptions {
  std::size_t train_tokens = 50000;
  std::size_t test_tokens = 2000;
  std::uint64_t seed = 7;
  std::string out;
};

bool on_off(const std::string& value) { return value == "on"; }

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

void write_config(const fs::path& dir, const std::string& command, const json& args) {
  json config;
  config["command"] = command;
  config["args"] = args;
  write_file_atomic(dir / (command + "_config.json"), config.dump(2) + "\n");
}

fs::path make_out_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::create_directories(out);
  return out;
}

Vocabulary load_vocabulary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open vocabulary " + path.string());
  return Vocabulary::read(in);
}

std::vector<std::vector<WordId>> read_prepared_corpus(const fs::path& path, const Vocabulary& vocab) {
  std::vector<std::vector<WordId>> sentences;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    std::vector<WordId> ids;
    for (const auto& token : split_tokens(line)) {
      const auto id = vocab.find(token);
      if (!id) {
        throw VocabularyMismatchError(path.string() + ":" + std::to_string(line_no) + ": token '" + token +
                                      "' is not in the vocabulary");
      }
      ids.push_back(*id);
    }
    if (!ids.empty()) sentences.push_back(std::move(ids));
  }
  return sentences;
}

// ---------------------------------------------------------------------------
// prepare

struct TextStats {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::size_t types = 0;
  std::size_t unk = 0;
};

TextStats text_stats(const std::vector<std::vector<std::string>>& corpus, const Vocabulary& vocab) {
  TextStats stats;
  std::map<std::string_view, int> types;
  for (const auto& sentence : corpus) {
    if (sentence.empty()) continue;
    ++stats.sentences;
    for (const auto& token : sentence) {
      ++stats.tokens;
      types[token];
      const auto id = replace_token(token, vocab);
      if (id == special::kUnk || id == special::kUnkCapitalized) ++stats.unk;
    }
  }
  stats.types = types.size();
  return stats;
}

std::string stats_line(const std::string& name, const TextStats& s) {
  const double rate = s.tokens == 0 ? 0.0 : static_cast<double>(s.unk) / static_cast<double>(s.tokens);
  return name + ": sentences=" + std::to_string(s.sentences) + " tokens=" + std::to_string(s.tokens) +
         " types=" + std::to_string(s.types) + " unk_rate=" + format_double(rate);
}

std::vector<std::vector<TokenSpan>> spans_for(const std::string& path, Variant variant,
                                               const std::vector<std::vector<std::string>>& corpus,
                                               const std::string& what) {
  if (variant == Variant::kWords) return std::vector<std::vector<TokenSpan>>(corpus.size());
  if (path.empty()) throw ConfigError("words-bnps needs a span file for the " + what + " text");
  auto spans = read_spans(path);
  if (spans.size() != corpus.size()) {
    throw MalformedSpanError(path + ": " + std::to_string(spans.size()) + " span lines for " +
                             std::to_string(corpus.size()) + " sentences");
  }
  return spans;
}

int cmd_prepare(const PrepareOptions& o) {
  const Variant variant = parse_variant(o.variant);
  if (o.train.empty() || o.text.empty()) throw ConfigError("prepare needs --train and --text");
  const auto dir = make_out_dir(o.out);
  const auto train = read_corpus(o.train);
  const auto text = read_corpus(o.text);
  const auto train_spans = spans_for(o.train_spans, variant, train, "training");
  const auto text_spans = spans_for(o.spans, variant, text, "evaluation");

  const auto vocab = Vocabulary::build(train, o.min_count);
  std::ostringstream vocab_out;
  vocab.write(vocab_out);

  std::string lm_corpus;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].empty()) continue;
    const auto ids = encode_sentence(train[i], train_spans[i], variant, vocab);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (k) lm_corpus += ' ';
      lm_corpus += vocab.token(ids[k]);
    }
    lm_corpus += '\n';
  }

  std::string instances;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i].empty()) continue;
    try {
      const auto instance = make_instance("s" + std::to_string(i + 1), text[i], text_spans[i], variant, vocab, o.seed);
      instances += to_json_line(instance);
      instances += '\n';
    } catch (const MalformedSpanError& e) {
      throw MalformedSpanError(o.text + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }

  const std::string stats = "vocabulary: size=" + std::to_string(vocab.size()) +
                            " min_count=" + std::to_string(o.min_count) + "\n" +
                            stats_line("train", text_stats(train, vocab)) + "\n" +
                            stats_line("text", text_stats(text, vocab)) + "\n";
  write_file_atomic(dir / "vocab.txt", vocab_out.str());
  write_file_atomic(dir / "lm_corpus.txt", lm_corpus);
  write_file_atomic(dir / "instances.jsonl", instances);
  write_file_atomic(dir / "stats.txt", stats);
  write_config(dir, "prepare",
               {{"train", o.train}, {"train_spans", o.train_spans}, {"text", o.text}, {"spans", o.spans},
                {"variant", o.variant}, {"min_count", o.min_count}, {"seed", o.seed}});
  std::cout << stats;
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const TrainOptions& o) {
  if (o.corpus.empty() || o.vocab.empty()) throw ConfigError("train needs --corpus and --vocab");
  const auto dir = make_out_dir(o.out);
  const auto vocab = load_vocabulary(o.vocab);
  const auto sentences = read_prepared_corpus(o.corpus, vocab);
  if (sentences.empty()) throw TrainingError("training corpus is empty");
  std::string log;
  json args = {{"model", o.model}, {"corpus", o.corpus}, {"vocab", o.vocab}};
  if (o.model == "ngram") {
    const auto raw = count_ngrams(sentences, o.order);
    const auto model = KneserNeyModel::estimate(raw, vocab.size(), {o.prune_singletons});
    for (const auto& w : model.warnings()) log += "warning: " + w + "\n";
    const auto& d = model.discounts();
    for (std::size_t k = 0; k < d.size(); ++k) {
      log += "discounts order " + std::to_string(k + 1) + ": " + format_double(d[k].d1) + " " +
             format_double(d[k].d2) + " " + format_double(d[k].d3plus) + (d[k].fallback ? " (fallback)" : "") +
             "\n";
    }
    log += "train perplexity: " + format_double(perplexity(model, sentences)) + "\n";
    write_file_atomic(dir / "model.arpa", model.to_arpa(vocab));
    args["order"] = o.order;
    args["prune_singletons"] = o.prune_singletons;
  } else if (o.model == "lstm") {
    if (o.hidden == 0 || o.layers == 0) throw ConfigError("--hidden and --layers must be positive");
    auto params = init_params<double>(vocab.size(), o.hidden, o.layers, o.lstm.seed);
    auto result = train<double>(std::move(params), sentences, o.lstm, [&](std::size_t epoch, double ppl, double lr) {
      const std::string line = "epoch " + std::to_string(epoch) + " lr " + format_double(lr) +
                               " train perplexity " + format_double(ppl) + "\n";
      std::cerr << line;
      log += line;
    });
    LstmLanguageModel model(std::move(result.params), unigram_logprobs_from_corpus(sentences, vocab.size()),
                            vocab.fingerprint());
    log += "train perplexity (no dropout): " + format_double(perplexity(model, sentences)) + "\n";
    save_weights(dir / "model.lstm", model);
    args["hidden"] = o.hidden;
    args["layers"] = o.layers;
    args["epochs"] = o.lstm.epochs;
    args["lr"] = o.lstm.learning_rate;
    args["lr_decay"] = o.lstm.lr_decay;
    args["decay_after"] = o.lstm.decay_after;
    args["clip"] = o.lstm.clip;
    args["bptt"] = o.lstm.bptt;
    args["dropout"] = o.lstm.dropout;
    args["seed"] = o.lstm.seed;
  } else {
    throw ConfigError("unknown model type '" + o.model + "'");
  }
  write_file_atomic(dir / "train_log.txt", log);
  write_config(dir, "train", args);
  std::cout << log;
  return 0;
}

// ---------------------------------------------------------------------------
// order

struct DecodeResult {
  Ordering best;
  std::vector<std::string> tokens;
  std::int64_t micros = 0;
  bool bounded = false;
};

template <LanguageModel Model>
std::vector<DecodeResult> decode_all(const Model& model, const std::vector<Instance>& instances,
                                     const Vocabulary& vocab, const BeamConfig& config, std::uint64_t seed) {
  std::vector<DecodeResult> results(instances.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= instances.size()) return;
      try {
        const auto start = std::chrono::steady_clock::now();
        const auto bag = instances[i].shuffled_phrases();
        auto ranked = order(model, bag, config);
        results[i].best = std::move(ranked.front());
        results[i].micros = std::chrono::duration_cast<std::chrono::microseconds>(
                                std::chrono::steady_clock::now() - start).count();
        results[i].tokens = finalize_output(results[i].best, instances[i], vocab, seed);
        results[i].bounded = future_cost_bounds(model, bag, results[i].best, results[i].best.score);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = instances.size();
        return;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(worker_count(), static_cast<unsigned>(instances.size())));
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

struct LoadedModel {
  std::optional<KneserNeyModel> ngram;
  std::optional<LstmLanguageModel> lstm;
};

LoadedModel load_model(const std::string& type, const std::string& path, const Vocabulary& vocab) {
  LoadedModel m;
  if (type == "ngram") {
    m.ngram = KneserNeyModel::from_arpa(read_file(path), vocab);
  } else if (type == "lstm") {
    m.lstm = load_weights(path);
    if (m.lstm->vocab_fingerprint() != vocab.fingerprint() || m.lstm->vocab_size() != vocab.size()) {
      throw VocabularyMismatchError(path + " was trained with a different vocabulary");
    }
  } else {
    throw ConfigError("unknown model type '" + type + "'");
  }
  return m;
}

std::vector<Instance> load_checked_instances(const std::string& path, const Vocabulary& vocab) {
  auto instances = read_instances(path);
  for (const auto& instance : instances) check_against_vocabulary(instance, vocab);
  return instances;
}

struct OrderRun {
  std::string outputs;
  std::string timings;
  double mean_score = 0.0;
  std::size_t bounded = 0;
};

OrderRun run_order(const LoadedModel& model, const std::vector<Instance>& instances, const Vocabulary& vocab,
                   const BeamConfig& config, std::uint64_t seed) {
  const auto results = model.ngram ? decode_all(*model.ngram, instances, vocab, config, seed)
                                   : decode_all(*model.lstm, instances, vocab, config, seed);
  OrderRun run;
  run.timings = "id\tphrases\tmicros\n";
  double total = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    json line;
    line["id"] = instances[i].id;
    line["tokens"] = results[i].tokens;
    line["order"] = results[i].best.order;
    line["score"] = results[i].best.score;
    line["beam"] = config.beam_width;
    run.outputs += line.dump() + "\n";
    run.timings += instances[i].id + "\t" + std::to_string(instances[i].gold_phrases.size()) + "\t" +
                   std::to_string(results[i].micros) + "\n";
    total += results[i].best.score;
    if (results[i].bounded) ++run.bounded;
  }
  run.mean_score = instances.empty() ? 0.0 : total / static_cast<double>(instances.size());
  return run;
}

void check_on_off(const std::string& value, const std::string& flag) {
  if (value != "on" && value != "off") throw ConfigError(flag + " must be on or off");
}

int cmd_order(const OrderOptions& o) {
  check_on_off(o.future_cost, "--future-cost");
  check_on_off(o.eos, "--eos");
  if (o.model_file.empty() || o.vocab.empty() || o.instances.empty()) {
    throw ConfigError("order needs --model-file, --vocab and --instances");
  }
  if (o.beam == 0) throw ConfigError("--beam must be at least 1");
  const auto dir = make_out_dir(o.out);
  const auto vocab = load_vocabulary(o.vocab);
  const auto model = load_model(o.model, o.model_file, vocab);
  const auto instances = load_checked_instances(o.instances, vocab);
  BeamConfig config;
  config.beam_width = o.beam;
  config.use_future_cost = on_off(o.future_cost);
  config.score_eos = on_off(o.eos);
  const auto run = run_order(model, instances, vocab, config, o.seed);
  write_file_atomic(dir / "outputs.jsonl", run.outputs);
  write_file_atomic(dir / "timings.tsv", run.timings);
  const std::string summary = "instances: " + std::to_string(instances.size()) +
                              "\nmean score: " + format_double(run.mean_score) +
                              "\nfuture cost bound held: " + std::to_string(run.bounded) + "/" +
                              std::to_string(instances.size()) + "\n";
  write_file_atomic(dir / "summary.txt", summary);
  write_config(dir, "order",
               {{"model", o.model}, {"model_file", o.model_file}, {"vocab", o.vocab}, {"instances", o.instances},
                {"beam", o.beam}, {"future_cost", o.future_cost}, {"eos", o.eos}, {"seed", o.seed}});
  std::cout << summary;
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

std::vector<Sentence> read_outputs(const std::string& path, const std::vector<Instance>& instances) {
  std::map<std::string, Sentence> by_id;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      by_id[j.at("id").get<std::string>()] = j.at("tokens").get<Sentence>();
    } catch (const json::exception& e) {
      throw ParseError(line_no, path + ": " + e.what());
    }
  }
  if (by_id.size() != instances.size()) {
    throw AlignmentError(path + " has " + std::to_string(by_id.size()) + " outputs for " +
                         std::to_string(instances.size()) + " instances");
  }
  std::vector<Sentence> hyps;
  for (const auto& instance : instances) {
    auto it = by_id.find(instance.id);
    if (it == by_id.end()) throw AlignmentError("no output for instance " + instance.id);
    hyps.push_back(it->second);
  }
  return hyps;
}

EvalReport evaluate_files(const std::string& outputs, const std::string& instances_path, std::size_t max_len) {
  const auto instances = read_instances(instances_path);
  const auto hyps = read_outputs(outputs, instances);
  std::vector<Sentence> refs;
  for (const auto& instance : instances) refs.push_back(reference_tokens(instance));
  return evaluate(refs, hyps, max_len);
}

void write_report(const fs::path& dir, const EvalReport& report) {
  write_file_atomic(dir / "report.txt", format_report(report));
  write_file_atomic(dir / "lengths.tsv", length_table_tsv(report));
  write_file_atomic(dir / "distortion.tsv", distortion_table_tsv(report));
}

int cmd_evaluate(const EvaluateOptions& o) {
  if (o.outputs.empty() || o.instances.empty()) throw ConfigError("evaluate needs --outputs and --instances");
  const auto dir = make_out_dir(o.out);
  const auto report = evaluate_files(o.outputs, o.instances, o.max_len);
  write_report(dir, report);
  write_config(dir, "evaluate", {{"outputs", o.outputs}, {"instances", o.instances}, {"max_len", o.max_len}});
  std::cout << "BLEU " << format_double(report.corpus.bleu) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const SweepOptions& o) {
  check_on_off(o.eos, "--eos");
  if (o.vocab.empty()) throw ConfigError("sweep needs --vocab");
  if (o.beams.empty()) throw ConfigError("--beams must list at least one width");
  if (std::find(o.beams.begin(), o.beams.end(), std::size_t{0}) != o.beams.end()) {
    throw ConfigError("beam widths must be at least 1");
  }
  struct Row {
    std::string variant;
    std::string model;
    std::string instances;
  };
  std::vector<Row> rows;
  if (!o.words_model.empty() || !o.words_instances.empty()) rows.push_back({"words", o.words_model, o.words_instances});
  if (!o.bnps_model.empty() || !o.bnps_instances.empty()) rows.push_back({"words-bnps", o.bnps_model, o.bnps_instances});
  if (rows.empty()) throw ConfigError("sweep needs a words and/or bnps model with instances");
  for (const auto& r : rows) {
    if (r.model.empty() || r.instances.empty()) throw ConfigError(r.variant + " row needs both a model and instances");
  }
  const auto dir = make_out_dir(o.out);
  const auto vocab = load_vocabulary(o.vocab);
  write_config(dir, "sweep",
               {{"model", o.model}, {"vocab", o.vocab}, {"words_model", o.words_model},
                {"words_instances", o.words_instances}, {"bnps_model", o.bnps_model},
                {"bnps_instances", o.bnps_instances}, {"beams", o.beams}, {"eos", o.eos}, {"seed", o.seed}});

  std::string grid = "variant\tfuture_cost";
  for (auto k : o.beams) grid += "\tK=" + std::to_string(k);
  grid += "\n";
  for (const auto& row : rows) {
    const auto model = load_model(o.model, row.model, vocab);
    const auto instances = load_checked_instances(row.instances, vocab);
    for (const bool g : {false, true}) {
      grid += row.variant + "\t" + (g ? "on" : "off");
      for (auto k : o.beams) {
        const auto cell = dir / "cells" / (row.variant + "_g-" + (g ? "on" : "off") + "_k" + std::to_string(k));
        const auto done = cell / "bleu.txt";
        std::string bleu;
        if (fs::exists(done)) {
          bleu = read_file(done);
          while (!bleu.empty() && (bleu.back() == '\n' || bleu.back() == '\r')) bleu.pop_back();
          std::cerr << "cell " << cell.filename().string() << " already done\n";
        } else {
          fs::create_directories(cell);
          BeamConfig config;
          config.beam_width = k;
          config.use_future_cost = g;
          config.score_eos = on_off(o.eos);
          const auto run = run_order(model, instances, vocab, config, o.seed);
          write_file_atomic(cell / "outputs.jsonl", run.outputs);
          write_file_atomic(cell / "timings.tsv", run.timings);
          const auto report = evaluate_files((cell / "outputs.jsonl").string(), row.instances, 40);
          write_report(cell, report);
          write_config(cell, "order",
                       {{"model", o.model}, {"model_file", row.model}, {"vocab", o.vocab},
                        {"instances", row.instances}, {"beam", k}, {"future_cost", g ? "on" : "off"},
                        {"eos", o.eos}, {"seed", o.seed}});
          bleu = format_double(report.corpus.bleu);
          write_file_atomic(done, bleu + "\n");
          std::cerr << "cell " << cell.filename().string() << " BLEU " << bleu << "\n";
        }
        grid += "\t" + bleu;
      }
      grid += "\n";
    }
  }
  write_file_atomic(dir / "grid.tsv", grid);
  std::cout << grid;
  return 0;
}

// ---------------------------------------------------------------------------
// synth

void write_synthetic(const fs::path& text, const fs::path& spans, const std::vector<SyntheticSentence>& sentences) {
  std::string t, s;
  for (const auto& sentence : sentences) {
    for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
      if (i) t += ' ';
      t += sentence.tokens[i];
    }
    t += '\n';
    s += format_span_line(sentence.bnp_spans) + "\n";
  }
  write_file_atomic(text, t);
  write_file_atomic(spans, s);
}

int cmd_synth(const SynthOptions& o) {
  const auto dir = make_out_dir(o.out);
  SyntheticConfig train_config;
  train_config.target_tokens = o.train_tokens;
  train_config.seed = o.seed;
  SyntheticConfig test_config = train_config;
  test_config.target_tokens = o.test_tokens;
  test_config.seed = o.seed + 1;
  write_synthetic(dir / "train.txt", dir / "train.spans", generate_synthetic(train_config));
  write_synthetic(dir / "test.txt", dir / "test.spans", generate_synthetic(test_config));
  write_config(dir, "synth", {{"train_tokens", o.train_tokens}, {"test_tokens", o.test_tokens}, {"seed", o.seed}});
  return 0;
}

int dispatch(CLI::App& app, int argc_or_neg, char** argv, const std::vector<std::string>* args) {
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  PrepareOptions prepare;
  auto* p = app.add_subcommand("prepare", "Build a vocabulary, LM training text and shuffled instances");
  p->add_option("--train", prepare.train, "Training text, one sentence per line")->required();
  p->add_option("--train-spans", prepare.train_spans, "BNP spans for the training text");
  p->add_option("--text", prepare.text, "Text to turn into ordering instances")->required();
  p->add_option("--spans", prepare.spans, "BNP spans for --text");
  p->add_option("--variant", prepare.variant)->check(CLI::IsMember({"words", "words-bnps"}));
  p->add_option("--min-count", prepare.min_count, "Minimum training count to stay in the vocabulary");
  p->add_option("--seed", prepare.seed);
  p->add_option("--out", prepare.out)->required();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train an n-gram or LSTM language model");
  t->add_option("--model", tr.model)->check(CLI::IsMember({"ngram", "lstm"}));
  t->add_option("--corpus", tr.corpus, "lm_corpus.txt from prepare")->required();
  t->add_option("--vocab", tr.vocab)->required();
  t->add_option("--order", tr.order, "N-gram order");
  t->add_flag("--prune-singletons", tr.prune_singletons);
  t->add_option("--hidden", tr.hidden);
  t->add_option("--layers", tr.layers);
  t->add_option("--epochs", tr.lstm.epochs);
  t->add_option("--lr", tr.lstm.learning_rate);
  t->add_option("--lr-decay", tr.lstm.lr_decay);
  t->add_option("--decay-after", tr.lstm.decay_after);
  t->add_option("--clip", tr.lstm.clip);
  t->add_option("--bptt", tr.lstm.bptt);
  t->add_option("--dropout", tr.lstm.dropout);
  t->add_option("--seed", tr.lstm.seed);
  t->add_option("--out", tr.out)->required();

  OrderOptions ord;
  auto* o = app.add_subcommand("order", "Decode instances with beam search");
  o->add_option("--model", ord.model)->check(CLI::IsMember({"ngram", "lstm"}));
  o->add_option("--model-file", ord.model_file)->required();
  o->add_option("--vocab", ord.vocab)->required();
  o->add_option("--instances", ord.instances)->required();
  o->add_option("--beam", ord.beam, "Beam width K");
  o->add_option("--future-cost", ord.future_cost)->check(CLI::IsMember({"on", "off"}));
  o->add_option("--eos", ord.eos)->check(CLI::IsMember({"on", "off"}));
  o->add_option("--seed", ord.seed, "Seed for restoring UNK tokens");
  o->add_option("--out", ord.out)->required();

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "BLEU, per-length BLEU and distortion of decoder outputs");
  e->add_option("--outputs", ev.outputs)->required();
  e->add_option("--instances", ev.instances)->required();
  e->add_option("--max-len", ev.max_len);
  e->add_option("--out", ev.out)->required();

  SweepOptions sw;
  auto* s = app.add_subcommand("sweep", "BLEU grid over variant, future cost and beam width");
  s->add_option("--model", sw.model)->check(CLI::IsMember({"ngram", "lstm"}));
  s->add_option("--vocab", sw.vocab)->required();
  s->add_option("--words-model", sw.words_model);
  s->add_option("--words-instances", sw.words_instances);
  s->add_option("--bnps-model", sw.bnps_model);
  s->add_option("--bnps-instances", sw.bnps_instances);
  s->add_option("--beams", sw.beams)->delimiter(',');
  s->add_option("--eos", sw.eos)->check(CLI::IsMember({"on", "off"}));
  s->add_option("--seed", sw.seed);
  s->add_option("--out", sw.out)->required();

  SynthOptions sy;
  auto* y = app.add_subcommand("synth", "Write a synthetic corpus with BNP spans");
  y->add_option("--train-tokens", sy.train_tokens);
  y->add_option("--test-tokens", sy.test_tokens);
  y->add_option("--seed", sy.seed);
  y->add_option("--out", sy.out)->required();

  try {
    if (args) {
      std::vector<std::string> reversed(args->rbegin(), args->rend());
      app.parse(reversed);
    } else {
      app.parse(argc_or_neg, argv);
    }
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*p) return cmd_prepare(prepare);
    if (*t) return cmd_train(tr);
    if (*o) return cmd_order(ord);
    if (*e) return cmd_evaluate(ev);
    if (*s) return cmd_sweep(sw);
    if (*y) return cmd_synth(sy);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace

unsigned worker_count() {
  if (const char* env = std::getenv("WORDORDER_WORKERS")) {
    unsigned n = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, n);
    if (ec == std::errc() && ptr == end && n > 0) return n;
    throw ConfigError("WORDORDER_WORKERS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(int argc, char** argv) {
  CLI::App app{"Word ordering with n-gram and LSTM language models", "wordorder"};
  return dispatch(app, argc, argv, nullptr);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Word ordering with n-gram and LSTM language models", "wordorder"};
  return dispatch(app, 0, nullptr, &args);
}

}  // namespace wordorder::cli
