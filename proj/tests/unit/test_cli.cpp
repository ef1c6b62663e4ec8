#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "wordorder/cli.hpp"
#include "wordorder/corpus.hpp"
#include "wordorder/decoder.hpp"

using namespace wordorder;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream in(slurp(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

int run_cli(std::vector<std::string> args) { return cli::run(args); }

std::size_t vocab_size_from_stats(const fs::path& stats) {
  const auto text = slurp(stats);
  const auto at = text.find("size=");
  REQUIRE(at != std::string::npos);
  return std::stoul(text.substr(at + 5));
}

// One synthetic corpus, prepared for both variants and with a 3-gram model each.
struct Workspace {
  fs::path root;
  fs::path data;

  Workspace() {
    root = fs::temp_directory_path() / ("wordorder_unit_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    data = root / "data";
    REQUIRE(run_cli({"synth", "--train-tokens", "4000", "--test-tokens", "300", "--seed", "5", "--out", data.string()}) == 0);
    for (const std::string variant : {"words", "words-bnps"}) {
      const auto prep = root / ("prep-" + variant);
      REQUIRE(run_cli({"prepare", "--train", (data / "train.txt").string(), "--train-spans", (data / "train.spans").string(),
                   "--text", (data / "test.txt").string(), "--spans", (data / "test.spans").string(), "--variant",
                   variant, "--out", prep.string()}) == 0);
      REQUIRE(run_cli({"train", "--model", "ngram", "--order", "3", "--corpus", (prep / "lm_corpus.txt").string(),
                   "--vocab", (prep / "vocab.txt").string(), "--out", (root / ("lm-" + variant)).string()}) == 0);
    }
  }
  ~Workspace() { fs::remove_all(root); }

  fs::path prep(const std::string& v) const { return root / ("prep-" + v); }
  fs::path model(const std::string& v) const { return root / ("lm-" + v) / "model.arpa"; }

  int order(const std::string& v, const fs::path& instances, const std::string& beam, const fs::path& out,
            const std::string& g = "on") const {
    return run_cli({"order", "--model", "ngram", "--model-file", model(v).string(), "--vocab",
                (prep(v) / "vocab.txt").string(), "--instances", instances.string(), "--beam", beam, "--future-cost",
                g, "--out", out.string()});
  }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("prepare writes instances and stats") {
  auto& w = workspace();
  const auto test_lines = lines_of(w.data / "test.txt");
  for (const std::string v : {"words", "words-bnps"}) {
    const auto dir = w.prep(v);
    for (const char* name : {"vocab.txt", "lm_corpus.txt", "instances.jsonl", "stats.txt", "prepare_config.json"}) {
      CHECK(fs::exists(dir / name));
    }
    CHECK(lines_of(dir / "instances.jsonl").size() == test_lines.size());
    const auto stats = slurp(dir / "stats.txt");
    CHECK(stats.find("train: sentences=") != std::string::npos);
    CHECK(stats.find("unk_rate=") != std::string::npos);
    const auto config = nlohmann::json::parse(slurp(dir / "prepare_config.json"));
    CHECK(config["command"] == "prepare");
    CHECK(config["args"]["variant"] == v);
  }
  const auto instances = read_instances(w.prep("words-bnps") / "instances.jsonl");
  CHECK(std::any_of(instances.begin(), instances.end(), [](const Instance& i) {
    return std::any_of(i.gold_phrases.begin(), i.gold_phrases.end(), [](const Phrase& p) { return p.is_bnp; });
  }));
}

TEST_CASE("prepare is reproducible and the seed matters") {
  auto& w = workspace();
  const auto out = w.root / "prep-again";
  const auto base = std::vector<std::string>{"prepare", "--train", (w.data / "train.txt").string(),
                                             "--text", (w.data / "test.txt").string()};
  auto with = [&](std::vector<std::string> extra) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  REQUIRE(run_cli(with({"--out", out.string()})) == 0);
  CHECK(slurp(out / "instances.jsonl") == slurp(w.prep("words") / "instances.jsonl"));
  CHECK(slurp(out / "vocab.txt") == slurp(w.prep("words") / "vocab.txt"));
  REQUIRE(run_cli(with({"--seed", "99", "--out", out.string()})) == 0);
  CHECK(slurp(out / "instances.jsonl") != slurp(w.prep("words") / "instances.jsonl"));
}

TEST_CASE("vocabulary shrinks with the count threshold") {
  auto& w = workspace();
  std::size_t previous = SIZE_MAX;
  for (const std::string min_count : {"1", "2", "5"}) {
    const auto out = w.root / ("prep-min" + min_count);
    REQUIRE(run_cli({"prepare", "--train", (w.data / "train.txt").string(), "--text", (w.data / "test.txt").string(),
                 "--min-count", min_count, "--out", out.string()}) == 0);
    const auto size = vocab_size_from_stats(out / "stats.txt");
    CHECK(size <= previous);
    previous = size;
  }
}

TEST_CASE("prepare input errors") {
  auto& w = workspace();
  const auto out = (w.root / "prep-bad").string();
  CHECK(run_cli({"prepare", "--train", (w.data / "train.txt").string(), "--text", (w.data / "test.txt").string(),
             "--variant", "words-bnps", "--out", out}) == 2);
  const auto bad_spans = w.root / "bad.spans";
  auto spans = lines_of(w.data / "test.spans");
  spans[0] = "7:2";
  std::string text;
  for (const auto& s : spans) text += s + "\n";
  spit(bad_spans, text);
  CHECK(run_cli({"prepare", "--train", (w.data / "train.txt").string(), "--train-spans", (w.data / "train.spans").string(),
             "--text", (w.data / "test.txt").string(), "--spans", bad_spans.string(), "--variant", "words-bnps",
             "--out", out}) == 3);
  CHECK(run_cli({"prepare", "--train", (w.root / "missing.txt").string(), "--text", (w.data / "test.txt").string(),
             "--out", out}) == 3);
}

TEST_CASE("parse errors exit with 2") {
  CHECK(run_cli({"order", "--bogus"}) == 2);
  CHECK(run_cli({"train", "--model", "transformer", "--corpus", "x", "--vocab", "y", "--out", "z"}) == 2);
  CHECK(run_cli({}) == 2);
}

TEST_CASE("order and evaluate") {
  auto& w = workspace();
  const auto instances = w.prep("words-bnps") / "instances.jsonl";
  const auto out = w.root / "order-bnps";
  REQUIRE(w.order("words-bnps", instances, "4", out) == 0);
  const auto outputs = lines_of(out / "outputs.jsonl");
  const auto gold = read_instances(instances);
  REQUIRE(outputs.size() == gold.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto j = nlohmann::json::parse(outputs[i]);
    CHECK(j["id"] == gold[i].id);
    CHECK(j["beam"] == 4);
    auto tokens = j["tokens"].get<std::vector<std::string>>();
    auto ref = reference_tokens(gold[i]);
    std::sort(tokens.begin(), tokens.end());
    std::sort(ref.begin(), ref.end());
    CHECK(tokens == ref);
  }
  CHECK(lines_of(out / "timings.tsv").size() == gold.size() + 1);
  CHECK(slurp(out / "summary.txt").find("mean score: ") != std::string::npos);

  const auto eval = w.root / "eval-bnps";
  REQUIRE(run_cli({"evaluate", "--outputs", (out / "outputs.jsonl").string(), "--instances", instances.string(), "--out",
               eval.string()}) == 0);
  CHECK(lines_of(eval / "distortion.tsv").size() == 11);
  CHECK(fs::exists(eval / "report.txt"));
  CHECK(fs::exists(eval / "lengths.tsv"));
}

TEST_CASE("gold outputs evaluate to 100") {
  auto& w = workspace();
  const auto instances = w.prep("words") / "instances.jsonl";
  std::string outputs;
  for (const auto& inst : read_instances(instances)) {
    nlohmann::json j;
    j["id"] = inst.id;
    j["tokens"] = reference_tokens(inst);
    outputs += j.dump() + "\n";
  }
  const auto path = w.root / "gold.jsonl";
  spit(path, outputs);
  const auto eval = w.root / "eval-gold";
  REQUIRE(run_cli({"evaluate", "--outputs", path.string(), "--instances", instances.string(), "--out", eval.string()}) == 0);
  CHECK(slurp(eval / "report.txt").find("BLEU\t100.0000") != std::string::npos);
  const auto dist = lines_of(eval / "distortion.tsv");
  CHECK(dist[1].rfind("0.0-0.1\t", 0) == 0);
  CHECK(dist[1].find("\t1") != std::string::npos);

  spit(path, outputs.substr(0, outputs.find('\n') + 1));
  CHECK(run_cli({"evaluate", "--outputs", path.string(), "--instances", instances.string(), "--out", eval.string()}) == 3);
}

TEST_CASE("future cost is irrelevant without pruning") {
  auto& w = workspace();
  std::string short_lines;
  for (const auto& line : lines_of(w.prep("words") / "instances.jsonl")) {
    if (instance_from_json(line).gold_phrases.size() <= 6) short_lines += line + "\n";
  }
  REQUIRE_FALSE(short_lines.empty());
  const auto instances = w.root / "short.jsonl";
  spit(instances, short_lines);
  REQUIRE(w.order("words", instances, "5040", w.root / "short-on", "on") == 0);
  REQUIRE(w.order("words", instances, "5040", w.root / "short-off", "off") == 0);
  CHECK(slurp(w.root / "short-on" / "outputs.jsonl") == slurp(w.root / "short-off" / "outputs.jsonl"));
}

TEST_CASE("worker count") {
  auto& w = workspace();
  const auto instances = w.prep("words") / "instances.jsonl";
  ::setenv("WORDORDER_WORKERS", "zero", 1);
  CHECK_THROWS(cli::worker_count());
  CHECK(w.order("words", instances, "2", w.root / "workers-bad") == 2);
  ::setenv("WORDORDER_WORKERS", "1", 1);
  REQUIRE(w.order("words", instances, "2", w.root / "workers-1") == 0);
  ::setenv("WORDORDER_WORKERS", "4", 1);
  CHECK(cli::worker_count() == 4);
  REQUIRE(w.order("words", instances, "2", w.root / "workers-4") == 0);
  ::unsetenv("WORDORDER_WORKERS");
  CHECK(slurp(w.root / "workers-1" / "outputs.jsonl") == slurp(w.root / "workers-4" / "outputs.jsonl"));
}

TEST_CASE("vocabulary mismatch is a data error") {
  auto& w = workspace();
  const auto other = w.root / "prep-other";
  REQUIRE(run_cli({"prepare", "--train", (w.data / "test.txt").string(), "--text", (w.data / "test.txt").string(),
               "--min-count", "3", "--out", other.string()}) == 0);
  CHECK(run_cli({"order", "--model", "ngram", "--model-file", w.model("words").string(), "--vocab",
             (other / "vocab.txt").string(), "--instances", (w.prep("words") / "instances.jsonl").string(), "--out",
             (w.root / "mismatch").string()}) == 3);
}

TEST_CASE("unigram model ties every ordering") {
  auto& w = workspace();
  const auto prep = w.prep("words");
  const auto lm = w.root / "lm-uni";
  REQUIRE(run_cli({"train", "--model", "ngram", "--order", "1", "--corpus", (prep / "lm_corpus.txt").string(), "--vocab",
               (prep / "vocab.txt").string(), "--out", lm.string()}) == 0);
  std::vector<std::vector<double>> scores;
  for (const std::string k : {"1", "8"}) {
    const auto out = w.root / ("order-uni-" + k);
    REQUIRE(run_cli({"order", "--model", "ngram", "--model-file", (lm / "model.arpa").string(), "--vocab",
                 (prep / "vocab.txt").string(), "--instances", (prep / "instances.jsonl").string(), "--beam", k,
                 "--out", out.string()}) == 0);
    scores.emplace_back();
    for (const auto& line : lines_of(out / "outputs.jsonl")) {
      scores.back().push_back(nlohmann::json::parse(line)["score"].get<double>());
    }
  }
  REQUIRE(scores[0].size() == scores[1].size());
  for (std::size_t i = 0; i < scores[0].size(); ++i) CHECK(scores[0][i] == doctest::Approx(scores[1][i]).epsilon(1e-12));
}

TEST_CASE("lstm training is reproducible") {
  auto& w = workspace();
  const auto prep = w.prep("words");
  std::vector<std::string> weights;
  for (const std::string run : {"a", "b"}) {
    const auto out = w.root / ("lstm-" + run);
    REQUIRE(run_cli({"train", "--model", "lstm", "--corpus", (prep / "lm_corpus.txt").string(), "--vocab",
                 (prep / "vocab.txt").string(), "--hidden", "8", "--layers", "1", "--epochs", "1", "--bptt", "10",
                 "--seed", "3", "--out", out.string()}) == 0);
    weights.push_back(slurp(out / "model.lstm"));
    CHECK(fs::exists(out / "train_log.txt"));
  }
  CHECK(weights[0] == weights[1]);
  REQUIRE(run_cli({"order", "--model", "lstm", "--model-file", (w.root / "lstm-a" / "model.lstm").string(), "--vocab",
               (prep / "vocab.txt").string(), "--instances", (prep / "instances.jsonl").string(), "--beam", "2",
               "--out", (w.root / "order-lstm").string()}) == 0);
  CHECK(lines_of(w.root / "order-lstm" / "outputs.jsonl").size() == lines_of(prep / "instances.jsonl").size());
}

TEST_CASE("sweep grid and resume") {
  auto& w = workspace();
  const auto out = w.root / "sweep";
  const std::vector<std::string> args{"sweep", "--model", "ngram", "--vocab", (w.prep("words") / "vocab.txt").string(),
                                      "--words-model", w.model("words").string(), "--words-instances",
                                      (w.prep("words") / "instances.jsonl").string(), "--bnps-model",
                                      w.model("words-bnps").string(), "--bnps-instances",
                                      (w.prep("words-bnps") / "instances.jsonl").string(), "--beams", "1,3",
                                      "--out", out.string()};
  REQUIRE(run_cli(args) == 0);
  const auto grid = lines_of(out / "grid.tsv");
  REQUIRE(grid.size() == 5);
  CHECK(grid[0] == "variant\tfuture_cost\tK=1\tK=3");
  CHECK(grid[1].rfind("words\toff\t", 0) == 0);
  CHECK(grid[4].rfind("words-bnps\ton\t", 0) == 0);
  for (const auto& row : grid) CHECK(std::count(row.begin(), row.end(), '\t') == 3);

  // A finished cell is not recomputed.
  spit(out / "cells" / "words_g-off_k1" / "bleu.txt", "12.5\n");
  REQUIRE(run_cli(args) == 0);
  CHECK(lines_of(out / "grid.tsv")[1] .rfind("words\toff\t12.5\t", 0) == 0);

  CHECK(run_cli({"sweep", "--vocab", (w.prep("words") / "vocab.txt").string(), "--out", out.string()}) == 2);
}
