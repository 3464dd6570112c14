#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zombiekit/contrastive.hpp"
#include "zombiekit/corpus.hpp"
#include "zombiekit/rng.hpp"
#include "zombiekit/textenc.hpp"

using namespace zk;

namespace {

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "zk-contrastive-tests";
  std::filesystem::create_directories(d);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Toy clean corpus with a strong echo signal: reply repeats half the parent
// tokens plus one filler word.
std::vector<CleanPair> toy_clean(int n, std::uint64_t seed) {
  const char* words[] = {"alpha", "bravo", "charlie", "delta", "echo",
                         "foxtrot", "golf", "hotel", "india", "juliet"};
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> w(0, 9);
  std::vector<CleanPair> out;
  for (int i = 0; i < n; ++i) {
    std::string a = words[w(rng)], b = words[w(rng)], c = words[w(rng)];
    CleanPair p;
    p.pair_id = "c" + std::to_string(i);
    p.parent_text = a + " " + b + " " + c;
    p.reply_text = a + " " + b + " filler" + std::to_string(w(rng));
    out.push_back(p);
  }
  return out;
}

std::vector<ReplyPair> toy_eval(int n) {
  std::vector<ReplyPair> out;
  for (int i = 0; i < n; ++i) {
    ReplyPair p;
    p.pair_id = "e" + std::to_string(i);
    p.parent_author_id = "x";
    p.reply_author_id = "y";
    if (i % 2) {
      p.parent_text = "alpha bravo charlie";
      p.reply_text = "alpha bravo delta";
      p.label = Label::General;
    } else {
      p.parent_text = "alpha bravo charlie";
      p.reply_text = "unrelated spam words" + std::to_string(i);
      p.label = Label::Zombie;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("mnr_loss closed forms") {
  // Batch of one: the positive is the only candidate, loss is exactly 0.
  MnrLoss l = mnr_loss({{0.3, -1.2, 0.5}}, {{2.0, 0.1, 0.4}}, 20.0);
  CHECK(l.value == doctest::Approx(0.0).epsilon(1e-15));

  // All rows identical: every cosine is 1, softmax is uniform, loss = ln B.
  std::vector<std::vector<double>> same(4, {1.0, 2.0});
  l = mnr_loss(same, same, 20.0);
  CHECK(l.value == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // Orthogonal cross: S = scale * I_2, per-row loss = ln(1 + e^-scale).
  std::vector<std::vector<double>> anchors{{1, 0}, {0, 1}};
  l = mnr_loss(anchors, anchors, 20.0);
  CHECK(l.value == doctest::Approx(2.0611536203143807e-9).epsilon(1e-6));
  l = mnr_loss(anchors, anchors, 2.0);
  CHECK(l.value == doctest::Approx(0.12692801104297250).epsilon(1e-12));

  CHECK(l.zero_norm_rows == 0);
}

TEST_CASE("mnr_loss: zero-norm rows use cosine 0 and are counted") {
  MnrLoss l = mnr_loss({{0, 0}}, {{1, 0}}, 20.0);
  CHECK(l.value == doctest::Approx(0.0));
  CHECK(l.zero_norm_rows == 1);

  // Zero anchor against two positives: its row scores are all 0, so the
  // softmax is uniform over B=2.
  l = mnr_loss({{0, 0}, {1, 0}}, {{1, 0}, {0, 1}}, 20.0);
  CHECK(l.zero_norm_rows == 1);
}

TEST_CASE("mnr_loss validates shapes") {
  CHECK_THROWS_AS(mnr_loss({}, {}, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(mnr_loss({{1, 0}}, {{1, 0}, {0, 1}}, 20.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mnr_loss({{1, 0}}, {{1, 0, 3}}, 20.0),
                  std::invalid_argument);
}

TEST_CASE("mnr_loss is invariant under rescaling of the embeddings") {
  Rng rng = make_rng(71);
  std::normal_distribution<double> N(0, 1);
  for (int cse = 0; cse < 10; ++cse) {
    std::vector<std::vector<double>> a(5, std::vector<double>(8)),
        b(5, std::vector<double>(8));
    for (auto& row : a)
      for (auto& x : row) x = N(rng);
    for (auto& row : b)
      for (auto& x : row) x = N(rng);
    double base = mnr_loss(a, b, 20.0).value;
    for (auto& row : a)
      for (auto& x : row) x *= 2.0;
    for (auto& row : b)
      for (auto& x : row) x *= 0.5;
    CHECK(mnr_loss(a, b, 20.0).value == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("mnr_gradients match central finite differences") {
  EncoderModel m = make_encoder(64, 6, 0, 9);
  std::vector<std::string> anchors{"alpha bravo", "charlie delta echo",
                                   "golf"};
  std::vector<std::string> positives{"alpha hotel", "delta echo",
                                     "golf india juliet"};

  MnrBatchGradients g = mnr_gradients(anchors, positives, m, 20.0);
  CHECK(g.loss == doctest::Approx(mnr_loss(
                                      {encode(m, anchors[0]), encode(m, anchors[1]),
                                       encode(m, anchors[2])},
                                      {encode(m, positives[0]), encode(m, positives[1]),
                                       encode(m, positives[2])},
                                      20.0)
                                      .value));

  const double eps = 1e-6;
  for (auto& [bucket, grad] : g.row_grads) {
    for (std::uint32_t k = 0; k < m.embed_dim; ++k) {
      EncoderModel plus = m, minus = m;
      plus.row(bucket)[k] += eps;
      minus.row(bucket)[k] -= eps;
      double lp = mnr_gradients(anchors, positives, plus, 20.0).loss;
      double lm = mnr_gradients(anchors, positives, minus, 20.0).loss;
      double fd = (lp - lm) / (2 * eps);
      // The denominator floor sits above the central-difference cancellation
      // noise (~1e-9 for an O(10) loss): entries smaller than the floor are
      // compared absolutely, everything else relatively.
      double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-3});
      CHECK(std::abs(fd - grad[k]) / denom <= 1e-4);
    }
  }

  // Rows not touched by any batch token carry no gradient entry.
  std::uint32_t untouched = 0;
  while (g.row_grads.count(untouched)) ++untouched;
  CHECK(g.row_grads.find(untouched) == g.row_grads.end());
}

TEST_CASE("mnr_gradients: duplicate tokens accumulate into one row") {
  EncoderModel m = make_encoder(32, 4, 0, 2);
  // Same token on both sides: the chain rule passes through the shared row.
  MnrBatchGradients g = mnr_gradients({"alpha alpha"}, {"alpha"}, m, 5.0);
  // Loss for B=1 is 0 and stays 0 under perturbation of this row only if the
  // gradient is exactly zero.
  for (auto& [bucket, grad] : g.row_grads)
    for (double v : grad) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("train_encoder: deterministic, lr 0 is a no-op, validation") {
  auto clean = toy_clean(64, 1);
  EncoderModel m = make_encoder(256, 8, 0, 3);

  MnrConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 2;
  cfg.learning_rate = 0.5;

  auto [t1, log1] = train_encoder(clean, m, cfg);
  auto [t2, log2] = train_encoder(clean, m, cfg);
  CHECK(t1.table == t2.table);
  CHECK(log1.epoch_mean_loss == log2.epoch_mean_loss);
  REQUIRE(log1.epoch_mean_loss.size() == 2);

  MnrConfig frozen = cfg;
  frozen.learning_rate = 0.0;
  auto [t0, log0] = train_encoder(clean, m, frozen);
  CHECK(t0.table == m.table);

  MnrConfig bad = cfg;
  bad.batch_size = 100;  // more than the corpus
  CHECK_THROWS_AS(train_encoder(clean, m, bad), std::invalid_argument);
  bad = cfg;
  bad.scale = 0.0;
  CHECK_THROWS_AS(train_encoder(clean, m, bad), std::invalid_argument);
  bad = cfg;
  bad.epochs = -1;
  CHECK_THROWS_AS(train_encoder(clean, m, bad), std::invalid_argument);
}

TEST_CASE("train_encoder reduces the loss on an echo corpus") {
  auto clean = toy_clean(128, 2);
  EncoderModel m = make_encoder(512, 16, 0, 4);
  MnrConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 6;
  cfg.learning_rate = 2.0;
  auto [trained, log] = train_encoder(clean, m, cfg);
  REQUIRE(log.epoch_mean_loss.size() == 6);
  CHECK(log.epoch_mean_loss.back() < log.epoch_mean_loss.front());
  CHECK(log.epoch_seconds.size() == 6);
}

TEST_CASE("train_encoder with Adam runs deterministically and learns") {
  auto clean = toy_clean(128, 3);
  EncoderModel m = make_encoder(512, 16, 0, 4);
  MnrConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 4;
  cfg.learning_rate = 0.01;
  cfg.optimizer = Optimizer::Adam;
  auto [t1, log1] = train_encoder(clean, m, cfg);
  auto [t2, log2] = train_encoder(clean, m, cfg);
  CHECK(t1.table == t2.table);
  CHECK(log1.epoch_mean_loss.back() < log1.epoch_mean_loss.front());
}

TEST_CASE("similarity_margin: separated toy classes and validation") {
  EncoderModel m = make_encoder(256, 8, 0, 5);
  auto pairs = toy_eval(10);
  double margin = similarity_margin(m, pairs);
  // Generals share 2 of 3 tokens, zombies share none: the margin must be
  // clearly positive even before training.
  CHECK(margin > 0.2);
  // Difference of two means of cosines: the attainable range is [-2, 2].
  CHECK(margin <= 2.0 + 1e-12);

  std::vector<ReplyPair> only_general;
  for (auto& p : pairs)
    if (p.label == Label::General) only_general.push_back(p);
  CHECK_THROWS_AS(similarity_margin(m, only_general), std::invalid_argument);
}

TEST_CASE("fine-tuning widens the margin on the toy corpus") {
  auto clean = toy_clean(200, 7);
  EncoderModel m = make_encoder(512, 16, 0, 6);
  MnrConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 8;
  cfg.learning_rate = 2.0;
  auto [trained, log] = train_encoder(clean, m, cfg);

  auto eval = toy_eval(40);
  CHECK(similarity_margin(trained, eval) > similarity_margin(m, eval));
}

TEST_CASE("save_train_log writes one JSON line per epoch") {
  TrainLog log;
  log.epoch_mean_loss = {0.5, 0.25};
  log.epoch_seconds = {0.01, 0.011};
  log.final_margin = 0.4;
  log.final_margin_present = true;
  auto path = (temp_dir() / "log.jsonl").string();
  save_train_log(log, path);
  std::istringstream lines(slurp(path));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    if (j.contains("epoch")) {
      CHECK(j.contains("mean_loss"));
      ++n;
    }
  }
  CHECK(n == 2);
}
