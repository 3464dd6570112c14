#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "zombiekit/corpus.hpp"
#include "zombiekit/rng.hpp"
#include "zombiekit/textenc.hpp"

using namespace zk;

namespace {

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "zk-corpus-tests";
  std::filesystem::create_directories(d);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream f(p, std::ios::binary);
  f << body;
}

AccountRecord sample_account(const std::string& id) {
  AccountRecord a;
  a.account_id = id;
  a.screen_name = "user_" + id;
  a.profile_text = "hello";
  a.created_at = parse_iso8601("2019-01-01T00:00:00Z");
  a.snapshot_at = parse_iso8601("2024-01-01T00:00:00Z");
  a.total_posts = 100;
  a.followers_count = 10;
  a.following_count = 20;
  a.label = Label::General;
  return a;
}

ReplyPair sample_pair(const std::string& id, Label label) {
  ReplyPair p;
  p.pair_id = id;
  p.parent_text = "parent text " + id;
  p.reply_text = "reply text " + id;
  p.parent_author_id = "a" + id;
  p.reply_author_id = "b" + id;
  p.reply_created_at = parse_iso8601("2024-01-02T03:04:05Z");
  p.label = label;
  return p;
}

}  // namespace

TEST_CASE("label strings round trip; unknown input throws") {
  for (Label l : {Label::General, Label::Zombie, Label::Unlabeled})
    CHECK(label_from_string(label_to_string(l)) == l);
  CHECK(label_to_string(Label::Zombie) == "zombie");
  CHECK_THROWS_AS(label_from_string("Zombie"), std::invalid_argument);
  CHECK_THROWS_AS(label_from_string(""), std::invalid_argument);
}

TEST_CASE("round_half_even pins banker's rounding") {
  CHECK(round_half_even(2.5) == 2);
  CHECK(round_half_even(3.5) == 4);
  CHECK(round_half_even(-2.5) == -2);
  CHECK(round_half_even(-3.5) == -4);
  CHECK(round_half_even(0.5) == 0);
  CHECK(round_half_even(1.5) == 2);
  CHECK(round_half_even(2.49) == 2);
  CHECK(round_half_even(2.51) == 3);
  CHECK(round_half_even(7.0) == 7);
  CHECK(round_half_even(-0.5) == 0);
}

TEST_CASE("split_pairs: sizes, partition, determinism") {
  std::vector<ReplyPair> pairs;
  for (int i = 0; i < 10; ++i)
    pairs.push_back(sample_pair("p" + std::to_string(i),
                                i % 2 ? Label::Zombie : Label::General));

  DatasetSplit s = split_pairs(pairs, 0.8, 42);
  CHECK(s.train_ids.size() == 8);
  CHECK(s.test_ids.size() == 2);

  std::set<std::string> all(s.train_ids.begin(), s.train_ids.end());
  all.insert(s.test_ids.begin(), s.test_ids.end());
  CHECK(all.size() == 10);  // disjoint and exhaustive

  DatasetSplit again = split_pairs(pairs, 0.8, 42);
  CHECK(again.train_ids == s.train_ids);
  CHECK(again.test_ids == s.test_ids);
  DatasetSplit other = split_pairs(pairs, 0.8, 43);
  CHECK(other.train_ids != s.train_ids);
}

TEST_CASE("split_pairs: banker's rounding decides the train size") {
  std::vector<ReplyPair> pairs;
  for (int i = 0; i < 5; ++i)
    pairs.push_back(sample_pair("p" + std::to_string(i),
                                i % 2 ? Label::Zombie : Label::General));
  // 0.5 * 5 = 2.5 -> banker's rounding -> 2.
  DatasetSplit s = split_pairs(pairs, 0.5, 1);
  CHECK(s.train_ids.size() == 2);
  // 0.7 * 5 = 3.5 -> 4.
  s = split_pairs(pairs, 0.7, 1);
  CHECK(s.train_ids.size() == 4);
}

TEST_CASE("split_pairs: stratified applies the rule per class") {
  std::vector<ReplyPair> pairs;
  for (int i = 0; i < 10; ++i) pairs.push_back(sample_pair("g" + std::to_string(i), Label::General));
  for (int i = 0; i < 6; ++i) pairs.push_back(sample_pair("z" + std::to_string(i), Label::Zombie));

  DatasetSplit s = split_pairs(pairs, 0.5, 7, true);
  auto count_prefix = [&](const std::vector<std::string>& ids, char c) {
    return std::count_if(ids.begin(), ids.end(),
                         [&](const std::string& id) { return id[0] == c; });
  };
  CHECK(count_prefix(s.train_ids, 'g') == 5);
  CHECK(count_prefix(s.train_ids, 'z') == 3);
  CHECK(s.stratified);
}

TEST_CASE("split_pairs rejects unlabeled pairs and bad fractions") {
  std::vector<ReplyPair> pairs{sample_pair("x1", Label::General),
                               sample_pair("x2", Label::Unlabeled)};
  try {
    split_pairs(pairs, 0.8, 1);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("x2") != std::string::npos);
  }
  pairs[1].label = Label::Zombie;
  CHECK_THROWS_AS(split_pairs(pairs, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_pairs(pairs, 1.0, 1), std::invalid_argument);
}

TEST_CASE("split save/load round trip") {
  auto dir = temp_dir();
  std::vector<ReplyPair> pairs;
  for (int i = 0; i < 6; ++i)
    pairs.push_back(sample_pair("p" + std::to_string(i),
                                i % 2 ? Label::Zombie : Label::General));
  DatasetSplit s = split_pairs(pairs, 0.5, 9, true);
  auto path = (dir / "split.json").string();
  save_split(s, path);
  DatasetSplit r = load_split(path);
  CHECK(r.train_ids == s.train_ids);
  CHECK(r.test_ids == s.test_ids);
  CHECK(r.seed == s.seed);
  CHECK(r.train_fraction == s.train_fraction);
  CHECK(r.stratified == s.stratified);
}

TEST_CASE("account/pair/clean-pair writers round trip through the loaders") {
  auto dir = temp_dir();
  std::vector<AccountRecord> accounts{sample_account("a1"), sample_account("a2")};
  accounts[1].label = Label::Zombie;
  accounts[1].verified = true;
  accounts[1].profile_text = "";

  auto apath = (dir / "accounts.jsonl").string();
  save_accounts(accounts, apath);
  auto ra = load_accounts(apath);
  REQUIRE(ra.size() == 2);
  CHECK(ra[0].account_id == "a1");
  CHECK(ra[1].verified);
  CHECK(ra[1].label == Label::Zombie);
  CHECK(ra[0].created_at == accounts[0].created_at);

  std::vector<ReplyPair> pairs{sample_pair("p1", Label::General),
                               sample_pair("p2", Label::Zombie)};
  pairs[1].annotator_votes = {Label::Zombie, Label::Zombie, Label::General,
                              Label::Zombie};
  auto ppath = (dir / "pairs.jsonl").string();
  save_pairs(pairs, ppath);
  auto rp = load_pairs(ppath);
  REQUIRE(rp.size() == 2);
  CHECK(rp[1].annotator_votes == pairs[1].annotator_votes);
  CHECK(rp[0].reply_created_at == pairs[0].reply_created_at);

  std::vector<CleanPair> clean{{"c1", "parent", "reply"}};
  auto cpath = (dir / "clean.jsonl").string();
  save_clean_pairs(clean, cpath);
  auto rc = load_clean_pairs(cpath);
  REQUIRE(rc.size() == 1);
  CHECK(rc[0].parent_text == "parent");

  // Writers are deterministic byte-for-byte.
  auto apath2 = (dir / "accounts2.jsonl").string();
  save_accounts(accounts, apath2);
  CHECK(slurp(apath) == slurp(apath2));
}

TEST_CASE("loaders name the line and field of the first defect") {
  auto dir = temp_dir();
  auto path = dir / "bad.jsonl";

  auto expect_throw_mentioning = [&](const std::string& body,
                                     const std::string& needle) {
    write_file(path, body);
    try {
      load_accounts(path.string());
      FAIL("expected throw for: ", needle);
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  const std::string good =
      R"({"account_id":"a1","screen_name":"u1","profile_text":"","created_at":"2019-01-01T00:00:00Z","snapshot_at":"2024-01-01T00:00:00Z","total_posts":1,"followers_count":0,"following_count":0,"verified":false,"label":"general"})";

  // Missing key.
  expect_throw_mentioning(
      R"({"account_id":"a1"})"
      "\n",
      "screen_name");
  // Unknown key, with the line number in the message.
  expect_throw_mentioning(good + "\n" +
                              R"({"account_id":"a2","screen_name":"u2","profile_text":"","created_at":"2019-01-01T00:00:00Z","snapshot_at":"2024-01-01T00:00:00Z","total_posts":1,"followers_count":0,"following_count":0,"verified":false,"label":"general","bogus":1})"
                              "\n",
                          "line 2");
  // Negative counter.
  std::string neg = good;
  size_t pos = neg.find("\"total_posts\":1");
  neg.replace(pos, 15, "\"total_posts\":-1");
  expect_throw_mentioning(neg + "\n", "total_posts");
  // created_at after snapshot_at.
  std::string swapped = good;
  pos = swapped.find("2019");
  swapped.replace(pos, 4, "2025");
  expect_throw_mentioning(swapped + "\n", "created_at");
  // Bad timestamp.
  std::string badts = good;
  pos = badts.find("2019-01-01T00:00:00Z");
  badts.replace(pos, 20, "2019-01-01");
  expect_throw_mentioning(badts + "\n", "created_at");
  // Duplicate id.
  expect_throw_mentioning(good + "\n" + good + "\n", "duplicate");
  // Not JSON at all.
  expect_throw_mentioning("not json\n", "line 1");
}

TEST_CASE("pair loader enforces the majority rule when votes are present") {
  auto dir = temp_dir();
  auto path = dir / "pairs-bad.jsonl";
  // 3 zombie votes but label general: majority rule violated.
  write_file(path,
             R"({"pair_id":"p1","parent_text":"a","reply_text":"b","parent_author_id":"x","reply_author_id":"y","reply_created_at":"2024-01-01T00:00:00Z","label":"general","annotator_votes":["zombie","zombie","zombie","general"]})"
             "\n");
  CHECK_THROWS_AS(load_pairs(path.string()), std::runtime_error);

  // Vote count other than 0 or 4 is rejected.
  write_file(path,
             R"({"pair_id":"p1","parent_text":"a","reply_text":"b","parent_author_id":"x","reply_author_id":"y","reply_created_at":"2024-01-01T00:00:00Z","label":"zombie","annotator_votes":["zombie"]})"
             "\n");
  CHECK_THROWS_AS(load_pairs(path.string()), std::runtime_error);
}

TEST_CASE("heuristic_prelabel evidence flags") {
  AccountRecord a = sample_account("x");

  a.screen_name = "JohnDoe";
  CHECK(heuristic_prelabel(a).non_japanese_name);
  a.screen_name = "太郎";  // 太郎
  CHECK_FALSE(heuristic_prelabel(a).non_japanese_name);
  a.screen_name = "12345";  // no letter at all
  CHECK_FALSE(heuristic_prelabel(a).non_japanese_name);
  a.screen_name = "john太";  // mixed: Japanese present
  CHECK_FALSE(heuristic_prelabel(a).non_japanese_name);

  a.verified = true;
  CHECK(heuristic_prelabel(a).verified);

  a.profile_text = "";
  CHECK_FALSE(heuristic_prelabel(a).non_japanese_profile);
  a.profile_text = "follow me";
  CHECK(heuristic_prelabel(a).non_japanese_profile);
  a.profile_text = "こんにちは";  // こんにちは
  CHECK_FALSE(heuristic_prelabel(a).non_japanese_profile);
}

TEST_CASE("validate_synth_config names the offending field") {
  SynthConfig cfg;
  CHECK_NOTHROW(validate_synth_config(cfg));

  cfg.zombie_duplicate_rate = 1.5;
  try {
    validate_synth_config(cfg);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("zombie_duplicate_rate") !=
          std::string::npos);
  }
  cfg = SynthConfig{};
  cfg.n_general_pairs = -1;
  CHECK_THROWS_AS(validate_synth_config(cfg), std::invalid_argument);
  cfg = SynthConfig{};
  cfg.general.ppd_log_sigma = 0.0;
  CHECK_THROWS_AS(validate_synth_config(cfg), std::invalid_argument);
  cfg = SynthConfig{};
  cfg.zombie.age_weights = {0, 0, 0};
  CHECK_THROWS_AS(validate_synth_config(cfg), std::invalid_argument);
  cfg = SynthConfig{};
  cfg.coherence_overlap = -0.1;
  CHECK_THROWS_AS(validate_synth_config(cfg), std::invalid_argument);
}

TEST_CASE("synth_generate: counts, labels, unique ids, determinism") {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.n_general_accounts = 40;
  cfg.n_zombie_accounts = 30;
  cfg.n_general_pairs = 25;
  cfg.n_zombie_pairs = 20;
  cfg.n_clean_pairs = 15;

  SynthCorpus c = synth_generate(cfg);
  CHECK(c.accounts.size() == 70);
  CHECK(c.pairs.size() == 45);
  CHECK(c.clean_pairs.size() == 15);

  std::int64_t zombies = 0, generals = 0;
  for (auto& a : c.accounts) (a.label == Label::Zombie ? zombies : generals)++;
  CHECK(generals == 40);
  CHECK(zombies == 30);

  std::unordered_set<std::string> ids;
  for (auto& p : c.pairs) ids.insert(p.pair_id);
  CHECK(ids.size() == c.pairs.size());

  for (auto& a : c.accounts) {
    CHECK(a.created_at <= a.snapshot_at);
    CHECK(a.total_posts >= 0);
  }

  // Byte-identical reruns.
  auto dir = temp_dir();
  SynthCorpus c2 = synth_generate(cfg);
  save_pairs(c.pairs, (dir / "r1.jsonl").string());
  save_pairs(c2.pairs, (dir / "r2.jsonl").string());
  CHECK(slurp(dir / "r1.jsonl") == slurp(dir / "r2.jsonl"));

  cfg.seed = 12;
  SynthCorpus c3 = synth_generate(cfg);
  save_pairs(c3.pairs, (dir / "r3.jsonl").string());
  CHECK(slurp(dir / "r1.jsonl") != slurp(dir / "r3.jsonl"));
}

TEST_CASE("synth_generate: n = 0 yields empty, loadable artifacts") {
  SynthConfig cfg;
  cfg.n_general_accounts = 0;
  cfg.n_zombie_accounts = 0;
  cfg.n_general_pairs = 0;
  cfg.n_zombie_pairs = 0;
  cfg.n_clean_pairs = 0;
  SynthCorpus c = synth_generate(cfg);
  CHECK(c.accounts.empty());
  CHECK(c.pairs.empty());
  CHECK(c.clean_pairs.empty());

  auto dir = temp_dir();
  save_accounts(c.accounts, (dir / "empty.jsonl").string());
  CHECK(load_accounts((dir / "empty.jsonl").string()).empty());
}

TEST_CASE("synth_generate: duplicate rate 1 makes every zombie reply a copy") {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.n_general_accounts = 5;
  cfg.n_zombie_accounts = 5;
  cfg.n_general_pairs = 30;
  cfg.n_zombie_pairs = 30;
  cfg.n_clean_pairs = 0;
  cfg.zombie_duplicate_rate = 1.0;
  SynthCorpus c = synth_generate(cfg);
  for (auto& p : c.pairs)
    if (p.label == Label::Zombie) CHECK(p.reply_text == p.parent_text);
}

TEST_CASE("synth_generate: zombie replies draw from the documented pools") {
  SynthConfig cfg;
  cfg.seed = 6;
  cfg.n_general_accounts = 5;
  cfg.n_zombie_accounts = 5;
  cfg.n_general_pairs = 40;
  cfg.n_zombie_pairs = 40;
  cfg.n_clean_pairs = 0;
  cfg.zombie_duplicate_rate = 0.0;
  cfg.zombie_emoji_rate = 0.0;
  cfg.zombie_vocab_overlap = 0.0;
  SynthCorpus c = synth_generate(cfg);

  std::unordered_set<std::string> zvocab, evocab;
  for (auto& w : synth_zombie_vocab()) zvocab.insert(w);
  for (auto& w : synth_emoji_vocab()) evocab.insert(w);

  // Without duplicates, emoji replies, or camouflage, every zombie reply
  // token comes from the spam lexicon or the emoji garnish (emoji surface as
  // single-character tokens).
  for (auto& p : c.pairs) {
    if (p.label != Label::Zombie) continue;
    for (auto& t : tokenize(p.reply_text))
      CHECK((zvocab.count(t) || evocab.count(t)));
  }
}

TEST_CASE("synth_generate: labeled votes respect the majority rule") {
  SynthConfig cfg;
  cfg.seed = 13;
  cfg.n_general_accounts = 5;
  cfg.n_zombie_accounts = 5;
  cfg.n_general_pairs = 50;
  cfg.n_zombie_pairs = 50;
  cfg.n_clean_pairs = 0;
  SynthCorpus c = synth_generate(cfg);
  for (auto& p : c.pairs) {
    if (p.annotator_votes.empty()) continue;
    REQUIRE(p.annotator_votes.size() == 4);
    int z = 0;
    for (Label v : p.annotator_votes) z += (v == Label::Zombie);
    CHECK((p.label == Label::Zombie) == (z >= 2));
  }
}

TEST_CASE("synth_generate: class contrasts point the documented way") {
  SynthConfig cfg;  // default sizes: 2000 accounts per class
  cfg.seed = 21;
  cfg.n_general_pairs = 0;
  cfg.n_zombie_pairs = 0;
  cfg.n_clean_pairs = 0;
  SynthCorpus c = synth_generate(cfg);

  double ppd_g = 0, ppd_z = 0, age500_g = 0, age500_z = 0;
  std::int64_t ng = 0, nz = 0;
  for (auto& a : c.accounts) {
    double age = double(a.snapshot_at - a.created_at) / 86400.0;
    double ppd = double(a.total_posts) / std::max(age, 1.0);
    if (a.label == Label::General) {
      ng++; ppd_g += ppd; age500_g += (age < 500);
    } else {
      nz++; ppd_z += ppd; age500_z += (age < 500);
    }
  }
  ppd_g /= double(ng); ppd_z /= double(nz);
  age500_g /= double(ng); age500_z /= double(nz);

  CHECK(ppd_z > 2.0 * ppd_g);
  CHECK(age500_z > age500_g);
}
