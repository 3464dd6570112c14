#pragma once

// Data model, JSONL ingestion/validation, heuristic pre-labeling, dataset
// splitting, and the synthetic corpus generator.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "zombiekit/time.hpp"

namespace zk {

enum class Label { General, Zombie, Unlabeled };

// "general" / "zombie" / "unlabeled"; inverse throws on anything else.
std::string label_to_string(Label l);
Label label_from_string(const std::string& s);

struct AccountRecord {
  std::string account_id;
  std::string screen_name;
  std::string profile_text;  // may be empty
  UtcSeconds created_at = 0;
  UtcSeconds snapshot_at = 0;
  std::int64_t total_posts = 0;
  std::int64_t followers_count = 0;
  std::int64_t following_count = 0;
  bool verified = false;
  Label label = Label::Unlabeled;
};

struct ReplyPair {
  std::string pair_id;
  std::string parent_text;
  std::string reply_text;
  std::string parent_author_id;
  std::string reply_author_id;
  UtcSeconds reply_created_at = 0;
  Label label = Label::Unlabeled;
  // Empty, or exactly 4 entries of General/Zombie. When 4 votes are present
  // and the label is not Unlabeled, label = Zombie iff >= 2 votes are Zombie.
  std::vector<Label> annotator_votes;
};

struct CleanPair {
  std::string pair_id;
  std::string parent_text;
  std::string reply_text;
};

// Loaders validate per line and throw std::runtime_error naming the line
// number and field on the first defect (missing/unknown/ill-typed key,
// negative counter, duplicate id, created_at > snapshot_at, bad timestamp,
// majority-rule violation).
std::vector<AccountRecord> load_accounts(const std::string& path);
std::vector<ReplyPair> load_pairs(const std::string& path);
std::vector<CleanPair> load_clean_pairs(const std::string& path);

// Writers emit one JSON object per line, keys in lexicographic order, so a
// load/save round trip reproduces the file up to key order and whitespace.
void save_accounts(const std::vector<AccountRecord>& accounts,
                   const std::string& path);
void save_pairs(const std::vector<ReplyPair>& pairs, const std::string& path);
void save_clean_pairs(const std::vector<CleanPair>& pairs,
                      const std::string& path);

// Heuristic evidence flags; never a final label.
struct PrelabelFlags {
  // screen_name has no Japanese-script character and at least one letter.
  bool non_japanese_name = false;
  bool verified = false;
  // profile_text is non-empty and has no Japanese-script character.
  bool non_japanese_profile = false;
};

PrelabelFlags heuristic_prelabel(const AccountRecord& a);

// Banker's rounding, pinned independently of the FPU rounding mode; the
// dataset-split size rule.
std::int64_t round_half_even(double x);

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  bool stratified = false;
};

// Seeded shuffle of pair ids, prefix of round_half_even(train_fraction * N)
// as train. `stratified` applies the same rule per class. Throws if any pair
// is Unlabeled (message lists offending ids) or the fraction is outside (0,1).
DatasetSplit split_pairs(const std::vector<ReplyPair>& pairs,
                         double train_fraction, std::uint64_t seed,
                         bool stratified = false);

void save_split(const DatasetSplit& s, const std::string& path);
DatasetSplit load_split(const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic corpus generator

// Per-class sampling parameters. Account age is a three-component uniform
// mixture over [30,500), [500,1800), [1800,5000) days; posts-per-day and the
// following/followers ratio are lognormal (mu/sigma on the log scale).
struct ClassDistParams {
  double ppd_log_mu = 0.0;
  double ppd_log_sigma = 1.0;
  std::array<double, 3> age_weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  double ratio_log_mu = 0.0;
  double ratio_log_sigma = 1.0;
};

struct SynthConfig {
  std::uint64_t seed = 42;
  std::int64_t n_general_accounts = 2000;
  std::int64_t n_zombie_accounts = 2000;
  std::int64_t n_general_pairs = 2000;
  std::int64_t n_zombie_pairs = 2000;
  std::int64_t n_clean_pairs = 4000;

  // Fraction of parent tokens echoed into a coherent (general/clean) reply.
  double coherence_overlap = 0.5;
  // Fraction of zombie replies that are verbatim copies of the parent.
  double zombie_duplicate_rate = 0.10;
  // Of the non-duplicate zombie replies, fraction that are emoji-only.
  double zombie_emoji_rate = 0.15;
  // Probability that a zombie vocabulary reply is drawn entirely from the
  // general filler vocabulary instead of the spam lexicon (lexical camouflage
  // that leaves the contextual signal intact).
  double zombie_vocab_overlap = 0.0;

  // Defaults calibrated to the reported class means: posts/day 13.98 vs
  // 42.88, ratio 2.93 vs 1.26, age mass 18%/38%/44% vs 25%/41%/34%.
  ClassDistParams general{2.23263, 0.9, {0.18, 0.38, 0.44}, 0.67000, 0.9};
  ClassDistParams zombie{3.43841, 0.8, {0.25, 0.41, 0.34}, 0.16986, 0.35};
};

// Throws std::invalid_argument naming the field on the first violated bound
// (rates in [0,1], counts >= 0, sigmas > 0, weights non-negative with
// positive sum).
void validate_synth_config(const SynthConfig& cfg);

struct SynthCorpus {
  std::vector<AccountRecord> accounts;
  std::vector<ReplyPair> pairs;
  std::vector<CleanPair> clean_pairs;
};

// Deterministic for a fixed cfg (byte-identical serialized output).
SynthCorpus synth_generate(const SynthConfig& cfg);

// Fixed word pools the generator samples from; exposed so tests can reason
// about vocabulary membership. Topic words build parents, filler words build
// coherent-reply padding, the zombie lexicon and emoji build zombie replies.
const std::vector<std::string>& synth_topic_vocab();
const std::vector<std::string>& synth_filler_vocab();
const std::vector<std::string>& synth_zombie_vocab();
const std::vector<std::string>& synth_emoji_vocab();

}  // namespace zk
