#include "zombiekit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "zombiekit/rng.hpp"
#include "zombiekit/textenc.hpp"

namespace zk {

using nlohmann::json;

std::string label_to_string(Label l) {
  switch (l) {
    case Label::General:
      return "general";
    case Label::Zombie:
      return "zombie";
    case Label::Unlabeled:
      return "unlabeled";
  }
  throw std::logic_error("label_to_string: bad enum value");
}

Label label_from_string(const std::string& s) {
  if (s == "general") return Label::General;
  if (s == "zombie") return Label::Zombie;
  if (s == "unlabeled") return Label::Unlabeled;
  throw std::invalid_argument("unknown label \"" + s + "\"");
}

namespace {

[[noreturn]] void line_error(const std::string& path, size_t lineno,
                             const std::string& msg) {
  throw std::runtime_error(path + " line " + std::to_string(lineno) + ": " +
                           msg);
}

json parse_line(const std::string& path, size_t lineno,
                const std::string& line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) line_error(path, lineno, "malformed JSON");
  if (!j.is_object()) line_error(path, lineno, "expected a JSON object");
  return j;
}

// Schema is closed: every listed key present, nothing else.
void require_keys(const json& j, std::initializer_list<const char*> keys,
                  const std::string& path, size_t lineno) {
  for (const char* k : keys)
    if (!j.contains(k))
      line_error(path, lineno, std::string("missing field \"") + k + "\"");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* want : keys)
      if (k == want) {
        known = true;
        break;
      }
    if (!known) line_error(path, lineno, "unknown field \"" + k + "\"");
  }
}

std::string get_string(const json& j, const char* key, const std::string& path,
                       size_t lineno) {
  const auto& v = j.at(key);
  if (!v.is_string())
    line_error(path, lineno, std::string("field \"") + key + "\": expected string");
  return v.get<std::string>();
}

std::int64_t get_count(const json& j, const char* key, const std::string& path,
                       size_t lineno) {
  const auto& v = j.at(key);
  if (!v.is_number_integer())
    line_error(path, lineno, std::string("field \"") + key + "\": expected integer");
  std::int64_t x = v.get<std::int64_t>();
  if (x < 0)
    line_error(path, lineno, std::string("field \"") + key + "\": must be non-negative");
  return x;
}

bool get_bool(const json& j, const char* key, const std::string& path,
              size_t lineno) {
  const auto& v = j.at(key);
  if (!v.is_boolean())
    line_error(path, lineno, std::string("field \"") + key + "\": expected boolean");
  return v.get<bool>();
}

UtcSeconds get_timestamp(const json& j, const char* key,
                         const std::string& path, size_t lineno) {
  std::string raw = get_string(j, key, path, lineno);
  try {
    return parse_iso8601(raw);
  } catch (const std::invalid_argument& e) {
    line_error(path, lineno, std::string("field \"") + key + "\": " + e.what());
  }
}

Label get_label(const json& j, const char* key, const std::string& path,
                size_t lineno) {
  std::string raw = get_string(j, key, path, lineno);
  try {
    return label_from_string(raw);
  } catch (const std::invalid_argument& e) {
    line_error(path, lineno, std::string("field \"") + key + "\": " + e.what());
  }
}

// Apply `fn` to each non-empty line of the file.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(lineno, line);
  }
}

}  // namespace

std::vector<AccountRecord> load_accounts(const std::string& path) {
  std::vector<AccountRecord> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](size_t lineno, const std::string& line) {
    json j = parse_line(path, lineno, line);
    require_keys(j,
                 {"account_id", "screen_name", "profile_text", "created_at",
                  "snapshot_at", "total_posts", "followers_count",
                  "following_count", "verified", "label"},
                 path, lineno);
    AccountRecord a;
    a.account_id = get_string(j, "account_id", path, lineno);
    if (a.account_id.empty())
      line_error(path, lineno, "field \"account_id\": must be non-empty");
    if (!seen.insert(a.account_id).second)
      line_error(path, lineno,
                 "field \"account_id\": duplicate id \"" + a.account_id + "\"");
    a.screen_name = get_string(j, "screen_name", path, lineno);
    a.profile_text = get_string(j, "profile_text", path, lineno);
    a.created_at = get_timestamp(j, "created_at", path, lineno);
    a.snapshot_at = get_timestamp(j, "snapshot_at", path, lineno);
    if (a.created_at > a.snapshot_at)
      line_error(path, lineno, "field \"created_at\": later than snapshot_at");
    a.total_posts = get_count(j, "total_posts", path, lineno);
    a.followers_count = get_count(j, "followers_count", path, lineno);
    a.following_count = get_count(j, "following_count", path, lineno);
    a.verified = get_bool(j, "verified", path, lineno);
    a.label = get_label(j, "label", path, lineno);
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<ReplyPair> load_pairs(const std::string& path) {
  std::vector<ReplyPair> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](size_t lineno, const std::string& line) {
    json j = parse_line(path, lineno, line);
    require_keys(j,
                 {"pair_id", "parent_text", "reply_text", "parent_author_id",
                  "reply_author_id", "reply_created_at", "label",
                  "annotator_votes"},
                 path, lineno);
    ReplyPair p;
    p.pair_id = get_string(j, "pair_id", path, lineno);
    if (p.pair_id.empty())
      line_error(path, lineno, "field \"pair_id\": must be non-empty");
    if (!seen.insert(p.pair_id).second)
      line_error(path, lineno,
                 "field \"pair_id\": duplicate id \"" + p.pair_id + "\"");
    p.parent_text = get_string(j, "parent_text", path, lineno);
    p.reply_text = get_string(j, "reply_text", path, lineno);
    p.parent_author_id = get_string(j, "parent_author_id", path, lineno);
    p.reply_author_id = get_string(j, "reply_author_id", path, lineno);
    p.reply_created_at = get_timestamp(j, "reply_created_at", path, lineno);
    p.label = get_label(j, "label", path, lineno);
    const auto& votes = j.at("annotator_votes");
    if (!votes.is_array())
      line_error(path, lineno, "field \"annotator_votes\": expected array");
    if (votes.size() != 0 && votes.size() != 4)
      line_error(path, lineno,
                 "field \"annotator_votes\": length must be 0 or 4");
    for (const auto& v : votes) {
      if (!v.is_string())
        line_error(path, lineno, "field \"annotator_votes\": expected strings");
      std::string raw = v.get<std::string>();
      if (raw != "general" && raw != "zombie")
        line_error(path, lineno,
                   "field \"annotator_votes\": vote must be general or zombie");
      p.annotator_votes.push_back(label_from_string(raw));
    }
    if (p.annotator_votes.size() == 4 && p.label != Label::Unlabeled) {
      int zombie_votes = 0;
      for (Label v : p.annotator_votes)
        if (v == Label::Zombie) ++zombie_votes;
      Label majority = zombie_votes >= 2 ? Label::Zombie : Label::General;
      if (p.label != majority)
        line_error(path, lineno,
                   "field \"label\": contradicts majority of annotator_votes");
    }
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<CleanPair> load_clean_pairs(const std::string& path) {
  std::vector<CleanPair> out;
  std::unordered_set<std::string> seen;
  for_each_line(path, [&](size_t lineno, const std::string& line) {
    json j = parse_line(path, lineno, line);
    require_keys(j, {"pair_id", "parent_text", "reply_text"}, path, lineno);
    CleanPair p;
    p.pair_id = get_string(j, "pair_id", path, lineno);
    if (p.pair_id.empty())
      line_error(path, lineno, "field \"pair_id\": must be non-empty");
    if (!seen.insert(p.pair_id).second)
      line_error(path, lineno,
                 "field \"pair_id\": duplicate id \"" + p.pair_id + "\"");
    p.parent_text = get_string(j, "parent_text", path, lineno);
    p.reply_text = get_string(j, "reply_text", path, lineno);
    out.push_back(std::move(p));
  });
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

}  // namespace

void save_accounts(const std::vector<AccountRecord>& accounts,
                   const std::string& path) {
  auto out = open_out(path);
  for (const auto& a : accounts) {
    json j{{"account_id", a.account_id},
           {"screen_name", a.screen_name},
           {"profile_text", a.profile_text},
           {"created_at", format_iso8601_utc(a.created_at)},
           {"snapshot_at", format_iso8601_utc(a.snapshot_at)},
           {"total_posts", a.total_posts},
           {"followers_count", a.followers_count},
           {"following_count", a.following_count},
           {"verified", a.verified},
           {"label", label_to_string(a.label)}};
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_pairs(const std::vector<ReplyPair>& pairs, const std::string& path) {
  auto out = open_out(path);
  for (const auto& p : pairs) {
    json votes = json::array();
    for (Label v : p.annotator_votes) votes.push_back(label_to_string(v));
    json j{{"pair_id", p.pair_id},
           {"parent_text", p.parent_text},
           {"reply_text", p.reply_text},
           {"parent_author_id", p.parent_author_id},
           {"reply_author_id", p.reply_author_id},
           {"reply_created_at", format_iso8601_utc(p.reply_created_at)},
           {"label", label_to_string(p.label)},
           {"annotator_votes", std::move(votes)}};
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_clean_pairs(const std::vector<CleanPair>& pairs,
                      const std::string& path) {
  auto out = open_out(path);
  for (const auto& p : pairs) {
    json j{{"pair_id", p.pair_id},
           {"parent_text", p.parent_text},
           {"reply_text", p.reply_text}};
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// Letter blocks for the "at least one letter" clause of the screen-name
// heuristic. Deliberately a block list, not full Unicode classification:
// covers the scripts that plausibly appear in account names while excluding
// digits, emoji, and symbols.
bool is_letter_cp(char32_t cp) {
  if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z')) return true;
  if (cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7)
    return true;                                  // Latin-1/Extended letters
  if (cp >= 0x0370 && cp <= 0x03FF) return true;  // Greek
  if (cp >= 0x0400 && cp <= 0x04FF) return true;  // Cyrillic
  if (cp >= 0x0530 && cp <= 0x058F) return true;  // Armenian
  if (cp >= 0x0590 && cp <= 0x05FF) return true;  // Hebrew
  if (cp >= 0x0600 && cp <= 0x06FF) return true;  // Arabic
  if (cp >= 0x0900 && cp <= 0x097F) return true;  // Devanagari
  if (cp >= 0x0980 && cp <= 0x09FF) return true;  // Bengali
  if (cp >= 0x0B80 && cp <= 0x0BFF) return true;  // Tamil
  if (cp >= 0x0E00 && cp <= 0x0E7F) return true;  // Thai
  if (cp >= 0x1100 && cp <= 0x11FF) return true;  // Hangul Jamo
  if (cp >= 0xAC00 && cp <= 0xD7AF) return true;  // Hangul syllables
  return is_japanese_script(cp);
}

}  // namespace

PrelabelFlags heuristic_prelabel(const AccountRecord& a) {
  PrelabelFlags f;
  f.verified = a.verified;

  bool name_has_jp = false, name_has_letter = false;
  for (char32_t cp : decode_utf8(a.screen_name)) {
    if (is_japanese_script(cp)) name_has_jp = true;
    if (is_letter_cp(cp)) name_has_letter = true;
  }
  f.non_japanese_name = !name_has_jp && name_has_letter;

  if (!a.profile_text.empty()) {
    bool profile_has_jp = false;
    for (char32_t cp : decode_utf8(a.profile_text))
      if (is_japanese_script(cp)) {
        profile_has_jp = true;
        break;
      }
    f.non_japanese_profile = !profile_has_jp;
  }
  return f;
}

std::int64_t round_half_even(double x) {
  double fl = std::floor(x);
  double frac = x - fl;
  if (frac > 0.5) return static_cast<std::int64_t>(fl) + 1;
  if (frac < 0.5) return static_cast<std::int64_t>(fl);
  std::int64_t lo = static_cast<std::int64_t>(fl);
  return (lo % 2 == 0) ? lo : lo + 1;
}

namespace {

std::vector<std::string> split_one_class(std::vector<std::string> ids,
                                         double train_fraction, Rng& rng,
                                         std::vector<std::string>& test_out) {
  std::shuffle(ids.begin(), ids.end(), rng);
  auto n_train = static_cast<size_t>(
      round_half_even(train_fraction * double(ids.size())));
  std::vector<std::string> train(ids.begin(), ids.begin() + n_train);
  test_out.insert(test_out.end(), ids.begin() + n_train, ids.end());
  return train;
}

}  // namespace

DatasetSplit split_pairs(const std::vector<ReplyPair>& pairs,
                         double train_fraction, std::uint64_t seed,
                         bool stratified) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_pairs: train_fraction must be in (0,1)");
  std::vector<std::string> unlabeled;
  for (const auto& p : pairs)
    if (p.label == Label::Unlabeled) unlabeled.push_back(p.pair_id);
  if (!unlabeled.empty()) {
    std::string msg = "split_pairs: unlabeled pairs present:";
    size_t shown = std::min<size_t>(unlabeled.size(), 20);
    for (size_t i = 0; i < shown; ++i) msg += " " + unlabeled[i];
    if (unlabeled.size() > shown)
      msg += " (and " + std::to_string(unlabeled.size() - shown) + " more)";
    throw std::invalid_argument(msg);
  }

  DatasetSplit s;
  s.seed = seed;
  s.train_fraction = train_fraction;
  s.stratified = stratified;
  Rng rng = make_rng(seed);
  if (!stratified) {
    std::vector<std::string> ids;
    ids.reserve(pairs.size());
    for (const auto& p : pairs) ids.push_back(p.pair_id);
    s.train_ids = split_one_class(std::move(ids), train_fraction, rng,
                                  s.test_ids);
  } else {
    std::vector<std::string> general, zombie;
    for (const auto& p : pairs)
      (p.label == Label::General ? general : zombie).push_back(p.pair_id);
    s.train_ids = split_one_class(std::move(general), train_fraction, rng,
                                  s.test_ids);
    auto train_z =
        split_one_class(std::move(zombie), train_fraction, rng, s.test_ids);
    s.train_ids.insert(s.train_ids.end(), train_z.begin(), train_z.end());
  }
  return s;
}

void save_split(const DatasetSplit& s, const std::string& path) {
  json j{{"train_fraction", s.train_fraction},
         {"seed", s.seed},
         {"stratified", s.stratified},
         {"train_ids", s.train_ids},
         {"test_ids", s.test_ids}};
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

DatasetSplit load_split(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad JSON in " + path + ": " + e.what());
  }
  DatasetSplit s;
  try {
    s.train_fraction = j.at("train_fraction").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.stratified = j.at("stratified").get<bool>();
    s.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    s.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw std::runtime_error("bad split file " + path + ": " + e.what());
  }
  return s;
}

}  // namespace zk
