// Synthetic corpus generator. Everything below is driven by named RNG streams
// derived from cfg.seed, so output is byte-identical per config. The word
// pools themselves come from a fixed internal seed: vocabulary is part of the
// generator's identity, not of any one corpus.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "zombiekit/corpus.hpp"
#include "zombiekit/rng.hpp"
#include "zombiekit/time.hpp"

namespace zk {

namespace {

// --------------------------------------------------------------------------
// Vocabulary

const char* kHiragana =
    "あいうえおかきくけこさしすせそたちつてとなにぬねのはひふへほ"
    "まみむめもやゆよらりるれろわをん";
const char* kKatakana =
    "アイウエオカキクケコサシスセソタチツテトナニヌネノハヒフヘホ"
    "マミムメモヤユヨラリルレロワヲン";
const char* kKanji =
    "日月火水木金土山川田中大小上下左右前後東西南北春夏秋冬朝昼夜"
    "空海星雨雪風花鳥魚犬猫人子女男学生先写真料理野菜果物音楽映画"
    "世界元気旅行電車時間毎週末番組新聞言葉文化歴史地図駅道橋店街";

std::vector<std::string> utf8_chars(const char* s) {
  std::vector<std::string> out;
  for (const char* p = s; *p;) {
    int len = 1;
    unsigned char b = *p;
    if ((b & 0xE0) == 0xC0) len = 2;
    else if ((b & 0xF0) == 0xE0) len = 3;
    else if ((b & 0xF8) == 0xF0) len = 4;
    out.emplace_back(p, len);
    p += len;
  }
  return out;
}

struct Vocab {
  std::vector<std::string> topic;    // builds parent posts
  std::vector<std::string> filler;   // pads coherent replies, general profiles
  std::vector<std::string> zombie;   // spam lexicon (Latin words)
  std::vector<std::string> emoji;
  std::vector<std::string> zombie_phrases;  // profile phrase bank
};

const Vocab& vocab() {
  static const Vocab v = [] {
    Vocab out;
    auto hira = utf8_chars(kHiragana);
    auto kana = utf8_chars(kKatakana);
    auto kanji = utf8_chars(kKanji);
    // Fixed internal seed: the pools must not move when cfg.seed changes.
    Rng rng = make_rng(0x5EEDF00DULL);
    std::set<std::string> pool;
    std::vector<std::string> words;
    std::uniform_int_distribution<int> len_dist(2, 4);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    while (words.size() < 700) {
      int len = len_dist(rng);
      std::string w;
      for (int i = 0; i < len; ++i) {
        double r = u01(rng);
        const auto& src = r < 0.6 ? hira : (r < 0.8 ? kana : kanji);
        w += src[std::uniform_int_distribution<size_t>(0, src.size() - 1)(rng)];
      }
      if (pool.insert(w).second) words.push_back(std::move(w));
    }
    out.topic.assign(words.begin(), words.begin() + 400);
    out.filler.assign(words.begin() + 400, words.end());

    out.zombie = {
        "follow",   "back",     "followback", "f4f",      "dm",
        "promo",    "viral",    "trend",      "trending", "impressions",
        "boost",    "boosting", "money",      "cash",     "crypto",
        "profit",   "click",    "link",       "free",     "gift",
        "giveaway", "lucky",    "winner",     "sub",      "subscribe",
        "team",     "support",  "big",        "fan",      "nice",
        "post",     "love",     "content",    "creator",  "social",
        "media",    "activist", "worker",     "teacher",  "student",
        "cricket",  "lover",    "believe",    "god",      "blessed",
        "good",     "morning",  "dear",       "friends",  "india",
        "breaking", "news",     "update",     "earn",     "online",
        "income",   "daily",    "real",       "official", "account",
        "plz",      "please",   "retweet",    "share",    "views",
        "for",      "in",       "my",         "no",
    };
    out.emoji = {"😂", "🔥", "🙏", "✨", "😍", "👍", "🎉", "💯", "🚀", "💰"};
    out.zombie_phrases = {
        "follow back",         "follow for follow",  "dm for promo",
        "content creator",     "social media activist", "cricket lover",
        "believe in god",      "good morning friends",  "breaking news update",
        "earn money online",   "crypto profit daily",   "big fan",
        "no promo dm",         "support my team",       "free gift giveaway",
    };
    return out;
  }();
  return v;
}

// --------------------------------------------------------------------------
// Sampling helpers (all drawing order below is load-bearing for determinism)

double u01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

size_t uidx(Rng& rng, size_t n) {
  return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
}

int uint_between(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

size_t sample_discrete(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double r = u01(rng) * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (r < acc) return i;
  }
  return weights.size() - 1;
}

// k distinct draws from pool, order of first pick kept.
std::vector<std::string> sample_distinct(Rng& rng,
                                         const std::vector<std::string>& pool,
                                         size_t k) {
  std::set<size_t> chosen;
  std::vector<std::string> out;
  while (out.size() < k && out.size() < pool.size()) {
    size_t i = uidx(rng, pool.size());
    if (chosen.insert(i).second) out.push_back(pool[i]);
  }
  return out;
}

std::string join(const std::vector<std::string>& words, const char* sep) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += sep;
    out += words[i];
  }
  return out;
}

std::string format_id(const char* prefix, size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
  return buf;
}

constexpr const char* kSnapshotIso = "2024-11-01T00:00:00Z";

// Age mixture component bounds (days).
constexpr double kAgeBounds[4] = {30.0, 500.0, 1800.0, 5000.0};

struct ClassNames {
  const char* account_prefix;
  const char* stream_suffix;
};

AccountRecord make_account(Rng& rng, Label label, size_t index,
                           const ClassDistParams& dist, UtcSeconds snapshot) {
  const Vocab& v = vocab();
  AccountRecord a;
  a.account_id = format_id(label == Label::General ? "acc_g_" : "acc_z_", index);
  a.label = label;
  a.snapshot_at = snapshot;

  size_t comp = sample_discrete(
      rng, {dist.age_weights[0], dist.age_weights[1], dist.age_weights[2]});
  double age_days = std::uniform_real_distribution<double>(
      kAgeBounds[comp], kAgeBounds[comp + 1])(rng);
  a.created_at = snapshot - std::llround(age_days * 86400.0);

  double ppd = std::lognormal_distribution<double>(dist.ppd_log_mu,
                                                   dist.ppd_log_sigma)(rng);
  a.total_posts = std::llround(ppd * age_days);

  a.followers_count =
      std::llround(std::lognormal_distribution<double>(std::log(300.0), 1.0)(rng));
  double ratio = std::lognormal_distribution<double>(dist.ratio_log_mu,
                                                     dist.ratio_log_sigma)(rng);
  a.following_count =
      a.followers_count > 0 ? std::llround(ratio * double(a.followers_count)) : 0;

  a.verified = u01(rng) < (label == Label::Zombie ? 0.7 : 0.1);

  if (label == Label::General) {
    // Japanese handle (+ optional digits), Japanese profile, 10% empty.
    std::string name = v.filler[uidx(rng, v.filler.size())] +
                       v.topic[uidx(rng, v.topic.size())];
    if (u01(rng) < 0.5) name += std::to_string(uint_between(rng, 0, 999));
    a.screen_name = name;
    if (u01(rng) >= 0.10) {
      int n = uint_between(rng, 3, 6);
      std::vector<std::string> words;
      for (int i = 0; i < n; ++i) {
        const auto& src = u01(rng) < 0.7 ? v.filler : v.topic;
        words.push_back(src[uidx(rng, src.size())]);
      }
      a.profile_text = join(words, " ");
    }
  } else {
    std::string name = v.zombie[uidx(rng, v.zombie.size())];
    if (u01(rng) < 0.3) name += "_";
    name += v.zombie[uidx(rng, v.zombie.size())];
    name += std::to_string(uint_between(rng, 10, 9999));
    a.screen_name = name;
    if (u01(rng) >= 0.10) {
      int n = uint_between(rng, 1, 3);
      std::vector<std::string> phrases;
      for (int i = 0; i < n; ++i)
        phrases.push_back(v.zombie_phrases[uidx(rng, v.zombie_phrases.size())]);
      std::string profile = join(phrases, " ");
      if (u01(rng) < 0.4) {
        profile += " ";
        profile += v.emoji[uidx(rng, v.emoji.size())];
      }
      a.profile_text = profile;
    }
  }
  return a;
}

std::vector<std::string> make_parent_words(Rng& rng) {
  int n = uint_between(rng, 6, 12);
  return sample_distinct(rng, vocab().topic, size_t(n));
}

// Coherent reply: echo round(coherence * |parent|) parent words + 2..5
// filler words, shuffled together.
std::string make_coherent_reply(Rng& rng,
                                const std::vector<std::string>& parent_words,
                                double coherence) {
  std::vector<std::string> words = parent_words;
  std::shuffle(words.begin(), words.end(), rng);
  size_t keep = size_t(std::llround(coherence * double(words.size())));
  words.resize(std::min(keep, words.size()));
  auto fillers =
      sample_distinct(rng, vocab().filler, size_t(uint_between(rng, 2, 5)));
  words.insert(words.end(), fillers.begin(), fillers.end());
  std::shuffle(words.begin(), words.end(), rng);
  return join(words, " ");
}

std::string make_zombie_reply(Rng& rng, const std::string& parent_text,
                              const SynthConfig& cfg) {
  const Vocab& v = vocab();
  if (u01(rng) < cfg.zombie_duplicate_rate) return parent_text;
  if (u01(rng) < cfg.zombie_emoji_rate) {
    int n = uint_between(rng, 1, 5);
    std::string reply;
    for (int i = 0; i < n; ++i) reply += v.emoji[uidx(rng, v.emoji.size())];
    return reply;
  }
  // Vocabulary reply; with probability zombie_vocab_overlap it is composed
  // from the general filler pool instead (lexical camouflage).
  const auto& pool = u01(rng) < cfg.zombie_vocab_overlap ? v.filler : v.zombie;
  auto words = sample_distinct(rng, pool, size_t(uint_between(rng, 3, 8)));
  std::string reply = join(words, " ");
  if (u01(rng) < 0.3) {
    reply += " ";
    int n = uint_between(rng, 1, 2);
    for (int i = 0; i < n; ++i) reply += v.emoji[uidx(rng, v.emoji.size())];
  }
  return reply;
}

// Reply timestamps live in a fixed four-week window starting Monday
// 2024-07-01 JST; day-of-week and hour are class-shaped, the rest uniform.
UtcSeconds make_reply_time(Rng& rng, Label label) {
  static const UtcSeconds jst_base =
      days_from_civil(2024, 7, 1) * 86400 - 9 * 3600;
  static const std::vector<double> dow_general = {0.125, 0.125, 0.125, 0.125,
                                                  0.14,  0.18,  0.18};
  static const std::vector<double> dow_zombie = {0.16, 0.14, 0.14, 0.14,
                                                 0.14, 0.14, 0.14};
  auto hour_weights = [](double mu, double sigma) {
    std::vector<double> w(24);
    for (int h = 0; h < 24; ++h)
      w[h] = std::exp(-0.5 * (h - mu) * (h - mu) / (sigma * sigma));
    return w;
  };
  static const std::vector<double> hour_general = hour_weights(13.0, 4.0);
  static const std::vector<double> hour_zombie = hour_weights(15.0, 3.0);

  bool zombie = label == Label::Zombie;
  int week = uint_between(rng, 0, 3);
  int dow = int(sample_discrete(rng, zombie ? dow_zombie : dow_general));
  int hour = int(sample_discrete(rng, zombie ? hour_zombie : hour_general));
  int minute = uint_between(rng, 0, 59);
  int second = uint_between(rng, 0, 59);
  return jst_base + ((week * 7 + dow) * 24 + hour) * 3600 + minute * 60 +
         second;
}

std::vector<Label> make_votes(Rng& rng, Label label) {
  // Vote splits tuned to land inter-annotator agreement near the reported
  // range; positions shuffled so no annotator column is special.
  int zombie_votes;
  double r = u01(rng);
  if (label == Label::General) {
    zombie_votes = r < 0.85 ? 0 : 1;
  } else {
    zombie_votes = r < 0.70 ? 4 : (r < 0.90 ? 3 : 2);
  }
  std::vector<Label> votes(4, Label::General);
  for (int i = 0; i < zombie_votes; ++i) votes[i] = Label::Zombie;
  std::shuffle(votes.begin(), votes.end(), rng);
  return votes;
}

ReplyPair make_pair(Rng& rng, Label label, size_t index,
                    const std::vector<AccountRecord>& accounts,
                    size_t class_begin, size_t class_count,
                    const SynthConfig& cfg) {
  ReplyPair p;
  p.pair_id = format_id("pair_", index);
  p.label = label;
  auto parent_words = make_parent_words(rng);
  p.parent_text = join(parent_words, " ");
  p.parent_author_id = "author_" + std::to_string(uint_between(rng, 0, 999));
  p.reply_text = label == Label::General
                     ? make_coherent_reply(rng, parent_words,
                                           cfg.coherence_overlap)
                     : make_zombie_reply(rng, p.parent_text, cfg);
  p.reply_author_id =
      class_count > 0
          ? accounts[class_begin + uidx(rng, class_count)].account_id
          : (label == Label::General ? "acc_g_none" : "acc_z_none");
  p.reply_created_at = make_reply_time(rng, label);
  p.annotator_votes = make_votes(rng, label);
  return p;
}

}  // namespace

const std::vector<std::string>& synth_topic_vocab() { return vocab().topic; }
const std::vector<std::string>& synth_filler_vocab() { return vocab().filler; }
const std::vector<std::string>& synth_zombie_vocab() { return vocab().zombie; }
const std::vector<std::string>& synth_emoji_vocab() { return vocab().emoji; }

void validate_synth_config(const SynthConfig& cfg) {
  auto need = [](bool ok, const char* field, const char* what) {
    if (!ok)
      throw std::invalid_argument(std::string("synth config field \"") + field +
                                  "\": " + what);
  };
  need(cfg.n_general_accounts >= 0, "n_general_accounts", "must be >= 0");
  need(cfg.n_zombie_accounts >= 0, "n_zombie_accounts", "must be >= 0");
  need(cfg.n_general_pairs >= 0, "n_general_pairs", "must be >= 0");
  need(cfg.n_zombie_pairs >= 0, "n_zombie_pairs", "must be >= 0");
  need(cfg.n_clean_pairs >= 0, "n_clean_pairs", "must be >= 0");
  auto rate = [&](double x, const char* field) {
    need(x >= 0.0 && x <= 1.0, field, "must be in [0,1]");
  };
  rate(cfg.coherence_overlap, "coherence_overlap");
  rate(cfg.zombie_duplicate_rate, "zombie_duplicate_rate");
  rate(cfg.zombie_emoji_rate, "zombie_emoji_rate");
  rate(cfg.zombie_vocab_overlap, "zombie_vocab_overlap");
  auto dist = [&](const ClassDistParams& d, const char* cls) {
    std::string p = cls;
    need(d.ppd_log_sigma > 0.0, (p + ".ppd_log_sigma").c_str(), "must be > 0");
    need(d.ratio_log_sigma > 0.0, (p + ".ratio_log_sigma").c_str(),
         "must be > 0");
    double sum = 0.0;
    for (double w : d.age_weights) {
      need(w >= 0.0, (p + ".age_weights").c_str(), "must be non-negative");
      sum += w;
    }
    need(sum > 0.0, (p + ".age_weights").c_str(), "must have positive sum");
  };
  dist(cfg.general, "general");
  dist(cfg.zombie, "zombie");
}

SynthCorpus synth_generate(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  const UtcSeconds snapshot = parse_iso8601(kSnapshotIso);
  SynthCorpus out;

  {
    Rng rng = make_rng(derive_seed(cfg.seed, "synth.accounts.general"));
    for (std::int64_t i = 0; i < cfg.n_general_accounts; ++i)
      out.accounts.push_back(
          make_account(rng, Label::General, size_t(i), cfg.general, snapshot));
  }
  size_t zombie_begin = out.accounts.size();
  {
    Rng rng = make_rng(derive_seed(cfg.seed, "synth.accounts.zombie"));
    for (std::int64_t i = 0; i < cfg.n_zombie_accounts; ++i)
      out.accounts.push_back(
          make_account(rng, Label::Zombie, size_t(i), cfg.zombie, snapshot));
  }

  {
    Rng rng = make_rng(derive_seed(cfg.seed, "synth.pairs.general"));
    for (std::int64_t i = 0; i < cfg.n_general_pairs; ++i)
      out.pairs.push_back(make_pair(rng, Label::General, out.pairs.size(),
                                    out.accounts, 0, zombie_begin, cfg));
  }
  {
    Rng rng = make_rng(derive_seed(cfg.seed, "synth.pairs.zombie"));
    for (std::int64_t i = 0; i < cfg.n_zombie_pairs; ++i)
      out.pairs.push_back(make_pair(rng, Label::Zombie, out.pairs.size(),
                                    out.accounts, zombie_begin,
                                    out.accounts.size() - zombie_begin, cfg));
  }
  {
    // File order should not encode the class, so shuffle the labeled pairs.
    Rng rng = make_rng(derive_seed(cfg.seed, "synth.pairs.shuffle"));
    std::shuffle(out.pairs.begin(), out.pairs.end(), rng);
  }

  {
    Rng rng = make_rng(derive_seed(cfg.seed, "synth.clean"));
    for (std::int64_t i = 0; i < cfg.n_clean_pairs; ++i) {
      CleanPair p;
      p.pair_id = format_id("clean_", size_t(i));
      auto parent_words = make_parent_words(rng);
      p.parent_text = join(parent_words, " ");
      p.reply_text =
          make_coherent_reply(rng, parent_words, cfg.coherence_overlap);
      out.clean_pairs.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace zk
