#include "zombiekit/llmjudge.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

#include <openssl/evp.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace zk {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1)
    throw std::runtime_error("sha256_hex: digest failure");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0x0F];
  }
  return out;
}

namespace {

const char* kSystemText =
    "You review pairs of Japanese social-media posts. Given a parent post and "
    "a reply, decide whether the reply engages with the content of the parent "
    "post. Answer GENERAL if the reply has a semantic connection to the "
    "parent post. Answer ZOMBIE if the reply ignores the parent post's "
    "content. Respond with exactly one word: GENERAL or ZOMBIE.";

const char* kStrictSuffix =
    "\n\nYour previous answer was not one of the two answer tokens. Respond "
    "with exactly one word: GENERAL or ZOMBIE.";

}  // namespace

JudgePrompt build_prompt(JudgeMode mode,
                         const std::vector<ReplyPair>& train_pairs,
                         const ReplyPair& query, std::uint64_t seed) {
  (void)seed;  // accepted for interface stability; selection is deterministic
  JudgePrompt p;
  p.mode = mode;
  p.system_instructions = kSystemText;
  p.query_parent = query.parent_text;
  p.query_reply = query.reply_text;
  if (mode == JudgeMode::ZeroShot) return p;

  std::vector<const ReplyPair*> general, zombie;
  for (const ReplyPair& tp : train_pairs) {
    if (tp.label == Label::General)
      general.push_back(&tp);
    else if (tp.label == Label::Zombie)
      zombie.push_back(&tp);
  }
  auto by_id = [](const ReplyPair* a, const ReplyPair* b) {
    return a->pair_id < b->pair_id;
  };
  std::sort(general.begin(), general.end(), by_id);
  std::sort(zombie.begin(), zombie.end(), by_id);
  if (general.size() < 5 || zombie.size() < 5)
    throw std::invalid_argument(
        "build_prompt: few-shot mode needs at least 5 labeled pairs per class "
        "(have " +
        std::to_string(general.size()) + " general, " +
        std::to_string(zombie.size()) + " zombie)");
  for (std::size_t i = 0; i < 5; ++i)
    p.exemplars.push_back(
        {general[i]->parent_text, general[i]->reply_text, Label::General});
  for (std::size_t i = 0; i < 5; ++i)
    p.exemplars.push_back(
        {zombie[i]->parent_text, zombie[i]->reply_text, Label::Zombie});
  return p;
}

std::string render_prompt_text(const JudgePrompt& prompt) {
  std::string out;
  if (!prompt.exemplars.empty()) {
    out += "Here are labeled examples.\n\n";
    std::size_t n = 0;
    for (const JudgeExemplar& e : prompt.exemplars) {
      out += "Example " + std::to_string(++n) + "\n";
      out += "Parent: " + e.parent_text + "\n";
      out += "Reply: " + e.reply_text + "\n";
      out += "Answer: ";
      out += e.label == Label::Zombie ? "ZOMBIE" : "GENERAL";
      out += "\n\n";
    }
  }
  out += "Classify this pair.\n";
  out += "Parent: " + prompt.query_parent + "\n";
  out += "Reply: " + prompt.query_reply + "\n";
  out += "Answer:";
  return out;
}

std::string verdict_to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::General:
      return "general";
    case VerdictKind::Zombie:
      return "zombie";
    default:
      return "unparseable";
  }
}

JudgeVerdict parse_verdict(const std::string& response_text) {
  std::string lower;
  lower.reserve(response_text.size());
  for (char c : response_text)
    lower += (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c;
  auto is_word = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  };
  auto has_standalone = [&](const std::string& token) {
    std::size_t pos = 0;
    while ((pos = lower.find(token, pos)) != std::string::npos) {
      const bool left_ok = pos == 0 || !is_word(lower[pos - 1]);
      const std::size_t end = pos + token.size();
      const bool right_ok = end == lower.size() || !is_word(lower[end]);
      if (left_ok && right_ok) return true;
      pos += 1;
    }
    return false;
  };
  const bool g = has_standalone("general");
  const bool z = has_standalone("zombie");
  JudgeVerdict v;
  v.raw_response = response_text;
  if (g == z)
    v.kind = VerdictKind::Unparseable;  // both is a conflict, neither a miss
  else
    v.kind = z ? VerdictKind::Zombie : VerdictKind::General;
  return v;
}

// Transports -----------------------------------------------------------------

HttpTransport::HttpTransport(TransportConfig cfg) : cfg_(std::move(cfg)) {}

std::string HttpTransport::send(const JudgeRequest& req) {
  const std::string& url = cfg_.endpoint;
  if (url.rfind("https://", 0) == 0)
    throw std::runtime_error(
        "judge transport: TLS is not compiled into this build; use an http:// "
        "endpoint");
  if (url.rfind("http://", 0) != 0)
    throw std::runtime_error("judge transport: unsupported endpoint URL " +
                             url);
  const std::size_t host_begin = 7;  // past "http://"
  const std::size_t slash = url.find('/', host_begin);
  const std::string origin =
      slash == std::string::npos ? url : url.substr(0, slash);
  const std::string path =
      slash == std::string::npos ? "/" : url.substr(slash);

  nlohmann::json body;
  body["model"] = cfg_.model_name;
  body["messages"] = nlohmann::json::array(
      {{{"role", "system"}, {"content", req.system_text}},
       {{"role", "user"}, {"content", req.user_text}}});

  httplib::Client client(origin);
  const auto timeout = std::chrono::milliseconds(
      std::llround(std::max(cfg_.timeout_seconds, 0.001) * 1000.0));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (const char* token = std::getenv(cfg_.credential_env.c_str());
      token != nullptr && token[0] != '\0')
    headers.emplace("Authorization", std::string("Bearer ") + token);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res)
    throw std::runtime_error("judge transport: request to " + origin +
                             " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw std::runtime_error("judge transport: HTTP " +
                             std::to_string(res->status) + " from " + origin);
  nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") ||
      !reply["choices"].is_array() || reply["choices"].empty() ||
      !reply["choices"][0].contains("message") ||
      !reply["choices"][0]["message"].contains("content") ||
      !reply["choices"][0]["message"]["content"].is_string())
    throw std::runtime_error(
        "judge transport: response is not chat-completions shaped");
  return reply["choices"][0]["message"]["content"].get<std::string>();
}

OracleTransport::OracleTransport(const std::vector<ReplyPair>& pairs) {
  for (const ReplyPair& p : pairs) gold_[p.pair_id] = p.label;
}

std::string OracleTransport::send(const JudgeRequest& req) {
  auto it = gold_.find(req.pair_id);
  if (it == gold_.end() || it->second == Label::Unlabeled)
    throw std::runtime_error("oracle transport: no gold label for pair " +
                             req.pair_id);
  return it->second == Label::Zombie ? "ZOMBIE" : "GENERAL";
}

FixedTextTransport::FixedTextTransport(std::string text)
    : text_(std::move(text)) {}

std::string FixedTextTransport::send(const JudgeRequest&) { return text_; }

OverlapHeuristicTransport::OverlapHeuristicTransport(TokenizerConfig tok)
    : tok_(tok) {}

std::string OverlapHeuristicTransport::send(const JudgeRequest& req) {
  std::vector<std::string> pt = tokenize(req.parent_text, tok_);
  std::vector<std::string> rt = tokenize(req.reply_text, tok_);
  std::set<std::string> parent_tokens(pt.begin(), pt.end());
  for (const std::string& t : rt)
    if (parent_tokens.count(t)) return "GENERAL";
  return "ZOMBIE";
}

// Runner ---------------------------------------------------------------------

namespace {

struct PairOutcome {
  JudgeVerdict verdict;
  AuditEntry audit;
  bool failed = false;
  std::string error;
};

PairOutcome judge_one(const ReplyPair& pair, const JudgePrompt& prompt,
                      Transport& transport, const TransportConfig& cfg,
                      const JudgeOptions& opts) {
  PairOutcome out;
  JudgeRequest req;
  req.pair_id = pair.pair_id;
  req.parent_text = pair.parent_text;
  req.reply_text = pair.reply_text;
  req.system_text = prompt.system_instructions;
  req.user_text = render_prompt_text(prompt);
  out.audit.pair_id = pair.pair_id;
  out.audit.prompt_sha256 = sha256_hex(req.system_text + "\n" + req.user_text);

  const auto t0 = std::chrono::steady_clock::now();
  const int attempts = 1 + std::max(cfg.max_retries, 0);
  std::string response;
  bool got_response = false;
  std::string last_error;
  for (int a = 0; a < attempts && !got_response; ++a) {
    if (a > 0 && cfg.backoff_ms > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(std::int64_t(cfg.backoff_ms) << (a - 1)));
    try {
      response = transport.send(req);
      got_response = true;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  if (got_response) {
    out.verdict = parse_verdict(response);
    if (out.verdict.kind == VerdictKind::Unparseable &&
        opts.retry_unparseable) {
      JudgeRequest strict = req;
      strict.user_text += kStrictSuffix;
      try {
        out.verdict = parse_verdict(transport.send(strict));
      } catch (const std::exception&) {
        // The first, unparseable response stands.
      }
    }
  } else {
    out.failed = true;
    out.error = last_error;
    out.verdict.kind = VerdictKind::Unparseable;
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.audit.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  out.audit.response_text = out.verdict.raw_response;
  out.audit.verdict = verdict_to_string(out.verdict.kind);
  return out;
}

}  // namespace

JudgeRunResult judge_pairs(const std::vector<ReplyPair>& pairs,
                           const std::vector<ReplyPair>& train_pairs,
                           Transport& transport, const TransportConfig& cfg,
                           const JudgeOptions& opts) {
  if (pairs.empty()) throw std::invalid_argument("judge_pairs: no pairs");
  if (opts.max_in_flight < 1)
    throw std::invalid_argument("judge_pairs: max_in_flight must be >= 1");
  for (const ReplyPair& p : pairs)
    if (p.label == Label::Unlabeled)
      throw std::invalid_argument(
          "judge_pairs: pair " + p.pair_id +
          " is unlabeled; gold labels are required to score");

  std::vector<PairOutcome> outcomes(pairs.size());
  auto work = [&](std::size_t i) {
    JudgePrompt prompt = build_prompt(opts.mode, train_pairs, pairs[i]);
    outcomes[i] = judge_one(pairs[i], prompt, transport, cfg, opts);
  };
  if (opts.max_in_flight == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < pairs.size();
           i = next.fetch_add(1))
        work(i);
    };
    const std::size_t n_threads =
        std::min<std::size_t>(std::size_t(opts.max_in_flight), pairs.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  JudgeRunResult result;
  result.verdicts.reserve(pairs.size());
  result.audit.reserve(pairs.size());
  EvalReport& r = result.report;
  r.n_test = std::int64_t(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairOutcome& o = outcomes[i];
    result.verdicts.push_back(o.verdict);
    result.audit.push_back(std::move(o.audit));
    if (o.failed) result.errors.push_back({pairs[i].pair_id, o.error});
    const bool gz = pairs[i].label == Label::Zombie;
    switch (o.verdict.kind) {
      case VerdictKind::General:
        gz ? ++r.zombie_as_general : ++r.correct_general;
        break;
      case VerdictKind::Zombie:
        gz ? ++r.correct_zombie : ++r.general_as_zombie;
        break;
      default:
        ++result.n_unparseable;  // scored as a miss via the accuracy divisor
        break;
    }
  }
  auto ratio = [](std::int64_t num, std::int64_t den) {
    Metric m;
    if (den > 0) {
      m.value = double(num) / double(den);
      m.defined = true;
    }
    return m;
  };
  r.precision_general =
      ratio(r.correct_general, r.correct_general + r.zombie_as_general);
  r.recall_general =
      ratio(r.correct_general, r.correct_general + r.general_as_zombie);
  r.precision_zombie =
      ratio(r.correct_zombie, r.correct_zombie + r.general_as_zombie);
  r.recall_zombie =
      ratio(r.correct_zombie, r.correct_zombie + r.zombie_as_general);
  r.accuracy = double(r.correct_general + r.correct_zombie) / double(r.n_test);
  return result;
}

void save_audit(const std::vector<AuditEntry>& entries,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_audit: cannot open " + path);
  for (const AuditEntry& e : entries) {
    nlohmann::json j;
    j["pair_id"] = e.pair_id;
    j["prompt_sha256"] = e.prompt_sha256;
    j["response_text"] = e.response_text;
    j["verdict"] = e.verdict;
    j["latency_ms"] = e.latency_ms;
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("save_audit: write failed: " + path);
}

}  // namespace zk
