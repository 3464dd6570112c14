#pragma once

// External-judge baseline: zero-shot / few-shot prompt construction, a strict
// verdict parser, a pluggable transport (HTTP client plus offline mocks), and
// a sequential-or-bounded-concurrent runner with retry, audit log, and
// evaluation report.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "zombiekit/classifier.hpp"
#include "zombiekit/corpus.hpp"
#include "zombiekit/textenc.hpp"

namespace zk {

enum class JudgeMode { ZeroShot, FewShot };

struct JudgeExemplar {
  std::string parent_text;
  std::string reply_text;
  Label label = Label::Unlabeled;
};

struct JudgePrompt {
  JudgeMode mode = JudgeMode::ZeroShot;
  std::string system_instructions;
  // Empty for ZeroShot; exactly 10 (5 General then 5 Zombie) for FewShot.
  std::vector<JudgeExemplar> exemplars;
  std::string query_parent;
  std::string query_reply;
};

// Exemplars are the first five labeled pairs of each class in pair_id
// lexicographic order; `seed` is accepted for interface stability but the
// selection is deliberately deterministic and ignores it.
JudgePrompt build_prompt(JudgeMode mode,
                         const std::vector<ReplyPair>& train_pairs,
                         const ReplyPair& query, std::uint64_t seed = 0);

// The full user-message text: exemplars (when present) followed by the query
// and the answer instruction. Byte-deterministic.
std::string render_prompt_text(const JudgePrompt& prompt);

enum class VerdictKind { General, Zombie, Unparseable };

std::string verdict_to_string(VerdictKind k);

struct JudgeVerdict {
  VerdictKind kind = VerdictKind::Unparseable;
  std::string raw_response;  // retained verbatim for audit
};

// Case-insensitive scan for the standalone answer tokens GENERAL / ZOMBIE
// (word characters on either side disqualify a hit). Exactly one distinct
// token kind present -> that verdict; both or neither -> Unparseable. Total
// and deterministic.
JudgeVerdict parse_verdict(const std::string& response_text);

struct TransportConfig {
  std::string endpoint = "http://127.0.0.1:8089/v1/chat/completions";
  std::string model_name = "judge-model";
  double timeout_seconds = 30.0;
  int max_retries = 2;   // attempts = 1 + max_retries
  int backoff_ms = 100;  // doubles per retry
  // Name of the environment variable holding the bearer token. Only the name
  // is ever stored or serialized; the value is read at send time and must
  // never reach logs, reports, or checkpoints.
  std::string credential_env = "ZOMBIEKIT_JUDGE_TOKEN";
};

struct JudgeRequest {
  std::string pair_id;
  std::string parent_text;
  std::string reply_text;
  std::string system_text;
  std::string user_text;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Returns the assistant's text. Throws std::runtime_error on failure; the
  // runner applies the retry policy. Must be safe to call from multiple
  // threads when bounded concurrency is enabled.
  virtual std::string send(const JudgeRequest& req) = 0;
};

// JSON chat-completions client over plain HTTP. This build carries no TLS, so
// https:// endpoints are rejected with a clear error. The bearer token comes
// from the environment at send time.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(TransportConfig cfg);
  std::string send(const JudgeRequest& req) override;

 private:
  TransportConfig cfg_;
};

// Offline mocks -------------------------------------------------------------

// Answers each query with its gold label (looked up by pair_id).
class OracleTransport : public Transport {
 public:
  explicit OracleTransport(const std::vector<ReplyPair>& pairs);
  std::string send(const JudgeRequest& req) override;

 private:
  std::unordered_map<std::string, Label> gold_;
};

// Always returns the same text (e.g. "maybe" to exercise Unparseable).
class FixedTextTransport : public Transport {
 public:
  explicit FixedTextTransport(std::string text);
  std::string send(const JudgeRequest& req) override;

 private:
  std::string text_;
};

// Answers ZOMBIE iff the reply shares no tokens with the parent post.
class OverlapHeuristicTransport : public Transport {
 public:
  explicit OverlapHeuristicTransport(TokenizerConfig tok = {});
  std::string send(const JudgeRequest& req) override;

 private:
  TokenizerConfig tok_;
};

// ---------------------------------------------------------------------------

struct AuditEntry {
  std::string pair_id;
  std::string prompt_sha256;  // over system text + "\n" + user text
  std::string response_text;
  std::string verdict;  // "general" | "zombie" | "unparseable"
  std::int64_t latency_ms = 0;
};

struct JudgeOptions {
  JudgeMode mode = JudgeMode::ZeroShot;
  // One re-ask with a stricter instruction when the first answer does not
  // parse; off by default to keep metrics honest and cost bounded.
  bool retry_unparseable = false;
  // 1 = strictly sequential; >1 = bounded concurrency. Output order is by
  // pair index either way.
  int max_in_flight = 1;
};

struct JudgeError {
  std::string pair_id;
  std::string message;
};

struct JudgeRunResult {
  std::vector<JudgeVerdict> verdicts;  // aligned with the input pairs
  // Confusion counts and precision/recall cover parseable verdicts; accuracy
  // divides by all pairs, so Unparseable and failed requests count as
  // misclassifications.
  EvalReport report;
  std::int64_t n_unparseable = 0;
  std::vector<JudgeError> errors;  // transport failures beyond retries
  std::vector<AuditEntry> audit;   // one entry per pair, input order
};

// Judges every pair (gold labels required), sequentially or with bounded
// concurrency. FewShot draws exemplars from train_pairs.
JudgeRunResult judge_pairs(const std::vector<ReplyPair>& pairs,
                           const std::vector<ReplyPair>& train_pairs,
                           Transport& transport, const TransportConfig& cfg,
                           const JudgeOptions& opts = {});

void save_audit(const std::vector<AuditEntry>& entries,
                const std::string& path);

std::string sha256_hex(std::string_view data);

}  // namespace zk
