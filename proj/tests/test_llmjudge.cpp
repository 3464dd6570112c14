#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "zombiekit/llmjudge.hpp"

using namespace zk;

namespace {

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "zk-judge-tests";
  std::filesystem::create_directories(d);
  return d;
}

ReplyPair jp(const std::string& id, const std::string& parent,
             const std::string& reply, Label label) {
  ReplyPair p;
  p.pair_id = id;
  p.parent_text = parent;
  p.reply_text = reply;
  p.parent_author_id = "a";
  p.reply_author_id = "b";
  p.label = label;
  return p;
}

// Ten labeled pairs, enough for few-shot exemplar selection.
std::vector<ReplyPair> train_bank() {
  std::vector<ReplyPair> v;
  for (int i = 0; i < 6; ++i)
    v.push_back(jp("tg" + std::to_string(i), "parent g" + std::to_string(i),
                   "reply g" + std::to_string(i), Label::General));
  for (int i = 0; i < 6; ++i)
    v.push_back(jp("tz" + std::to_string(i), "parent z" + std::to_string(i),
                   "reply z" + std::to_string(i), Label::Zombie));
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Records every request; scripted responses, cycled per call.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(std::vector<std::string> script)
      : script_(std::move(script)) {}
  std::string send(const JudgeRequest& req) override {
    std::lock_guard<std::mutex> lock(mu_);
    requests.push_back(req);
    const std::string& r = script_[calls_ % script_.size()];
    ++calls_;
    if (r == "<throw>") throw std::runtime_error("scripted transport down");
    return r;
  }
  std::vector<JudgeRequest> requests;

 private:
  std::mutex mu_;
  std::vector<std::string> script_;
  std::size_t calls_ = 0;
};

}  // namespace

TEST_CASE("parse_verdict: strict standalone-token scan") {
  CHECK(parse_verdict("GENERAL").kind == VerdictKind::General);
  CHECK(parse_verdict("zombie").kind == VerdictKind::Zombie);
  CHECK(parse_verdict("zombie.").kind == VerdictKind::Zombie);
  CHECK(parse_verdict("The answer is GENERAL.").kind == VerdictKind::General);
  CHECK(parse_verdict("**ZOMBIE**").kind == VerdictKind::Zombie);
  CHECK(parse_verdict("ZOMBIE\nZOMBIE").kind == VerdictKind::Zombie);
  CHECK(parse_verdict("Zombie, zombie, zombie!").kind == VerdictKind::Zombie);

  // Both tokens, embedded tokens, or no token at all fail closed.
  CHECK(parse_verdict("general or zombie").kind == VerdictKind::Unparseable);
  CHECK(parse_verdict("generally").kind == VerdictKind::Unparseable);
  CHECK(parse_verdict("ZOMBIE123").kind == VerdictKind::Unparseable);
  CHECK(parse_verdict("zombie_mode").kind == VerdictKind::Unparseable);
  CHECK(parse_verdict("not_general").kind == VerdictKind::Unparseable);
  CHECK(parse_verdict("").kind == VerdictKind::Unparseable);
  CHECK(parse_verdict("maybe?").kind == VerdictKind::Unparseable);

  JudgeVerdict v = parse_verdict("  ZoMbIe!  ");
  CHECK(v.kind == VerdictKind::Zombie);
  CHECK(v.raw_response == "  ZoMbIe!  ");

  CHECK(verdict_to_string(VerdictKind::General) == "general");
  CHECK(verdict_to_string(VerdictKind::Zombie) == "zombie");
  CHECK(verdict_to_string(VerdictKind::Unparseable) == "unparseable");
}

TEST_CASE("build_prompt: zero-shot carries no exemplars") {
  auto train = train_bank();
  ReplyPair q = jp("q0", "the parent", "the reply", Label::Unlabeled);
  JudgePrompt p = build_prompt(JudgeMode::ZeroShot, train, q);
  CHECK(p.exemplars.empty());
  CHECK(p.query_parent == "the parent");
  CHECK(p.query_reply == "the reply");
  CHECK_FALSE(p.system_instructions.empty());

  std::string text = render_prompt_text(p);
  CHECK(text.find("Example") == std::string::npos);
  CHECK(text.find("Parent: the parent\n") != std::string::npos);
  CHECK(text.rfind("Answer:") == text.size() - 7);
}

TEST_CASE("build_prompt: few-shot picks first five per class by pair_id") {
  // Deliberately shuffled insertion order; ids decide.
  std::vector<ReplyPair> train;
  for (int i : {5, 2, 0, 4, 1, 3}) {
    train.push_back(jp("g" + std::to_string(i), "pg" + std::to_string(i),
                       "rg" + std::to_string(i), Label::General));
    train.push_back(jp("z" + std::to_string(i), "pz" + std::to_string(i),
                       "rz" + std::to_string(i), Label::Zombie));
  }
  train.push_back(jp("u0", "pu", "ru", Label::Unlabeled));

  ReplyPair q = jp("q0", "qp", "qr", Label::Unlabeled);
  JudgePrompt p = build_prompt(JudgeMode::FewShot, train, q);
  REQUIRE(p.exemplars.size() == 10u);
  for (int i = 0; i < 5; ++i) {
    CHECK(p.exemplars[i].label == Label::General);
    CHECK(p.exemplars[i].parent_text == "pg" + std::to_string(i));
    CHECK(p.exemplars[5 + i].label == Label::Zombie);
    CHECK(p.exemplars[5 + i].reply_text == "rz" + std::to_string(i));
  }

  // The seed parameter must not change the selection.
  std::string a = render_prompt_text(build_prompt(JudgeMode::FewShot, train,
                                                  q, 1));
  std::string b = render_prompt_text(build_prompt(JudgeMode::FewShot, train,
                                                  q, 987654321));
  CHECK(a == b);
  CHECK(a.find("Example 10\n") != std::string::npos);
  CHECK(a.find("Answer: GENERAL") != std::string::npos);
  CHECK(a.find("Answer: ZOMBIE") != std::string::npos);
}

TEST_CASE("build_prompt: too few exemplars names both class counts") {
  std::vector<ReplyPair> train;
  for (int i = 0; i < 4; ++i)
    train.push_back(jp("g" + std::to_string(i), "p", "r", Label::General));
  for (int i = 0; i < 5; ++i)
    train.push_back(jp("z" + std::to_string(i), "p", "r", Label::Zombie));
  ReplyPair q = jp("q0", "qp", "qr", Label::Unlabeled);
  try {
    build_prompt(JudgeMode::FewShot, train, q);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("4 general") != std::string::npos);
    CHECK(msg.find("5 zombie") != std::string::npos);
  }
}

TEST_CASE("sha256_hex: pinned reference digests") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("judge_pairs: oracle transport scores perfectly and audits") {
  std::vector<ReplyPair> pairs{
      jp("p0", "nice weather", "very nice indeed", Label::General),
      jp("p1", "nice weather", "follow me back", Label::Zombie),
      jp("p2", "lunch today", "lunch sounds good", Label::General),
      jp("p3", "lunch today", "check my profile", Label::Zombie),
  };
  OracleTransport oracle(pairs);
  TransportConfig cfg;
  cfg.backoff_ms = 0;
  JudgeRunResult r = judge_pairs(pairs, {}, oracle, cfg);

  CHECK(r.report.accuracy == doctest::Approx(1.0));
  CHECK(r.report.n_test == 4);
  CHECK(r.n_unparseable == 0);
  CHECK(r.errors.empty());
  REQUIRE(r.verdicts.size() == 4u);
  CHECK(r.verdicts[0].kind == VerdictKind::General);
  CHECK(r.verdicts[1].kind == VerdictKind::Zombie);

  REQUIRE(r.audit.size() == 4u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(r.audit[i].pair_id == pairs[i].pair_id);
    // Recompute the prompt digest independently.
    JudgePrompt p = build_prompt(JudgeMode::ZeroShot, {}, pairs[i]);
    std::string expect =
        sha256_hex(p.system_instructions + "\n" + render_prompt_text(p));
    CHECK(r.audit[i].prompt_sha256 == expect);
    CHECK(r.audit[i].latency_ms >= 0);
    CHECK_FALSE(r.audit[i].verdict.empty());
  }
}

TEST_CASE("judge_pairs: unparseable answers score as misses") {
  std::vector<ReplyPair> pairs{
      jp("p0", "a", "b", Label::General),
      jp("p1", "a", "b", Label::Zombie),
  };
  FixedTextTransport mumble("maybe; hard to say");
  TransportConfig cfg;
  cfg.backoff_ms = 0;
  JudgeRunResult r = judge_pairs(pairs, {}, mumble, cfg);
  CHECK(r.n_unparseable == 2);
  CHECK(r.report.accuracy == doctest::Approx(0.0));
  CHECK(r.report.correct_general + r.report.correct_zombie +
            r.report.general_as_zombie + r.report.zombie_as_general ==
        0);
  CHECK_FALSE(r.report.precision_general.defined);
  CHECK_FALSE(r.report.precision_zombie.defined);
  CHECK(r.errors.empty());  // a parse miss is not a transport failure
  CHECK(r.audit[0].verdict == "unparseable");
}

TEST_CASE("overlap heuristic: hand-checked verdicts incl. duplicate miss") {
  std::vector<ReplyPair> pairs{
      // Shares "weather" -> GENERAL, gold General: correct.
      jp("p0", "nice weather today", "weather is lovely", Label::General),
      // Disjoint tokens -> ZOMBIE, gold Zombie: correct.
      jp("p1", "nice weather today", "follow back please", Label::Zombie),
      // Exact duplicate reply -> full overlap -> GENERAL, gold Zombie: the
      // copy-paste failure mode.
      jp("p2", "nice weather today", "nice weather today", Label::Zombie),
      // Disjoint tokens -> ZOMBIE, gold General: over-trigger.
      jp("p3", "nice weather today", "agreed completely", Label::General),
  };
  OverlapHeuristicTransport h;
  TransportConfig cfg;
  cfg.backoff_ms = 0;
  JudgeRunResult r = judge_pairs(pairs, {}, h, cfg);
  CHECK(r.verdicts[0].kind == VerdictKind::General);
  CHECK(r.verdicts[1].kind == VerdictKind::Zombie);
  CHECK(r.verdicts[2].kind == VerdictKind::General);
  CHECK(r.verdicts[3].kind == VerdictKind::Zombie);
  CHECK(r.report.correct_general == 1);
  CHECK(r.report.correct_zombie == 1);
  CHECK(r.report.zombie_as_general == 1);
  CHECK(r.report.general_as_zombie == 1);
  CHECK(r.report.accuracy == doctest::Approx(0.5));
}

TEST_CASE("judge_pairs: unparseable retry re-asks once with strict suffix") {
  std::vector<ReplyPair> pairs{jp("p0", "a", "b", Label::Zombie)};
  TransportConfig cfg;
  cfg.backoff_ms = 0;

  {
    ScriptedTransport t({"hmm", "ZOMBIE"});
    JudgeOptions opts;
    opts.retry_unparseable = true;
    JudgeRunResult r = judge_pairs(pairs, {}, t, cfg, opts);
    REQUIRE(t.requests.size() == 2u);
    CHECK(t.requests[1].user_text.rfind(t.requests[0].user_text, 0) == 0);
    CHECK(t.requests[1].user_text.find("previous answer") !=
          std::string::npos);
    CHECK(r.verdicts[0].kind == VerdictKind::Zombie);
    CHECK(r.n_unparseable == 0);
    CHECK(r.report.accuracy == doctest::Approx(1.0));
    // The audit keeps the answer that produced the verdict.
    CHECK(r.audit[0].response_text == "ZOMBIE");
  }
  {
    // Off by default: one request, miss stands.
    ScriptedTransport t({"hmm", "ZOMBIE"});
    JudgeRunResult r = judge_pairs(pairs, {}, t, cfg);
    CHECK(t.requests.size() == 1u);
    CHECK(r.n_unparseable == 1);
  }
  {
    // Retry throwing leaves the first, unparseable answer standing.
    ScriptedTransport t({"hmm", "<throw>"});
    JudgeOptions opts;
    opts.retry_unparseable = true;
    JudgeRunResult r = judge_pairs(pairs, {}, t, cfg, opts);
    CHECK(r.n_unparseable == 1);
    CHECK(r.errors.empty());
    CHECK(r.audit[0].response_text == "hmm");
  }
}

TEST_CASE("judge_pairs: transport failures retry with attempts = 1 + n") {
  std::vector<ReplyPair> pairs{jp("p0", "a", "b", Label::General),
                               jp("p1", "a", "b", Label::Zombie)};
  TransportConfig cfg;
  cfg.max_retries = 2;
  cfg.backoff_ms = 0;

  {
    ScriptedTransport t({"<throw>"});
    JudgeRunResult r = judge_pairs(pairs, {}, t, cfg);
    CHECK(t.requests.size() == 6u);  // 3 attempts x 2 pairs
    REQUIRE(r.errors.size() == 2u);
    CHECK(r.errors[0].pair_id == "p0");
    CHECK(r.errors[0].message.find("scripted transport down") !=
          std::string::npos);
    CHECK(r.verdicts[0].kind == VerdictKind::Unparseable);
    CHECK(r.n_unparseable == 2);
    CHECK(r.report.accuracy == doctest::Approx(0.0));
    CHECK(r.audit[0].response_text.empty());
  }
  {
    // Two failures then success fits inside max_retries = 2.
    ScriptedTransport t({"<throw>", "<throw>", "GENERAL",
                         "<throw>", "<throw>", "ZOMBIE"});
    JudgeRunResult r = judge_pairs(pairs, {}, t, cfg);
    CHECK(r.errors.empty());
    CHECK(r.verdicts[0].kind == VerdictKind::General);
    CHECK(r.verdicts[1].kind == VerdictKind::Zombie);
    CHECK(r.report.accuracy == doctest::Approx(1.0));
  }
  {
    // max_retries 0 means a single attempt.
    ScriptedTransport t({"<throw>", "GENERAL"});
    TransportConfig one = cfg;
    one.max_retries = 0;
    JudgeRunResult r = judge_pairs(pairs, {}, t, one);
    CHECK(t.requests.size() == 2u);
    REQUIRE(r.errors.size() == 1u);
    CHECK(r.errors[0].pair_id == "p0");
  }
}

TEST_CASE("judge_pairs: bounded concurrency preserves order and verdicts") {
  std::vector<ReplyPair> pairs;
  for (int i = 0; i < 24; ++i)
    pairs.push_back(jp("p" + std::to_string(100 + i), "parent text",
                       "reply " + std::to_string(i),
                       i % 3 ? Label::Zombie : Label::General));
  OracleTransport oracle(pairs);
  TransportConfig cfg;
  cfg.backoff_ms = 0;

  JudgeRunResult seq = judge_pairs(pairs, {}, oracle, cfg);
  JudgeOptions par;
  par.max_in_flight = 4;
  JudgeRunResult con = judge_pairs(pairs, {}, oracle, cfg, par);

  REQUIRE(con.verdicts.size() == seq.verdicts.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(con.verdicts[i].kind == seq.verdicts[i].kind);
    CHECK(con.audit[i].pair_id == pairs[i].pair_id);
    CHECK(con.audit[i].prompt_sha256 == seq.audit[i].prompt_sha256);
  }
  CHECK(con.report.accuracy == doctest::Approx(seq.report.accuracy));
  CHECK(con.report.correct_zombie == seq.report.correct_zombie);
}

TEST_CASE("judge_pairs: input validation") {
  OracleTransport oracle({});
  TransportConfig cfg;
  CHECK_THROWS_AS(judge_pairs({}, {}, oracle, cfg), std::invalid_argument);

  std::vector<ReplyPair> unlabeled{jp("p0", "a", "b", Label::Unlabeled)};
  CHECK_THROWS_AS(judge_pairs(unlabeled, {}, oracle, cfg),
                  std::invalid_argument);

  std::vector<ReplyPair> ok{jp("p0", "a", "b", Label::General)};
  JudgeOptions bad;
  bad.max_in_flight = 0;
  CHECK_THROWS_AS(judge_pairs(ok, {}, oracle, cfg, bad),
                  std::invalid_argument);
}

TEST_CASE("save_audit: one JSON line per entry with the full field set") {
  auto dir = temp_dir();
  std::vector<AuditEntry> entries;
  for (int i = 0; i < 3; ++i) {
    AuditEntry e;
    e.pair_id = "p" + std::to_string(i);
    e.prompt_sha256 = sha256_hex("prompt " + std::to_string(i));
    e.response_text = "ZOMBIE";
    e.verdict = "zombie";
    e.latency_ms = 12 + i;
    entries.push_back(e);
  }
  auto path = (dir / "audit.jsonl").string();
  save_audit(entries, path);

  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j["pair_id"] == "p" + std::to_string(n));
    CHECK(j["prompt_sha256"].get<std::string>().size() == 64u);
    CHECK(j["response_text"] == "ZOMBIE");
    CHECK(j["verdict"] == "zombie");
    CHECK(j["latency_ms"].is_number_integer());
    ++n;
  }
  CHECK(n == 3);

  CHECK_THROWS_AS(save_audit(entries, (dir / "no-such-dir" / "x.jsonl").string()),
                  std::runtime_error);
}

TEST_CASE("credential hygiene: the bearer token never reaches disk output") {
  const std::string token = "sk-zk-TOPSECRET-4X81JQ";
  REQUIRE(setenv("ZOMBIEKIT_JUDGE_TOKEN", token.c_str(), 1) == 0);

  auto train = train_bank();
  std::vector<ReplyPair> pairs{
      jp("p0", "nice weather", "weather indeed", Label::General),
      jp("p1", "nice weather", "follow me", Label::Zombie),
  };
  OracleTransport oracle(pairs);
  TransportConfig cfg;
  cfg.backoff_ms = 0;
  JudgeOptions opts;
  opts.mode = JudgeMode::FewShot;
  JudgeRunResult r = judge_pairs(pairs, train, oracle, cfg, opts);

  auto dir = temp_dir();
  auto audit_path = (dir / "hygiene-audit.jsonl").string();
  save_audit(r.audit, audit_path);
  auto report_path = (dir / "hygiene-report.json").string();
  {
    std::ofstream out(report_path, std::ios::binary);
    out << eval_report_to_json(r.report).dump(2);
  }

  CHECK(slurp(audit_path).find(token) == std::string::npos);
  CHECK(slurp(report_path).find(token) == std::string::npos);
  // The config itself only names the variable, never the value.
  CHECK(cfg.credential_env == "ZOMBIEKIT_JUDGE_TOKEN");

  unsetenv("ZOMBIEKIT_JUDGE_TOKEN");
}

TEST_CASE("http transport: https endpoints are rejected, not attempted") {
  TransportConfig cfg;
  cfg.endpoint = "https://127.0.0.1:1/v1/chat/completions";
  HttpTransport t(cfg);
  JudgeRequest req;
  req.pair_id = "p0";
  try {
    t.send(req);
    FAIL("expected runtime_error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("TLS") != std::string::npos);
  }

  cfg.endpoint = "ftp://example/v1";
  HttpTransport t2(cfg);
  CHECK_THROWS_AS(t2.send(req), std::runtime_error);
}

TEST_CASE("http transport: loopback chat-completions round trip") {
  const std::string token = "sk-zk-LOOPBACK-77";
  REQUIRE(setenv("ZOMBIEKIT_JUDGE_TOKEN", token.c_str(), 1) == 0);

  httplib::Server svr;
  std::mutex mu;
  std::vector<std::string> seen_auth, seen_bodies;
  svr.Post("/v1/chat/completions",
           [&](const httplib::Request& req, httplib::Response& res) {
             {
               std::lock_guard<std::mutex> lock(mu);
               seen_auth.push_back(req.get_header_value("Authorization"));
               seen_bodies.push_back(req.body);
             }
             nlohmann::json body = nlohmann::json::parse(req.body);
             // Echo-classify: the mock answers ZOMBIE for one marked pair.
             std::string user = body["messages"][1]["content"];
             nlohmann::json out;
             out["choices"] = nlohmann::json::array(
                 {{{"message",
                    {{"role", "assistant"},
                     {"content", user.find("follow me") != std::string::npos
                                     ? "ZOMBIE"
                                     : "GENERAL"}}}}});
             res.set_content(out.dump(), "application/json");
           });
  svr.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  svr.Post("/weird", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"nope\": 1}", "application/json");
  });

  int port = svr.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  std::vector<ReplyPair> pairs{
      jp("p0", "nice weather", "weather indeed", Label::General),
      jp("p1", "nice weather", "follow me", Label::Zombie),
  };
  TransportConfig cfg;
  cfg.endpoint =
      "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.model_name = "mock-judge";
  cfg.backoff_ms = 0;
  HttpTransport t(cfg);
  JudgeRunResult r = judge_pairs(pairs, {}, t, cfg);
  CHECK(r.report.accuracy == doctest::Approx(1.0));
  CHECK(r.errors.empty());

  {
    std::lock_guard<std::mutex> lock(mu);
    REQUIRE(seen_auth.size() == 2u);
    for (const std::string& a : seen_auth) CHECK(a == "Bearer " + token);
    for (const std::string& b : seen_bodies) {
      // The token travels in the header only; never in the serialized body.
      CHECK(b.find(token) == std::string::npos);
      nlohmann::json body = nlohmann::json::parse(b);
      CHECK(body["model"] == "mock-judge");
      CHECK(body["messages"][0]["role"] == "system");
      CHECK(body["messages"][1]["role"] == "user");
    }
  }

  // HTTP 500 and non-chat-completions bodies surface as transport errors.
  TransportConfig broken = cfg;
  broken.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  broken.max_retries = 0;
  HttpTransport tb(broken);
  JudgeRunResult rb = judge_pairs(pairs, {}, tb, broken);
  REQUIRE(rb.errors.size() == 2u);
  CHECK(rb.errors[0].message.find("HTTP 500") != std::string::npos);

  TransportConfig weird = cfg;
  weird.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/weird";
  weird.max_retries = 0;
  HttpTransport tw(weird);
  JudgeRunResult rw = judge_pairs(pairs, {}, tw, weird);
  REQUIRE(rw.errors.size() == 2u);
  CHECK(rw.errors[0].message.find("chat-completions") != std::string::npos);

  svr.stop();
  server_thread.join();
  unsetenv("ZOMBIEKIT_JUDGE_TOKEN");
}
