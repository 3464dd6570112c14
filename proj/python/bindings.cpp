// Python bindings for the main library operations: synthetic corpus
// generation, account analytics, text encoding, contrastive fine-tuning,
// classification, and the external-judge baseline (with Python-subclassable
// transports).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "zombiekit/analytics.hpp"
#include "zombiekit/classifier.hpp"
#include "zombiekit/contrastive.hpp"
#include "zombiekit/corpus.hpp"
#include "zombiekit/llmjudge.hpp"
#include "zombiekit/logreg.hpp"
#include "zombiekit/rng.hpp"
#include "zombiekit/textenc.hpp"
#include "zombiekit/time.hpp"

namespace py = pybind11;
using namespace zk;

namespace {

// Lets Python classes derive from Transport and implement send(); the GIL is
// taken per call, so the bounded-concurrency runner can invoke it from worker
// threads.
class PyTransport : public Transport {
 public:
  using Transport::Transport;
  std::string send(const JudgeRequest& req) override {
    PYBIND11_OVERRIDE_PURE(std::string, Transport, send, req);
  }
};

}  // namespace

PYBIND11_MODULE(zombiekit_core, m) {
  m.doc() = "Reply-pair classification and account-analytics toolkit";

  // --- enums -----------------------------------------------------------
  py::enum_<Label>(m, "Label")
      .value("General", Label::General)
      .value("Zombie", Label::Zombie)
      .value("Unlabeled", Label::Unlabeled);
  py::enum_<Optimizer>(m, "Optimizer")
      .value("Sgd", Optimizer::Sgd)
      .value("Adam", Optimizer::Adam);
  py::enum_<JudgeMode>(m, "JudgeMode")
      .value("ZeroShot", JudgeMode::ZeroShot)
      .value("FewShot", JudgeMode::FewShot);
  py::enum_<VerdictKind>(m, "VerdictKind")
      .value("General", VerdictKind::General)
      .value("Zombie", VerdictKind::Zombie)
      .value("Unparseable", VerdictKind::Unparseable);

  m.def("label_to_string", &label_to_string);
  m.def("label_from_string", &label_from_string);
  m.def("verdict_to_string", &verdict_to_string);

  // --- time ------------------------------------------------------------
  m.def("parse_iso8601", &parse_iso8601, py::arg("text"));
  m.def("format_iso8601_utc", &format_iso8601_utc, py::arg("t"));

  // --- data model ------------------------------------------------------
  py::class_<AccountRecord>(m, "AccountRecord")
      .def(py::init<>())
      .def_readwrite("account_id", &AccountRecord::account_id)
      .def_readwrite("screen_name", &AccountRecord::screen_name)
      .def_readwrite("profile_text", &AccountRecord::profile_text)
      .def_readwrite("created_at", &AccountRecord::created_at)
      .def_readwrite("snapshot_at", &AccountRecord::snapshot_at)
      .def_readwrite("total_posts", &AccountRecord::total_posts)
      .def_readwrite("followers_count", &AccountRecord::followers_count)
      .def_readwrite("following_count", &AccountRecord::following_count)
      .def_readwrite("verified", &AccountRecord::verified)
      .def_readwrite("label", &AccountRecord::label);

  py::class_<ReplyPair>(m, "ReplyPair")
      .def(py::init<>())
      .def_readwrite("pair_id", &ReplyPair::pair_id)
      .def_readwrite("parent_text", &ReplyPair::parent_text)
      .def_readwrite("reply_text", &ReplyPair::reply_text)
      .def_readwrite("parent_author_id", &ReplyPair::parent_author_id)
      .def_readwrite("reply_author_id", &ReplyPair::reply_author_id)
      .def_readwrite("reply_created_at", &ReplyPair::reply_created_at)
      .def_readwrite("label", &ReplyPair::label)
      .def_readwrite("annotator_votes", &ReplyPair::annotator_votes);

  py::class_<CleanPair>(m, "CleanPair")
      .def(py::init<>())
      .def_readwrite("pair_id", &CleanPair::pair_id)
      .def_readwrite("parent_text", &CleanPair::parent_text)
      .def_readwrite("reply_text", &CleanPair::reply_text);

  m.def("load_accounts", &load_accounts, py::arg("path"));
  m.def("load_pairs", &load_pairs, py::arg("path"));
  m.def("load_clean_pairs", &load_clean_pairs, py::arg("path"));
  m.def("save_accounts", &save_accounts, py::arg("accounts"), py::arg("path"));
  m.def("save_pairs", &save_pairs, py::arg("pairs"), py::arg("path"));
  m.def("save_clean_pairs", &save_clean_pairs, py::arg("pairs"),
        py::arg("path"));

  py::class_<PrelabelFlags>(m, "PrelabelFlags")
      .def_readonly("non_japanese_name", &PrelabelFlags::non_japanese_name)
      .def_readonly("verified", &PrelabelFlags::verified)
      .def_readonly("non_japanese_profile",
                    &PrelabelFlags::non_japanese_profile);
  m.def("heuristic_prelabel", &heuristic_prelabel, py::arg("account"));

  m.def("round_half_even", &round_half_even, py::arg("x"));
  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("stage"));

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def(py::init<>())
      .def_readwrite("train_ids", &DatasetSplit::train_ids)
      .def_readwrite("test_ids", &DatasetSplit::test_ids)
      .def_readwrite("seed", &DatasetSplit::seed)
      .def_readwrite("train_fraction", &DatasetSplit::train_fraction)
      .def_readwrite("stratified", &DatasetSplit::stratified);
  m.def("split_pairs", &split_pairs, py::arg("pairs"),
        py::arg("train_fraction"), py::arg("seed"),
        py::arg("stratified") = false);
  m.def("save_split", &save_split, py::arg("split"), py::arg("path"));
  m.def("load_split", &load_split, py::arg("path"));

  // --- synthetic corpus -------------------------------------------------
  py::class_<ClassDistParams>(m, "ClassDistParams")
      .def(py::init<>())
      .def_readwrite("ppd_log_mu", &ClassDistParams::ppd_log_mu)
      .def_readwrite("ppd_log_sigma", &ClassDistParams::ppd_log_sigma)
      .def_readwrite("age_weights", &ClassDistParams::age_weights)
      .def_readwrite("ratio_log_mu", &ClassDistParams::ratio_log_mu)
      .def_readwrite("ratio_log_sigma", &ClassDistParams::ratio_log_sigma);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("n_general_accounts", &SynthConfig::n_general_accounts)
      .def_readwrite("n_zombie_accounts", &SynthConfig::n_zombie_accounts)
      .def_readwrite("n_general_pairs", &SynthConfig::n_general_pairs)
      .def_readwrite("n_zombie_pairs", &SynthConfig::n_zombie_pairs)
      .def_readwrite("n_clean_pairs", &SynthConfig::n_clean_pairs)
      .def_readwrite("coherence_overlap", &SynthConfig::coherence_overlap)
      .def_readwrite("zombie_duplicate_rate",
                     &SynthConfig::zombie_duplicate_rate)
      .def_readwrite("zombie_emoji_rate", &SynthConfig::zombie_emoji_rate)
      .def_readwrite("zombie_vocab_overlap",
                     &SynthConfig::zombie_vocab_overlap)
      .def_readwrite("general", &SynthConfig::general)
      .def_readwrite("zombie", &SynthConfig::zombie);

  py::class_<SynthCorpus>(m, "SynthCorpus")
      .def_readonly("accounts", &SynthCorpus::accounts)
      .def_readonly("pairs", &SynthCorpus::pairs)
      .def_readonly("clean_pairs", &SynthCorpus::clean_pairs);

  m.def("validate_synth_config", &validate_synth_config, py::arg("config"));
  m.def("synth_generate", &synth_generate, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("synth_topic_vocab", &synth_topic_vocab);
  m.def("synth_filler_vocab", &synth_filler_vocab);
  m.def("synth_zombie_vocab", &synth_zombie_vocab);
  m.def("synth_emoji_vocab", &synth_emoji_vocab);

  // --- analytics ---------------------------------------------------------
  py::class_<TTestResult>(m, "TTestResult")
      .def_readonly("t_statistic", &TTestResult::t_statistic)
      .def_readonly("degrees_of_freedom", &TTestResult::degrees_of_freedom)
      .def_readonly("p_value", &TTestResult::p_value);
  m.def("welch_t_test", &welch_t_test, py::arg("x"), py::arg("y"));

  py::class_<FleissKappa>(m, "FleissKappa")
      .def_readonly("kappa", &FleissKappa::kappa)
      .def_readonly("defined", &FleissKappa::defined);
  m.def("fleiss_kappa", &fleiss_kappa, py::arg("votes"),
        py::arg("raters_per_item"));

  py::class_<HeatmapZ>(m, "HeatmapZ")
      .def_readonly("cells", &HeatmapZ::cells)
      .def_readonly("counts", &HeatmapZ::counts)
      .def_readonly("timezone_offset_minutes",
                    &HeatmapZ::timezone_offset_minutes);
  m.def("activity_heatmap", &activity_heatmap, py::arg("timestamps"),
        py::arg("tz_offset_minutes"));

  py::class_<ReportOptions>(m, "ReportOptions")
      .def(py::init<>())
      .def_readwrite("tz_offset_minutes", &ReportOptions::tz_offset_minutes)
      .def_readwrite("n_bins", &ReportOptions::n_bins)
      .def_readwrite("top_n_bigrams", &ReportOptions::top_n_bigrams)
      .def_readwrite("min_support", &ReportOptions::min_support)
      .def_readwrite("l2", &ReportOptions::l2);

  m.def(
      "summary_report_json",
      [](const std::vector<AccountRecord>& accounts,
         const std::vector<ReplyPair>& pairs, const ReportOptions& options) {
        py::gil_scoped_release release;
        return report_to_json(summary_report(accounts, pairs, options))
            .dump(2);
      },
      py::arg("accounts"), py::arg("pairs"),
      py::arg("options") = ReportOptions{},
      "Full account/pair summary as a JSON string.");
  m.def(
      "write_report_files",
      [](const std::vector<AccountRecord>& accounts,
         const std::vector<ReplyPair>& pairs, const std::string& out_dir,
         const ReportOptions& options) {
        py::gil_scoped_release release;
        write_report_files(summary_report(accounts, pairs, options), out_dir);
      },
      py::arg("accounts"), py::arg("pairs"), py::arg("out_dir"),
      py::arg("options") = ReportOptions{},
      "Write report.json plus the CSV tables to a directory.");

  // --- text encoding ------------------------------------------------------
  py::class_<TokenizerConfig>(m, "TokenizerConfig")
      .def(py::init<>())
      .def_readwrite("cjk_ngram", &TokenizerConfig::cjk_ngram)
      .def_readwrite("lowercase", &TokenizerConfig::lowercase);
  m.def("tokenize", &tokenize, py::arg("text"),
        py::arg("cfg") = TokenizerConfig{});
  m.def("is_japanese_script",
        [](char32_t cp) { return is_japanese_script(cp); }, py::arg("cp"));

  py::class_<EncoderModel>(m, "EncoderModel")
      .def_readonly("hash_seed", &EncoderModel::hash_seed)
      .def_readonly("hash_dim", &EncoderModel::hash_dim)
      .def_readonly("embed_dim", &EncoderModel::embed_dim)
      .def_readonly("normalize_output", &EncoderModel::normalize_output);
  m.def("make_encoder", &make_encoder, py::arg("hash_dim"),
        py::arg("embed_dim"), py::arg("hash_seed"), py::arg("init_seed"),
        py::arg("normalize_output") = true,
        py::arg("tok") = TokenizerConfig{});
  m.def("encode", &encode, py::arg("model"), py::arg("text"));
  m.def("encode_pooled", &encode_pooled, py::arg("model"), py::arg("text"));
  m.def("token_bucket", &token_bucket, py::arg("model"), py::arg("token"));
  m.def(
      "cosine",
      [](const std::vector<double>& u, const std::vector<double>& v) {
        bool degenerate = false;
        const double c = cosine(u, v, &degenerate);
        return py::make_tuple(c, degenerate);
      },
      py::arg("u"), py::arg("v"),
      "Returns (similarity, degenerate); degenerate is True when either "
      "vector has zero norm.");
  m.def("save_encoder", &save_encoder, py::arg("model"), py::arg("path"));
  m.def("load_encoder", &load_encoder, py::arg("path"));

  // --- contrastive fine-tuning ---------------------------------------------
  py::class_<MnrConfig>(m, "MnrConfig")
      .def(py::init<>())
      .def_readwrite("batch_size", &MnrConfig::batch_size)
      .def_readwrite("epochs", &MnrConfig::epochs)
      .def_readwrite("learning_rate", &MnrConfig::learning_rate)
      .def_readwrite("scale", &MnrConfig::scale)
      .def_readwrite("seed", &MnrConfig::seed)
      .def_readwrite("optimizer", &MnrConfig::optimizer)
      .def_readwrite("adam_beta1", &MnrConfig::adam_beta1)
      .def_readwrite("adam_beta2", &MnrConfig::adam_beta2)
      .def_readwrite("adam_eps", &MnrConfig::adam_eps);

  py::class_<MnrLoss>(m, "MnrLoss")
      .def_readonly("value", &MnrLoss::value)
      .def_readonly("zero_norm_rows", &MnrLoss::zero_norm_rows);
  m.def("mnr_loss", &mnr_loss, py::arg("anchors"), py::arg("positives"),
        py::arg("scale"));

  py::class_<TrainLog>(m, "TrainLog")
      .def_readonly("epoch_mean_loss", &TrainLog::epoch_mean_loss)
      .def_readonly("epoch_seconds", &TrainLog::epoch_seconds)
      .def_readonly("final_margin", &TrainLog::final_margin)
      .def_readonly("final_margin_present", &TrainLog::final_margin_present);

  m.def("train_encoder", &train_encoder, py::arg("pairs"), py::arg("model"),
        py::arg("config"), py::call_guard<py::gil_scoped_release>(),
        "Returns (fine_tuned_model, train_log).");
  m.def("similarity_margin", &similarity_margin, py::arg("model"),
        py::arg("eval_pairs"), py::call_guard<py::gil_scoped_release>());

  // --- classifier -----------------------------------------------------------
  m.def("build_features", &build_features, py::arg("u"), py::arg("v"));

  py::class_<MlpHyper>(m, "MlpHyper")
      .def(py::init<>())
      .def_readwrite("epochs", &MlpHyper::epochs)
      .def_readwrite("batch", &MlpHyper::batch)
      .def_readwrite("learning_rate", &MlpHyper::learning_rate)
      .def_readwrite("seed", &MlpHyper::seed)
      .def_readwrite("hidden", &MlpHyper::hidden);

  py::class_<MlpModel>(m, "MlpModel")
      .def_readonly("input_dim", &MlpModel::input_dim)
      .def_readonly("hidden_dim", &MlpModel::hidden_dim)
      .def_readonly("seed", &MlpModel::seed)
      .def_readonly("w1", &MlpModel::w1)
      .def_readonly("b1", &MlpModel::b1)
      .def_readonly("w2", &MlpModel::w2)
      .def_readonly("b2", &MlpModel::b2);

  m.def("mlp_init", &mlp_init, py::arg("input_dim"), py::arg("hidden_dim"),
        py::arg("seed"));
  m.def("mlp_forward", &mlp_forward, py::arg("model"), py::arg("features"));
  m.def("mlp_train_features", &mlp_train_features, py::arg("X"), py::arg("y"),
        py::arg("hyper"), py::call_guard<py::gil_scoped_release>());
  m.def("mlp_train", &mlp_train, py::arg("train_pairs"), py::arg("encoder"),
        py::arg("hyper"), py::call_guard<py::gil_scoped_release>());
  m.def("predict", &predict, py::arg("model"), py::arg("encoder"),
        py::arg("parent_text"), py::arg("reply_text"),
        "Returns (label, p_zombie).");
  m.def("save_mlp", &save_mlp, py::arg("model"), py::arg("path"));
  m.def("load_mlp", &load_mlp, py::arg("path"));

  py::class_<Metric>(m, "Metric")
      .def_readonly("value", &Metric::value)
      .def_readonly("defined", &Metric::defined);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("n_test", &EvalReport::n_test)
      .def_readonly("correct_general", &EvalReport::correct_general)
      .def_readonly("general_as_zombie", &EvalReport::general_as_zombie)
      .def_readonly("zombie_as_general", &EvalReport::zombie_as_general)
      .def_readonly("correct_zombie", &EvalReport::correct_zombie)
      .def_readonly("precision_general", &EvalReport::precision_general)
      .def_readonly("recall_general", &EvalReport::recall_general)
      .def_readonly("precision_zombie", &EvalReport::precision_zombie)
      .def_readonly("recall_zombie", &EvalReport::recall_zombie)
      .def_readonly("accuracy", &EvalReport::accuracy);
  m.def("evaluate", &evaluate, py::arg("preds"), py::arg("gold"));
  m.def("eval_report_json",
        [](const EvalReport& r) { return eval_report_to_json(r).dump(2); },
        py::arg("report"));

  py::class_<LogregOptions>(m, "LogregOptions")
      .def(py::init<>())
      .def_readwrite("l2", &LogregOptions::l2)
      .def_readwrite("tol", &LogregOptions::tol)
      .def_readwrite("max_iters", &LogregOptions::max_iters);

  py::class_<TfidfLogreg>(m, "TfidfLogreg");
  m.def("train_tfidf_logreg", &train_tfidf_logreg, py::arg("train_pairs"),
        py::arg("solver") = LogregOptions{},
        py::arg("tok") = TokenizerConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("predict_tfidf", &predict_tfidf, py::arg("model"),
        py::arg("parent_text"), py::arg("reply_text"),
        "Returns (label, p_zombie).");

  py::class_<ErrorSlice>(m, "ErrorSlice")
      .def_readonly("pair_ids", &ErrorSlice::pair_ids)
      .def_readonly("median_reply_tokens", &ErrorSlice::median_reply_tokens)
      .def_readonly("median_defined", &ErrorSlice::median_defined)
      .def_readonly("n_exact_duplicates", &ErrorSlice::n_exact_duplicates);
  py::class_<ErrorSliceReport>(m, "ErrorSliceReport")
      .def_readonly("false_positives", &ErrorSliceReport::false_positives)
      .def_readonly("false_negatives", &ErrorSliceReport::false_negatives);
  m.def("analyze_errors", &analyze_errors, py::arg("preds"), py::arg("gold"),
        py::arg("pairs"));
  m.def("error_slices_json",
        [](const ErrorSliceReport& r) { return error_slices_to_json(r).dump(2); },
        py::arg("report"));

  // --- external judge --------------------------------------------------------
  py::class_<JudgeExemplar>(m, "JudgeExemplar")
      .def_readonly("parent_text", &JudgeExemplar::parent_text)
      .def_readonly("reply_text", &JudgeExemplar::reply_text)
      .def_readonly("label", &JudgeExemplar::label);

  py::class_<JudgePrompt>(m, "JudgePrompt")
      .def_readonly("mode", &JudgePrompt::mode)
      .def_readonly("system_instructions", &JudgePrompt::system_instructions)
      .def_readonly("exemplars", &JudgePrompt::exemplars)
      .def_readonly("query_parent", &JudgePrompt::query_parent)
      .def_readonly("query_reply", &JudgePrompt::query_reply);
  m.def("build_prompt", &build_prompt, py::arg("mode"), py::arg("train_pairs"),
        py::arg("query"), py::arg("seed") = 0);
  m.def("render_prompt_text", &render_prompt_text, py::arg("prompt"));

  py::class_<JudgeVerdict>(m, "JudgeVerdict")
      .def_readonly("kind", &JudgeVerdict::kind)
      .def_readonly("raw_response", &JudgeVerdict::raw_response);
  m.def("parse_verdict", &parse_verdict, py::arg("response_text"));

  py::class_<TransportConfig>(m, "TransportConfig")
      .def(py::init<>())
      .def_readwrite("endpoint", &TransportConfig::endpoint)
      .def_readwrite("model_name", &TransportConfig::model_name)
      .def_readwrite("timeout_seconds", &TransportConfig::timeout_seconds)
      .def_readwrite("max_retries", &TransportConfig::max_retries)
      .def_readwrite("backoff_ms", &TransportConfig::backoff_ms)
      .def_readwrite("credential_env", &TransportConfig::credential_env);

  py::class_<JudgeRequest>(m, "JudgeRequest")
      .def_readonly("pair_id", &JudgeRequest::pair_id)
      .def_readonly("parent_text", &JudgeRequest::parent_text)
      .def_readonly("reply_text", &JudgeRequest::reply_text)
      .def_readonly("system_text", &JudgeRequest::system_text)
      .def_readonly("user_text", &JudgeRequest::user_text);

  py::class_<Transport, PyTransport>(m, "Transport")
      .def(py::init<>())
      .def("send", &Transport::send, py::arg("request"));
  py::class_<HttpTransport, Transport>(m, "HttpTransport")
      .def(py::init<TransportConfig>(), py::arg("config"));
  py::class_<OracleTransport, Transport>(m, "OracleTransport")
      .def(py::init<const std::vector<ReplyPair>&>(), py::arg("pairs"));
  py::class_<FixedTextTransport, Transport>(m, "FixedTextTransport")
      .def(py::init<std::string>(), py::arg("text"));
  py::class_<OverlapHeuristicTransport, Transport>(m,
                                                   "OverlapHeuristicTransport")
      .def(py::init<TokenizerConfig>(), py::arg("tok") = TokenizerConfig{});

  py::class_<AuditEntry>(m, "AuditEntry")
      .def_readonly("pair_id", &AuditEntry::pair_id)
      .def_readonly("prompt_sha256", &AuditEntry::prompt_sha256)
      .def_readonly("response_text", &AuditEntry::response_text)
      .def_readonly("verdict", &AuditEntry::verdict)
      .def_readonly("latency_ms", &AuditEntry::latency_ms);

  py::class_<JudgeOptions>(m, "JudgeOptions")
      .def(py::init<>())
      .def_readwrite("mode", &JudgeOptions::mode)
      .def_readwrite("retry_unparseable", &JudgeOptions::retry_unparseable)
      .def_readwrite("max_in_flight", &JudgeOptions::max_in_flight);

  py::class_<JudgeError>(m, "JudgeError")
      .def_readonly("pair_id", &JudgeError::pair_id)
      .def_readonly("message", &JudgeError::message);

  py::class_<JudgeRunResult>(m, "JudgeRunResult")
      .def_readonly("verdicts", &JudgeRunResult::verdicts)
      .def_readonly("report", &JudgeRunResult::report)
      .def_readonly("n_unparseable", &JudgeRunResult::n_unparseable)
      .def_readonly("errors", &JudgeRunResult::errors)
      .def_readonly("audit", &JudgeRunResult::audit);

  // The GIL is released for the run so transports implemented in Python can
  // re-acquire it (including from worker threads under bounded concurrency).
  m.def("judge_pairs", &judge_pairs, py::arg("pairs"), py::arg("train_pairs"),
        py::arg("transport"), py::arg("config"),
        py::arg("options") = JudgeOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("save_audit", &save_audit, py::arg("entries"), py::arg("path"));
  m.def("sha256_hex", [](const std::string& s) { return sha256_hex(s); },
        py::arg("data"));
}
