#pragma once

// Detection head: interaction features, the MLP classifier, the TF-IDF
// logistic-regression baseline, evaluation metrics, and error-slice analysis.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "zombiekit/corpus.hpp"
#include "zombiekit/logreg.hpp"
#include "zombiekit/textenc.hpp"

namespace zk {

// concat(u, v, u - v, u ⊙ v); length 4d. Block identities are re-checked at
// construction. Throws on length mismatch.
std::vector<double> build_features(const std::vector<double>& u,
                                   const std::vector<double>& v);

struct MlpModel {
  std::uint32_t format_version = 1;
  std::uint32_t input_dim = 0;
  std::uint32_t hidden_dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // 2 x hidden_dim, row-major
  std::vector<double> b2;  // 2
};

// He-uniform weights (U(-sqrt(6/fan_in), +sqrt(6/fan_in))), zero biases.
MlpModel mlp_init(std::uint32_t input_dim, std::uint32_t hidden_dim,
                  std::uint64_t seed);

// affine -> rectifier -> affine -> max-shifted softmax;
// returns (p_general, p_zombie). Throws on feature length mismatch.
std::array<double, 2> mlp_forward(const MlpModel& m,
                                  const std::vector<double>& f);

struct MlpHyper {
  int epochs = 30;
  int batch = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 42;
  int hidden = 128;
};

// Full-batch mean cross-entropy loss and its exact analytic gradients;
// exposed for the finite-difference oracle and used by the trainer.
struct MlpGradients {
  double loss = 0.0;
  std::vector<double> w1, b1, w2, b2;  // same shapes as the model
};

MlpGradients mlp_gradients(const MlpModel& m,
                           const std::vector<std::vector<double>>& X,
                           const std::vector<int>& y);

// Mini-batch SGD on softmax cross-entropy; y: 0 = General, 1 = Zombie.
// Seeded shuffle per epoch; the final partial batch is kept. Throws when a
// single class is present or shapes disagree.
MlpModel mlp_train_features(const std::vector<std::vector<double>>& X,
                            const std::vector<int>& y, const MlpHyper& hyper);

// Contract wrapper: features from encode(parent)/encode(reply) per pair.
MlpModel mlp_train(const std::vector<ReplyPair>& train_pairs,
                   const EncoderModel& encoder, const MlpHyper& hyper);

// label = Zombie iff p_zombie > 0.5; exact tie -> General.
std::pair<Label, double> predict(const MlpModel& m, const EncoderModel& encoder,
                                 const std::string& parent_text,
                                 const std::string& reply_text);

// Precision/recall values are meaningless when their denominator is zero;
// `defined` distinguishes that from a true 0.
struct Metric {
  double value = 0.0;
  bool defined = false;
};

struct EvalReport {
  std::int64_t n_test = 0;
  // Confusion counts, gold x predicted.
  std::int64_t correct_general = 0;
  std::int64_t general_as_zombie = 0;
  std::int64_t zombie_as_general = 0;
  std::int64_t correct_zombie = 0;
  Metric precision_general, recall_general;
  Metric precision_zombie, recall_zombie;
  double accuracy = 0.0;
};

// Labels must be General/Zombie only; throws on Unlabeled or length mismatch.
EvalReport evaluate(const std::vector<Label>& preds,
                    const std::vector<Label>& gold);

nlohmann::json eval_report_to_json(const EvalReport& r);

// ---------------------------------------------------------------------------
// TF-IDF logistic-regression baseline

struct TfidfLogreg {
  TfidfModel tfidf;
  LogregModel logreg;
};

// Document = parent_text + " " + reply_text; vocabulary from the given pairs
// only. Throws when a single class is present.
TfidfLogreg train_tfidf_logreg(const std::vector<ReplyPair>& train_pairs,
                               const LogregOptions& solver = {},
                               const TokenizerConfig& tok = {});

std::pair<Label, double> predict_tfidf(const TfidfLogreg& m,
                                       const std::string& parent_text,
                                       const std::string& reply_text);

// ---------------------------------------------------------------------------
// Error slices

struct ErrorSlice {
  std::vector<std::string> pair_ids;
  double median_reply_tokens = 0.0;
  bool median_defined = false;
  // Replies equal to their parent after whitespace normalization.
  std::int64_t n_exact_duplicates = 0;
};

struct ErrorSliceReport {
  ErrorSlice false_positives;  // gold General, predicted Zombie
  ErrorSlice false_negatives;  // gold Zombie, predicted General
};

ErrorSliceReport analyze_errors(const std::vector<Label>& preds,
                                const std::vector<Label>& gold,
                                const std::vector<ReplyPair>& pairs);

nlohmann::json error_slices_to_json(const ErrorSliceReport& r);

// Little-endian binary checkpoint, magic "ZKML"; wrong magic/version fails
// loudly.
void save_mlp(const MlpModel& m, const std::string& path);
MlpModel load_mlp(const std::string& path);

}  // namespace zk
