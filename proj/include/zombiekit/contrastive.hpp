#pragma once

// Multiple-negatives ranking fine-tuning of the hashed encoder: each batch
// pairs anchor i with positive i; the other in-batch positives act as
// negatives.

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "zombiekit/corpus.hpp"
#include "zombiekit/textenc.hpp"

namespace zk {

enum class Optimizer { Sgd, Adam };

struct MnrConfig {
  int batch_size = 16;
  int epochs = 8;
  // Default tuned for the small randomly initialized encoder; 1e-5 is the
  // documented preset for fine-tuning a large pretrained model.
  double learning_rate = 1e-3;
  double scale = 20.0;
  std::uint64_t seed = 42;
  Optimizer optimizer = Optimizer::Sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct MnrLoss {
  double value = 0.0;
  // Rows whose embedding had zero norm (their cosines were taken as 0).
  int zero_norm_rows = 0;
};

// S[i][j] = scale * cosine(anchors[i], positives[j]);
// loss = (1/B) * sum_i [-S[i][i] + logsumexp_j S[i][j]] (max-shifted).
// Rows need not be normalized. Throws on empty batch or ragged dimensions.
MnrLoss mnr_loss(const std::vector<std::vector<double>>& anchors,
                 const std::vector<std::vector<double>>& positives,
                 double scale);

struct MnrBatchGradients {
  double loss = 0.0;
  int zero_norm_rows = 0;
  // Exact analytic gradient of the batch loss w.r.t. the touched embedding
  // table rows; untouched rows are absent (zero gradient).
  std::unordered_map<std::uint32_t, std::vector<double>> row_grads;
};

// Gradient of mnr_loss over the batch texts through cosine, mean pooling and
// hashing. A text with zero pooled norm contributes zero gradient for its
// rows (documented subgradient at the non-differentiable point).
MnrBatchGradients mnr_gradients(const std::vector<std::string>& anchor_texts,
                                const std::vector<std::string>& positive_texts,
                                const EncoderModel& m, double scale);

struct TrainLog {
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_seconds;  // wall time; excluded from byte-compare
  // Filled by callers that hold labeled pairs; NaN when not measured.
  double final_margin = 0.0;
  bool final_margin_present = false;
};

// Seeded shuffle each epoch, fixed batches of batch_size (partial final batch
// dropped), per-batch SGD (or lazy Adam) on the touched rows. Deterministic
// per (pairs, model, cfg). Throws when pairs.size() < batch_size or the
// config is out of range.
std::pair<EncoderModel, TrainLog> train_encoder(
    const std::vector<CleanPair>& pairs, const EncoderModel& model,
    const MnrConfig& cfg);

// Mean cosine(encode(parent), encode(reply)) over General pairs minus the
// same mean over Zombie pairs. Throws when either class is absent.
double similarity_margin(const EncoderModel& model,
                         const std::vector<ReplyPair>& eval_pairs);

void save_train_log(const TrainLog& log, const std::string& path);

}  // namespace zk
