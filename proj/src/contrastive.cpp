#include "zombiekit/contrastive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zombiekit/rng.hpp"

namespace zk {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void validate_mnr_config(const MnrConfig& cfg) {
  if (cfg.batch_size < 2)
    throw std::invalid_argument("mnr config: batch_size must be >= 2");
  if (cfg.epochs < 1)
    throw std::invalid_argument("mnr config: epochs must be >= 1");
  if (cfg.learning_rate < 0.0)
    throw std::invalid_argument("mnr config: learning_rate must be >= 0");
  if (cfg.scale <= 0.0)
    throw std::invalid_argument("mnr config: scale must be > 0");
}

// Loss and softmax rows for a similarity matrix; shared by loss and
// gradients so both see identical arithmetic.
struct MnrForward {
  double loss = 0.0;
  int zero_norm_rows = 0;
  std::vector<std::vector<double>> S;  // scaled cosine, B x B
  std::vector<std::vector<double>> P;  // per-row softmax of S
};

MnrForward mnr_forward(const std::vector<std::vector<double>>& anchors,
                       const std::vector<std::vector<double>>& positives,
                       double scale) {
  size_t B = anchors.size();
  if (B == 0) throw std::invalid_argument("mnr_loss: empty batch");
  if (positives.size() != B)
    throw std::invalid_argument("mnr_loss: anchor/positive count mismatch");
  size_t d = anchors[0].size();
  for (const auto& r : anchors)
    if (r.size() != d) throw std::invalid_argument("mnr_loss: ragged anchors");
  for (const auto& r : positives)
    if (r.size() != d)
      throw std::invalid_argument("mnr_loss: ragged positives");

  MnrForward f;
  std::vector<double> na(B), np(B);
  for (size_t i = 0; i < B; ++i) {
    na[i] = norm(anchors[i]);
    np[i] = norm(positives[i]);
    if (na[i] == 0.0) ++f.zero_norm_rows;
    if (np[i] == 0.0) ++f.zero_norm_rows;
  }
  f.S.assign(B, std::vector<double>(B, 0.0));
  for (size_t i = 0; i < B; ++i)
    for (size_t j = 0; j < B; ++j)
      if (na[i] > 0.0 && np[j] > 0.0)
        f.S[i][j] = scale * dot(anchors[i], positives[j]) / (na[i] * np[j]);

  f.P.assign(B, std::vector<double>(B, 0.0));
  for (size_t i = 0; i < B; ++i) {
    double mx = *std::max_element(f.S[i].begin(), f.S[i].end());
    double lse = 0.0;
    for (size_t j = 0; j < B; ++j) lse += std::exp(f.S[i][j] - mx);
    for (size_t j = 0; j < B; ++j) f.P[i][j] = std::exp(f.S[i][j] - mx) / lse;
    f.loss += -f.S[i][i] + mx + std::log(lse);
  }
  f.loss /= double(B);
  return f;
}

}  // namespace

MnrLoss mnr_loss(const std::vector<std::vector<double>>& anchors,
                 const std::vector<std::vector<double>>& positives,
                 double scale) {
  MnrForward f = mnr_forward(anchors, positives, scale);
  return {f.loss, f.zero_norm_rows};
}

MnrBatchGradients mnr_gradients(const std::vector<std::string>& anchor_texts,
                                const std::vector<std::string>& positive_texts,
                                const EncoderModel& m, double scale) {
  size_t B = anchor_texts.size();
  if (positive_texts.size() != B)
    throw std::invalid_argument("mnr_gradients: batch size mismatch");

  // Pooled (unnormalized) embeddings plus per-text bucket multiplicities for
  // the pooling backprop.
  std::vector<std::vector<double>> u(B), v(B);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> ua(B), va(B);
  auto prepare = [&](const std::string& text, std::vector<double>& vec,
                     std::vector<std::pair<std::uint32_t, double>>& weights) {
    auto buckets = text_buckets(m, text);
    vec.assign(m.embed_dim, 0.0);
    if (buckets.empty()) return;
    std::unordered_map<std::uint32_t, double> mult;
    for (auto b : buckets) mult[b] += 1.0;
    double inv = 1.0 / double(buckets.size());
    for (auto& [bucket, count] : mult) {
      const double* r = m.row(bucket);
      for (std::uint32_t k = 0; k < m.embed_dim; ++k)
        vec[k] += count * inv * r[k];
      weights.emplace_back(bucket, count * inv);
    }
  };
  for (size_t i = 0; i < B; ++i) {
    prepare(anchor_texts[i], u[i], ua[i]);
    prepare(positive_texts[i], v[i], va[i]);
  }

  MnrForward f = mnr_forward(u, v, scale);
  MnrBatchGradients g;
  g.loss = f.loss;
  g.zero_norm_rows = f.zero_norm_rows;

  // dL/dS[i][j] = (P[i][j] - delta_ij)/B; chain through the cosine. A zero
  // norm freezes that text's contribution (cos and gradient both 0).
  std::vector<double> nu(B), nv(B);
  for (size_t i = 0; i < B; ++i) {
    nu[i] = norm(u[i]);
    nv[i] = norm(v[i]);
  }
  std::vector<std::vector<double>> gu(B, std::vector<double>(m.embed_dim, 0.0));
  std::vector<std::vector<double>> gv(B, std::vector<double>(m.embed_dim, 0.0));
  for (size_t i = 0; i < B; ++i) {
    for (size_t j = 0; j < B; ++j) {
      double dS = (f.P[i][j] - (i == j ? 1.0 : 0.0)) / double(B);
      if (dS == 0.0 || nu[i] == 0.0 || nv[j] == 0.0) continue;
      double cos_ij = f.S[i][j] / scale;
      double coeff = dS * scale;
      double inv_uv = 1.0 / (nu[i] * nv[j]);
      double inv_uu = 1.0 / (nu[i] * nu[i]);
      double inv_vv = 1.0 / (nv[j] * nv[j]);
      for (std::uint32_t k = 0; k < m.embed_dim; ++k) {
        gu[i][k] += coeff * (v[j][k] * inv_uv - cos_ij * u[i][k] * inv_uu);
        gv[j][k] += coeff * (u[i][k] * inv_uv - cos_ij * v[j][k] * inv_vv);
      }
    }
  }

  auto scatter = [&](const std::vector<std::pair<std::uint32_t, double>>& ws,
                     const std::vector<double>& grad) {
    for (const auto& [bucket, w] : ws) {
      auto& row = g.row_grads[bucket];
      if (row.empty()) row.assign(m.embed_dim, 0.0);
      for (std::uint32_t k = 0; k < m.embed_dim; ++k) row[k] += w * grad[k];
    }
  };
  for (size_t i = 0; i < B; ++i) {
    scatter(ua[i], gu[i]);
    scatter(va[i], gv[i]);
  }
  return g;
}

std::pair<EncoderModel, TrainLog> train_encoder(
    const std::vector<CleanPair>& pairs, const EncoderModel& model,
    const MnrConfig& cfg) {
  validate_mnr_config(cfg);
  if (pairs.size() < size_t(cfg.batch_size))
    throw std::invalid_argument("train_encoder: fewer pairs than batch_size");

  EncoderModel out = model;
  TrainLog log;
  Rng rng = make_rng(derive_seed(cfg.seed, "train_encoder.shuffle"));
  std::vector<size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), size_t(0));

  // Lazy Adam state, allocated on demand: first/second moments per table
  // entry, updated only for rows the batch touches.
  std::vector<double> adam_m, adam_v;
  std::int64_t adam_t = 0;
  if (cfg.optimizer == Optimizer::Adam) {
    adam_m.assign(out.table.size(), 0.0);
    adam_v.assign(out.table.size(), 0.0);
  }

  size_t n_batches = pairs.size() / size_t(cfg.batch_size);
  std::vector<std::string> anchors(size_t(cfg.batch_size)),
      positives(size_t(cfg.batch_size));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (size_t b = 0; b < n_batches; ++b) {
      for (int k = 0; k < cfg.batch_size; ++k) {
        const CleanPair& p = pairs[order[b * size_t(cfg.batch_size) + size_t(k)]];
        anchors[size_t(k)] = p.parent_text;
        positives[size_t(k)] = p.reply_text;
      }
      MnrBatchGradients g =
          mnr_gradients(anchors, positives, out, cfg.scale);
      loss_sum += g.loss;
      if (cfg.learning_rate == 0.0) continue;
      if (cfg.optimizer == Optimizer::Sgd) {
        for (const auto& [bucket, grad] : g.row_grads) {
          double* row = out.row(bucket);
          for (std::uint32_t k = 0; k < out.embed_dim; ++k)
            row[k] -= cfg.learning_rate * grad[k];
        }
      } else {
        ++adam_t;
        double bc1 = 1.0 - std::pow(cfg.adam_beta1, double(adam_t));
        double bc2 = 1.0 - std::pow(cfg.adam_beta2, double(adam_t));
        for (const auto& [bucket, grad] : g.row_grads) {
          size_t base = size_t(bucket) * out.embed_dim;
          double* row = out.row(bucket);
          for (std::uint32_t k = 0; k < out.embed_dim; ++k) {
            double& mk = adam_m[base + k];
            double& vk = adam_v[base + k];
            mk = cfg.adam_beta1 * mk + (1.0 - cfg.adam_beta1) * grad[k];
            vk = cfg.adam_beta2 * vk + (1.0 - cfg.adam_beta2) * grad[k] * grad[k];
            row[k] -= cfg.learning_rate * (mk / bc1) /
                      (std::sqrt(vk / bc2) + cfg.adam_eps);
          }
        }
      }
    }
    auto t1 = std::chrono::steady_clock::now();
    log.epoch_mean_loss.push_back(
        n_batches > 0 ? loss_sum / double(n_batches) : 0.0);
    log.epoch_seconds.push_back(
        std::chrono::duration<double>(t1 - t0).count());
  }
  return {std::move(out), std::move(log)};
}

double similarity_margin(const EncoderModel& model,
                         const std::vector<ReplyPair>& eval_pairs) {
  double sum_g = 0.0, sum_z = 0.0;
  std::int64_t n_g = 0, n_z = 0;
  for (const auto& p : eval_pairs) {
    if (p.label == Label::Unlabeled) continue;
    double c = cosine(encode(model, p.parent_text), encode(model, p.reply_text));
    if (p.label == Label::General) {
      sum_g += c;
      ++n_g;
    } else {
      sum_z += c;
      ++n_z;
    }
  }
  if (n_g == 0 || n_z == 0)
    throw std::invalid_argument(
        "similarity_margin: need labeled pairs of both classes");
  return sum_g / double(n_g) - sum_z / double(n_z);
}

void save_train_log(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (size_t e = 0; e < log.epoch_mean_loss.size(); ++e) {
    nlohmann::json j{{"epoch", e + 1},
                     {"mean_loss", log.epoch_mean_loss[e]},
                     {"seconds", log.epoch_seconds[e]}};
    out << j.dump() << '\n';
  }
  if (log.final_margin_present) {
    nlohmann::json j{{"final_margin", log.final_margin}};
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace zk
