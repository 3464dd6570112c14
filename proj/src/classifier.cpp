#include "zombiekit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "zombiekit/rng.hpp"

namespace zk {

std::vector<double> build_features(const std::vector<double>& u,
                                   const std::vector<double>& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("build_features: embedding lengths differ (" +
                                std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
  const std::size_t d = u.size();
  std::vector<double> f(4 * d);
  for (std::size_t i = 0; i < d; ++i) {
    f[i] = u[i];
    f[d + i] = v[i];
    f[2 * d + i] = u[i] - v[i];
    f[3 * d + i] = u[i] * v[i];
  }
  // Block identities hold exactly by construction; verify rather than assume.
  for (std::size_t i = 0; i < d; ++i) {
    if (f[2 * d + i] != f[i] - f[d + i] || f[3 * d + i] != f[i] * f[d + i])
      throw std::logic_error("build_features: block identity violated");
  }
  return f;
}

MlpModel mlp_init(std::uint32_t input_dim, std::uint32_t hidden_dim,
                  std::uint64_t seed) {
  if (input_dim == 0 || hidden_dim == 0)
    throw std::invalid_argument("mlp_init: dimensions must be positive");
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden_dim = hidden_dim;
  m.seed = seed;
  Rng rng = make_rng(derive_seed(seed, "mlp.init"));
  auto he_uniform = [&rng](std::vector<double>& w, std::size_t n,
                           std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / double(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    w.resize(n);
    for (double& x : w) x = dist(rng);
  };
  he_uniform(m.w1, std::size_t(hidden_dim) * input_dim, input_dim);
  m.b1.assign(hidden_dim, 0.0);
  he_uniform(m.w2, std::size_t(2) * hidden_dim, hidden_dim);
  m.b2.assign(2, 0.0);
  return m;
}

namespace {

struct Forward {
  std::vector<double> z1;        // pre-activation, hidden_dim
  std::vector<double> h;         // rectified, hidden_dim
  std::array<double, 2> logits;  // z2
  std::array<double, 2> probs;
};

Forward forward_pass(const MlpModel& m, const std::vector<double>& f) {
  if (f.size() != m.input_dim)
    throw std::invalid_argument("mlp_forward: feature length " +
                                std::to_string(f.size()) + " != input_dim " +
                                std::to_string(m.input_dim));
  Forward fw;
  fw.z1.resize(m.hidden_dim);
  fw.h.resize(m.hidden_dim);
  for (std::uint32_t j = 0; j < m.hidden_dim; ++j) {
    const double* row = &m.w1[std::size_t(j) * m.input_dim];
    double z = m.b1[j];
    for (std::uint32_t i = 0; i < m.input_dim; ++i) z += row[i] * f[i];
    fw.z1[j] = z;
    fw.h[j] = z > 0.0 ? z : 0.0;
  }
  for (int k = 0; k < 2; ++k) {
    const double* row = &m.w2[std::size_t(k) * m.hidden_dim];
    double z = m.b2[std::size_t(k)];
    for (std::uint32_t j = 0; j < m.hidden_dim; ++j) z += row[j] * fw.h[j];
    fw.logits[std::size_t(k)] = z;
  }
  // Max-shifted softmax: exp never sees a large positive argument.
  const double mx = std::max(fw.logits[0], fw.logits[1]);
  const double e0 = std::exp(fw.logits[0] - mx);
  const double e1 = std::exp(fw.logits[1] - mx);
  fw.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
  return fw;
}

void zero_like(const MlpModel& m, MlpGradients& g) {
  g.loss = 0.0;
  g.w1.assign(m.w1.size(), 0.0);
  g.b1.assign(m.b1.size(), 0.0);
  g.w2.assign(m.w2.size(), 0.0);
  g.b2.assign(m.b2.size(), 0.0);
}

// Mean cross-entropy over X[idx[lo..hi)] and its gradients, written into g.
void accumulate_batch(const MlpModel& m,
                      const std::vector<std::vector<double>>& X,
                      const std::vector<int>& y,
                      const std::vector<std::size_t>& idx, std::size_t lo,
                      std::size_t hi, MlpGradients& g) {
  zero_like(m, g);
  const double inv_n = 1.0 / double(hi - lo);
  for (std::size_t t = lo; t < hi; ++t) {
    const std::size_t r = idx[t];
    const std::vector<double>& f = X[r];
    Forward fw = forward_pass(m, f);
    const int label = y[r];
    const double p_true = fw.probs[std::size_t(label)];
    // Clamp keeps the loss finite when a probability underflows to 0.
    g.loss -= inv_n * std::log(std::max(p_true, 1e-300));
    // softmax + cross-entropy: dL/dz2 = p - onehot(y)
    std::array<double, 2> dz2 = {fw.probs[0], fw.probs[1]};
    dz2[std::size_t(label)] -= 1.0;
    for (int k = 0; k < 2; ++k) {
      const double gk = inv_n * dz2[std::size_t(k)];
      double* grow = &g.w2[std::size_t(k) * m.hidden_dim];
      for (std::uint32_t j = 0; j < m.hidden_dim; ++j) grow[j] += gk * fw.h[j];
      g.b2[std::size_t(k)] += gk;
    }
    for (std::uint32_t j = 0; j < m.hidden_dim; ++j) {
      if (fw.z1[j] <= 0.0) continue;  // rectifier gate (0 at the kink)
      const double dz1 = inv_n * (dz2[0] * m.w2[j] +
                                  dz2[1] * m.w2[std::size_t(m.hidden_dim) + j]);
      double* grow = &g.w1[std::size_t(j) * m.input_dim];
      for (std::uint32_t i = 0; i < m.input_dim; ++i) grow[i] += dz1 * f[i];
      g.b1[j] += dz1;
    }
  }
}

void check_training_set(const std::vector<std::vector<double>>& X,
                        const std::vector<int>& y, const char* who) {
  if (X.size() != y.size())
    throw std::invalid_argument(std::string(who) +
                                ": feature/label counts differ");
  if (X.empty())
    throw std::invalid_argument(std::string(who) + ": empty training set");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v == 0)
      has0 = true;
    else if (v == 1)
      has1 = true;
    else
      throw std::invalid_argument(std::string(who) + ": labels must be 0 or 1");
  }
  if (!has0 || !has1)
    throw std::invalid_argument(std::string(who) +
                                ": training set has a single class");
  for (std::size_t i = 1; i < X.size(); ++i) {
    if (X[i].size() != X[0].size())
      throw std::invalid_argument(std::string(who) +
                                  ": ragged feature matrix");
  }
}

}  // namespace

std::array<double, 2> mlp_forward(const MlpModel& m,
                                  const std::vector<double>& f) {
  return forward_pass(m, f).probs;
}

MlpGradients mlp_gradients(const MlpModel& m,
                           const std::vector<std::vector<double>>& X,
                           const std::vector<int>& y) {
  if (X.size() != y.size() || X.empty())
    throw std::invalid_argument("mlp_gradients: bad batch shape");
  MlpGradients g;
  std::vector<std::size_t> idx(X.size());
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  accumulate_batch(m, X, y, idx, 0, idx.size(), g);
  return g;
}

MlpModel mlp_train_features(const std::vector<std::vector<double>>& X,
                            const std::vector<int>& y, const MlpHyper& hyper) {
  check_training_set(X, y, "mlp_train");
  if (hyper.epochs < 1 || hyper.batch < 1 || hyper.hidden < 1 ||
      hyper.learning_rate < 0.0)
    throw std::invalid_argument("mlp_train: bad hyperparameters");
  MlpModel m = mlp_init(std::uint32_t(X[0].size()),
                        std::uint32_t(hyper.hidden), hyper.seed);
  std::vector<std::size_t> idx(X.size());
  std::iota(idx.begin(), idx.end(), std::size_t(0));
  Rng rng = make_rng(derive_seed(hyper.seed, "mlp.shuffle"));
  MlpGradients g;
  const std::size_t bs = std::size_t(hyper.batch);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t lo = 0; lo < idx.size(); lo += bs) {
      const std::size_t hi = std::min(lo + bs, idx.size());
      accumulate_batch(m, X, y, idx, lo, hi, g);
      const double lr = hyper.learning_rate;
      for (std::size_t i = 0; i < m.w1.size(); ++i) m.w1[i] -= lr * g.w1[i];
      for (std::size_t i = 0; i < m.b1.size(); ++i) m.b1[i] -= lr * g.b1[i];
      for (std::size_t i = 0; i < m.w2.size(); ++i) m.w2[i] -= lr * g.w2[i];
      for (std::size_t i = 0; i < m.b2.size(); ++i) m.b2[i] -= lr * g.b2[i];
    }
  }
  return m;
}

MlpModel mlp_train(const std::vector<ReplyPair>& train_pairs,
                   const EncoderModel& encoder, const MlpHyper& hyper) {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  X.reserve(train_pairs.size());
  y.reserve(train_pairs.size());
  for (const ReplyPair& p : train_pairs) {
    if (p.label == Label::Unlabeled)
      throw std::invalid_argument("mlp_train: unlabeled pair " + p.pair_id);
    X.push_back(build_features(encode(encoder, p.parent_text),
                               encode(encoder, p.reply_text)));
    y.push_back(p.label == Label::Zombie ? 1 : 0);
  }
  return mlp_train_features(X, y, hyper);
}

std::pair<Label, double> predict(const MlpModel& m, const EncoderModel& encoder,
                                 const std::string& parent_text,
                                 const std::string& reply_text) {
  std::vector<double> f = build_features(encode(encoder, parent_text),
                                         encode(encoder, reply_text));
  const double p_zombie = mlp_forward(m, f)[1];
  return {p_zombie > 0.5 ? Label::Zombie : Label::General, p_zombie};
}

EvalReport evaluate(const std::vector<Label>& preds,
                    const std::vector<Label>& gold) {
  if (preds.size() != gold.size())
    throw std::invalid_argument("evaluate: prediction/gold counts differ");
  if (preds.empty()) throw std::invalid_argument("evaluate: empty test set");
  EvalReport r;
  r.n_test = std::int64_t(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == Label::Unlabeled || gold[i] == Label::Unlabeled)
      throw std::invalid_argument("evaluate: unlabeled entry at index " +
                                  std::to_string(i));
    const bool gz = gold[i] == Label::Zombie;
    const bool pz = preds[i] == Label::Zombie;
    if (gz && pz)
      ++r.correct_zombie;
    else if (gz && !pz)
      ++r.zombie_as_general;
    else if (!gz && pz)
      ++r.general_as_zombie;
    else
      ++r.correct_general;
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
  return r;
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
  auto metric = [](const Metric& m) {
    nlohmann::json j;
    j["defined"] = m.defined;
    if (m.defined)
      j["value"] = m.value;
    else
      j["value"] = nullptr;
    return j;
  };
  nlohmann::json j;
  j["n_test"] = r.n_test;
  j["confusion"] = {{"correct_general", r.correct_general},
                    {"general_as_zombie", r.general_as_zombie},
                    {"zombie_as_general", r.zombie_as_general},
                    {"correct_zombie", r.correct_zombie}};
  j["precision_general"] = metric(r.precision_general);
  j["recall_general"] = metric(r.recall_general);
  j["precision_zombie"] = metric(r.precision_zombie);
  j["recall_zombie"] = metric(r.recall_zombie);
  j["accuracy"] = r.accuracy;
  return j;
}

TfidfLogreg train_tfidf_logreg(const std::vector<ReplyPair>& train_pairs,
                               const LogregOptions& solver,
                               const TokenizerConfig& tok) {
  std::vector<std::string> docs;
  std::vector<int> y;
  docs.reserve(train_pairs.size());
  y.reserve(train_pairs.size());
  for (const ReplyPair& p : train_pairs) {
    if (p.label == Label::Unlabeled)
      throw std::invalid_argument("train_tfidf_logreg: unlabeled pair " +
                                  p.pair_id);
    docs.push_back(p.parent_text + " " + p.reply_text);
    y.push_back(p.label == Label::Zombie ? 1 : 0);
  }
  if (docs.empty())
    throw std::invalid_argument("train_tfidf_logreg: empty training set");
  bool has0 = false, has1 = false;
  for (int v : y) (v == 0 ? has0 : has1) = true;
  if (!has0 || !has1)
    throw std::invalid_argument(
        "train_tfidf_logreg: training set has a single class");
  TfidfLogreg m;
  m.tfidf = tfidf_fit(docs, tok);
  std::vector<SparseVec> X;
  X.reserve(docs.size());
  for (const std::string& d : docs) X.push_back(tfidf_transform(m.tfidf, d));
  m.logreg = logreg_fit(X, y, m.tfidf.dim(), solver);
  return m;
}

std::pair<Label, double> predict_tfidf(const TfidfLogreg& m,
                                       const std::string& parent_text,
                                       const std::string& reply_text) {
  SparseVec x = tfidf_transform(m.tfidf, parent_text + " " + reply_text);
  const double p = logreg_predict_proba(m.logreg, x);
  return {p > 0.5 ? Label::Zombie : Label::General, p};
}

namespace {

// Trim, and collapse runs of whitespace (ASCII ws + ideographic space) to a
// single ASCII space.
std::string normalize_whitespace(const std::string& s) {
  std::vector<char32_t> cps = decode_utf8(s);
  std::string out;
  bool pending_space = false;
  for (char32_t cp : cps) {
    const bool ws = cp == 0x20 || (cp >= 0x09 && cp <= 0x0D) || cp == 0x3000;
    if (ws) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += encode_utf8(cp);
  }
  return out;
}

ErrorSlice make_slice(const std::vector<std::size_t>& rows,
                      const std::vector<ReplyPair>& pairs,
                      const TokenizerConfig& tok) {
  ErrorSlice s;
  std::vector<std::size_t> token_counts;
  for (std::size_t r : rows) {
    const ReplyPair& p = pairs[r];
    s.pair_ids.push_back(p.pair_id);
    token_counts.push_back(tokenize(p.reply_text, tok).size());
    if (normalize_whitespace(p.reply_text) ==
        normalize_whitespace(p.parent_text))
      ++s.n_exact_duplicates;
  }
  if (!token_counts.empty()) {
    std::sort(token_counts.begin(), token_counts.end());
    const std::size_t n = token_counts.size();
    s.median_reply_tokens =
        n % 2 == 1 ? double(token_counts[n / 2])
                   : 0.5 * double(token_counts[n / 2 - 1] + token_counts[n / 2]);
    s.median_defined = true;
  }
  return s;
}

}  // namespace

ErrorSliceReport analyze_errors(const std::vector<Label>& preds,
                                const std::vector<Label>& gold,
                                const std::vector<ReplyPair>& pairs) {
  if (preds.size() != gold.size() || preds.size() != pairs.size())
    throw std::invalid_argument("analyze_errors: input lengths differ");
  std::vector<std::size_t> fp_rows, fn_rows;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (gold[i] == Label::General && preds[i] == Label::Zombie)
      fp_rows.push_back(i);
    else if (gold[i] == Label::Zombie && preds[i] == Label::General)
      fn_rows.push_back(i);
  }
  TokenizerConfig tok;
  ErrorSliceReport r;
  r.false_positives = make_slice(fp_rows, pairs, tok);
  r.false_negatives = make_slice(fn_rows, pairs, tok);
  return r;
}

nlohmann::json error_slices_to_json(const ErrorSliceReport& r) {
  auto slice = [](const ErrorSlice& s) {
    nlohmann::json j;
    j["count"] = s.pair_ids.size();
    j["pair_ids"] = s.pair_ids;
    j["median_reply_tokens"] =
        s.median_defined ? nlohmann::json(s.median_reply_tokens)
                         : nlohmann::json(nullptr);
    j["n_exact_duplicates"] = s.n_exact_duplicates;
    return j;
  };
  nlohmann::json j;
  j["false_positives"] = slice(r.false_positives);
  j["false_negatives"] = slice(r.false_negatives);
  return j;
}

namespace {

constexpr char kMlpMagic[4] = {'Z', 'K', 'M', 'L'};

template <typename T>
void put(std::ofstream& out, T v) {
  // x86-64 target: native order is the checkpoint's declared little-endian.
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("load_mlp: truncated file " + path);
  return v;
}

void put_block(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            std::streamsize(v.size() * sizeof(double)));
}

void get_block(std::ifstream& in, std::vector<double>& v, std::size_t n,
               const std::string& path) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          std::streamsize(n * sizeof(double)));
  if (!in) throw std::runtime_error("load_mlp: truncated file " + path);
}

}  // namespace

void save_mlp(const MlpModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_mlp: cannot open " + path);
  out.write(kMlpMagic, 4);
  put<std::uint32_t>(out, m.format_version);
  put<std::uint32_t>(out, m.input_dim);
  put<std::uint32_t>(out, m.hidden_dim);
  put<std::uint64_t>(out, m.seed);
  put_block(out, m.w1);
  put_block(out, m.b1);
  put_block(out, m.w2);
  put_block(out, m.b2);
  if (!out) throw std::runtime_error("save_mlp: write failed: " + path);
}

MlpModel load_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_mlp: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMlpMagic, 4) != 0)
    throw std::runtime_error("load_mlp: bad magic in " + path);
  MlpModel m;
  std::uint32_t ver = get<std::uint32_t>(in, path);
  if (ver != m.format_version)
    throw std::runtime_error("load_mlp: unsupported format_version " +
                             std::to_string(ver) + " in " + path);
  m.input_dim = get<std::uint32_t>(in, path);
  m.hidden_dim = get<std::uint32_t>(in, path);
  m.seed = get<std::uint64_t>(in, path);
  if (m.input_dim == 0 || m.hidden_dim == 0)
    throw std::runtime_error("load_mlp: corrupt dimensions in " + path);
  get_block(in, m.w1, std::size_t(m.hidden_dim) * m.input_dim, path);
  get_block(in, m.b1, m.hidden_dim, path);
  get_block(in, m.w2, std::size_t(2) * m.hidden_dim, path);
  get_block(in, m.b2, 2, path);
  return m;
}

}  // namespace zk
