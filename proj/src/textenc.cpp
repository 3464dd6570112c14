#include "zombiekit/textenc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "zombiekit/rng.hpp"

namespace zk {

std::vector<char32_t> decode_utf8(const std::string& text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    unsigned char b0 = text[i];
    char32_t cp = 0;
    size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > text.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (size_t k = 1; k < len; ++k) {
      unsigned char bk = text[i + k];
      if ((bk & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (bk & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(char32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s += static_cast<char>(cp);
  } else if (cp < 0x800) {
    s += static_cast<char>(0xC0 | (cp >> 6));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    s += static_cast<char>(0xE0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    s += static_cast<char>(0xF0 | (cp >> 18));
    s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return s;
}

bool is_japanese_script(char32_t cp) {
  return (cp >= 0x3040 && cp <= 0x309F) ||  // Hiragana
         (cp >= 0x30A0 && cp <= 0x30FF) ||  // Katakana
         (cp >= 0x4E00 && cp <= 0x9FFF);    // CJK Unified Ideographs
}

namespace {

bool is_word_char(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') ||
         (cp >= 'a' && cp <= 'z');
}

bool is_separator(char32_t cp) {
  if (cp <= 0x20) return true;  // ASCII control + space
  if (cp < 0x80)
    return !is_word_char(cp);  // remaining ASCII printable = punctuation
  if (cp >= 0x2000 && cp <= 0x206F) return true;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return true;  // CJK symbols/punctuation
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;  // full-width punctuation
  if (cp >= 0xFF1A && cp <= 0xFF20) return true;
  if (cp >= 0xFF3B && cp <= 0xFF40) return true;
  if (cp >= 0xFF5B && cp <= 0xFF65) return true;
  return false;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text,
                                  const TokenizerConfig& cfg) {
  if (cfg.cjk_ngram < 1)
    throw std::invalid_argument("tokenize: cjk_ngram must be >= 1");
  std::vector<char32_t> cps = decode_utf8(text);
  std::vector<std::string> tokens;
  size_t i = 0;
  const size_t n = cps.size();
  while (i < n) {
    char32_t c = cps[i];
    if (is_japanese_script(c)) {
      size_t j = i;
      while (j < n && is_japanese_script(cps[j])) ++j;
      size_t run = j - i;
      size_t width = static_cast<size_t>(cfg.cjk_ngram);
      if (run <= width) {
        std::string tok;
        for (size_t k = i; k < j; ++k) tok += encode_utf8(cps[k]);
        tokens.push_back(std::move(tok));
      } else {
        for (size_t s = i; s + width <= j; ++s) {
          std::string tok;
          for (size_t k = s; k < s + width; ++k) tok += encode_utf8(cps[k]);
          tokens.push_back(std::move(tok));
        }
      }
      i = j;
    } else if (is_word_char(c)) {
      size_t j = i;
      std::string tok;
      while (j < n && is_word_char(cps[j])) {
        char32_t w = cps[j];
        if (cfg.lowercase && w >= 'A' && w <= 'Z') w += 'a' - 'A';
        tok += static_cast<char>(w);
        ++j;
      }
      tokens.push_back(std::move(tok));
      i = j;
    } else if (is_separator(c)) {
      ++i;
    } else {
      tokens.push_back(encode_utf8(c));
      ++i;
    }
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// TF-IDF

TfidfModel tfidf_fit(const std::vector<std::string>& docs,
                     const TokenizerConfig& cfg) {
  TfidfModel m;
  m.tok = cfg;
  m.n_docs = docs.size();
  // Document frequency per token; std::map gives the lexicographic column
  // order directly.
  std::map<std::string, std::uint64_t> df;
  for (const auto& doc : docs) {
    auto toks = tokenize(doc, cfg);
    std::sort(toks.begin(), toks.end());
    toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
    for (auto& t : toks) ++df[t];
  }
  m.idf.reserve(df.size());
  std::uint32_t col = 0;
  for (const auto& [token, count] : df) {
    m.vocab.emplace(token, col++);
    m.idf.push_back(std::log((1.0 + double(m.n_docs)) / (1.0 + double(count))) +
                    1.0);
  }
  return m;
}

SparseVec tfidf_transform(const TfidfModel& m, const std::string& doc) {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : tokenize(doc, m.tok)) {
    auto it = m.vocab.find(t);
    if (it != m.vocab.end()) counts[it->second] += 1.0;
  }
  SparseVec v;
  v.reserve(counts.size());
  double norm2 = 0.0;
  for (const auto& [col, tf] : counts) {
    double x = tf * m.idf[col];
    v.emplace_back(col, x);
    norm2 += x * x;
  }
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& [col, x] : v) x *= inv;
  }
  return v;
}

void save_tfidf(const TfidfModel& m, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["tokenizer"] = {{"cjk_ngram", m.tok.cjk_ngram},
                    {"lowercase", m.tok.lowercase}};
  j["n_docs"] = m.n_docs;
  nlohmann::json vocab = nlohmann::json::object();
  for (const auto& [token, col] : m.vocab) vocab[token] = col;
  j["vocab"] = std::move(vocab);
  j["idf"] = m.idf;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_tfidf: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_tfidf: write failed: " + path);
}

TfidfModel load_tfidf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_tfidf: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_tfidf: bad JSON in " + path + ": " +
                             e.what());
  }
  TfidfModel m;
  std::uint32_t ver = j.at("format_version").get<std::uint32_t>();
  if (ver != m.format_version)
    throw std::runtime_error("load_tfidf: unsupported format_version " +
                             std::to_string(ver) + " in " + path);
  m.tok.cjk_ngram = j.at("tokenizer").at("cjk_ngram").get<int>();
  m.tok.lowercase = j.at("tokenizer").at("lowercase").get<bool>();
  m.n_docs = j.at("n_docs").get<std::uint64_t>();
  m.idf = j.at("idf").get<std::vector<double>>();
  for (const auto& [token, col] : j.at("vocab").items()) {
    std::uint32_t c = col.get<std::uint32_t>();
    if (c >= m.idf.size())
      throw std::runtime_error("load_tfidf: vocab column out of range in " +
                               path);
    m.vocab.emplace(token, c);
  }
  if (m.vocab.size() != m.idf.size())
    throw std::runtime_error("load_tfidf: vocab/idf size mismatch in " + path);
  return m;
}

// ---------------------------------------------------------------------------
// Hashed embedding encoder

EncoderModel make_encoder(std::uint32_t hash_dim, std::uint32_t embed_dim,
                          std::uint64_t hash_seed, std::uint64_t init_seed,
                          bool normalize_output, const TokenizerConfig& tok) {
  if (hash_dim == 0 || embed_dim == 0)
    throw std::invalid_argument("make_encoder: dimensions must be positive");
  EncoderModel m;
  m.hash_seed = hash_seed;
  m.hash_dim = hash_dim;
  m.embed_dim = embed_dim;
  m.normalize_output = normalize_output;
  m.tok = tok;
  m.table.resize(std::size_t(hash_dim) * embed_dim);
  Rng rng = make_rng(init_seed);
  std::normal_distribution<double> N(0.0, 1.0 / std::sqrt(double(embed_dim)));
  for (auto& x : m.table) x = N(rng);
  return m;
}

std::uint32_t token_bucket(const EncoderModel& m, const std::string& token) {
  return static_cast<std::uint32_t>(splitmix64(fnv1a64(token, m.hash_seed)) %
                                    m.hash_dim);
}

std::vector<std::uint32_t> text_buckets(const EncoderModel& m,
                                        const std::string& text) {
  std::vector<std::uint32_t> buckets;
  for (const auto& t : tokenize(text, m.tok))
    buckets.push_back(token_bucket(m, t));
  return buckets;
}

std::vector<double> encode_pooled(const EncoderModel& m,
                                  const std::string& text) {
  std::vector<double> out(m.embed_dim, 0.0);
  auto buckets = text_buckets(m, text);
  if (buckets.empty()) return out;
  for (auto b : buckets) {
    const double* r = m.row(b);
    for (std::uint32_t k = 0; k < m.embed_dim; ++k) out[k] += r[k];
  }
  double inv = 1.0 / double(buckets.size());
  for (auto& x : out) x *= inv;
  return out;
}

std::vector<double> encode(const EncoderModel& m, const std::string& text) {
  std::vector<double> v = encode_pooled(m, text);
  if (!m.normalize_output) return v;
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
  }
  return v;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v,
              bool* degenerate) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine: length mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (degenerate) *degenerate = false;
  if (nu == 0.0 || nv == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

constexpr char kEncoderMagic[4] = {'Z', 'K', 'E', 'M'};

template <typename T>
void put(std::ofstream& out, T v) {
  // x86-64 target: native byte order is little-endian, which is the
  // checkpoint's declared order.
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("load_encoder: truncated file " + path);
  return v;
}

}  // namespace

void save_encoder(const EncoderModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_encoder: cannot open " + path);
  out.write(kEncoderMagic, 4);
  put<std::uint32_t>(out, m.format_version);
  put<std::uint64_t>(out, m.hash_seed);
  put<std::uint32_t>(out, m.hash_dim);
  put<std::uint32_t>(out, m.embed_dim);
  put<std::uint8_t>(out, m.normalize_output ? 1 : 0);
  put<std::uint8_t>(out, m.tok.lowercase ? 1 : 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.tok.cjk_ngram));
  out.write(reinterpret_cast<const char*>(m.table.data()),
            std::streamsize(m.table.size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_encoder: write failed: " + path);
}

EncoderModel load_encoder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_encoder: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kEncoderMagic, 4) != 0)
    throw std::runtime_error("load_encoder: bad magic in " + path);
  EncoderModel m;
  std::uint32_t ver = get<std::uint32_t>(in, path);
  if (ver != m.format_version)
    throw std::runtime_error("load_encoder: unsupported format_version " +
                             std::to_string(ver) + " in " + path);
  m.hash_seed = get<std::uint64_t>(in, path);
  m.hash_dim = get<std::uint32_t>(in, path);
  m.embed_dim = get<std::uint32_t>(in, path);
  m.normalize_output = get<std::uint8_t>(in, path) != 0;
  m.tok.lowercase = get<std::uint8_t>(in, path) != 0;
  m.tok.cjk_ngram = static_cast<int>(get<std::uint32_t>(in, path));
  if (m.hash_dim == 0 || m.embed_dim == 0)
    throw std::runtime_error("load_encoder: corrupt dimensions in " + path);
  m.table.resize(std::size_t(m.hash_dim) * m.embed_dim);
  in.read(reinterpret_cast<char*>(m.table.data()),
          std::streamsize(m.table.size() * sizeof(double)));
  if (!in) throw std::runtime_error("load_encoder: truncated table in " + path);
  return m;
}

}  // namespace zk
