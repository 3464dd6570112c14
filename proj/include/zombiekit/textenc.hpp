#pragma once

// Text encoding: mixed Japanese/Latin tokenizer, TF-IDF vectorizer, and the
// hashed-bucket mean-pooling sentence encoder used by the contrastive
// pipeline. All functions are pure and deterministic.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace zk {

struct TokenizerConfig {
  // Overlapping character n-gram width for Japanese-script runs.
  int cjk_ngram = 2;
  // Lowercase ASCII letters inside word tokens.
  bool lowercase = true;
};

// Decode UTF-8 to code points; malformed bytes decode to U+FFFD one byte at
// a time, so no input can throw.
std::vector<char32_t> decode_utf8(const std::string& text);

// Encode a single code point back to UTF-8.
std::string encode_utf8(char32_t cp);

// Hiragana U+3040-309F, Katakana U+30A0-30FF, CJK Unified U+4E00-9FFF.
bool is_japanese_script(char32_t cp);

// Tokenization rules:
//   - maximal runs of Japanese-script characters -> overlapping cjk_ngram
//     character n-grams (a run shorter than the width is one token);
//   - maximal runs of ASCII letters/digits -> word tokens (lowercased per
//     cfg.lowercase);
//   - whitespace and punctuation (ASCII, general/CJK/full-width punctuation
//     blocks) separate tokens and are dropped;
//   - any other code point (emoji, symbols, non-ASCII letters outside the
//     Japanese ranges) is a single-character token.
std::vector<std::string> tokenize(const std::string& text,
                                  const TokenizerConfig& cfg = {});

// ---------------------------------------------------------------------------
// TF-IDF

// Sparse vector: (column, value) pairs sorted by column, no duplicates.
using SparseVec = std::vector<std::pair<std::uint32_t, double>>;

struct TfidfModel {
  std::uint32_t format_version = 1;
  TokenizerConfig tok;
  // Token -> column; columns are assigned in lexicographic token order so a
  // fit on the same corpus is byte-for-byte reproducible.
  std::unordered_map<std::string, std::uint32_t> vocab;
  std::vector<double> idf;  // per column: ln((1+N)/(1+df)) + 1
  std::uint64_t n_docs = 0;

  std::uint32_t dim() const { return static_cast<std::uint32_t>(idf.size()); }
};

TfidfModel tfidf_fit(const std::vector<std::string>& docs,
                     const TokenizerConfig& cfg = {});

// Raw term counts scaled by idf, then L2-normalized. Unseen tokens are
// ignored; a document with no known tokens maps to the empty (zero) vector.
SparseVec tfidf_transform(const TfidfModel& m, const std::string& doc);

void save_tfidf(const TfidfModel& m, const std::string& path);
TfidfModel load_tfidf(const std::string& path);

// ---------------------------------------------------------------------------
// Hashed embedding encoder

struct EncoderModel {
  std::uint32_t format_version = 1;
  std::uint64_t hash_seed = 0;
  std::uint32_t hash_dim = 65536;
  std::uint32_t embed_dim = 64;
  bool normalize_output = true;
  TokenizerConfig tok;
  // hash_dim x embed_dim, row-major.
  std::vector<double> table;

  double* row(std::uint32_t bucket) { return table.data() + std::size_t(bucket) * embed_dim; }
  const double* row(std::uint32_t bucket) const {
    return table.data() + std::size_t(bucket) * embed_dim;
  }
};

// Fresh encoder with table entries ~ Normal(0, 1/sqrt(embed_dim)), seeded.
EncoderModel make_encoder(std::uint32_t hash_dim, std::uint32_t embed_dim,
                          std::uint64_t hash_seed, std::uint64_t init_seed,
                          bool normalize_output = true,
                          const TokenizerConfig& tok = {});

// Bucket of one token: seeded FNV-1a 64 + splitmix64 finalizer, mod hash_dim.
std::uint32_t token_bucket(const EncoderModel& m, const std::string& token);

// Buckets for every token instance of the text, in order (repeats kept).
std::vector<std::uint32_t> text_buckets(const EncoderModel& m,
                                        const std::string& text);

// Mean of the bucket rows over token instances; no normalization. Texts with
// no tokens map to the zero vector.
std::vector<double> encode_pooled(const EncoderModel& m,
                                  const std::string& text);

// encode_pooled followed by L2 normalization iff m.normalize_output. The
// zero vector stays zero (never NaN).
std::vector<double> encode(const EncoderModel& m, const std::string& text);

// Cosine similarity. If either vector has zero norm the result is 0.0 and
// *degenerate (when given) is set. Throws on length mismatch.
double cosine(const std::vector<double>& u, const std::vector<double>& v,
              bool* degenerate = nullptr);

// Little-endian binary checkpoint, magic "ZKEM". Loading a file with a wrong
// magic or format_version throws std::runtime_error naming the mismatch.
void save_encoder(const EncoderModel& m, const std::string& path);
EncoderModel load_encoder(const std::string& path);

}  // namespace zk
