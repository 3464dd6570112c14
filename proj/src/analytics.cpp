#include "zombiekit/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "zombiekit/time.hpp"

namespace zk {

double account_age_days(const AccountRecord& a, UtcSeconds reference) {
  if (a.created_at > reference)
    throw std::invalid_argument("account_age_days: created_at after reference (" +
                                a.account_id + ")");
  return double(reference - a.created_at) / 86400.0;
}

double posts_per_day(const AccountRecord& a, UtcSeconds reference) {
  double age = account_age_days(a, reference);
  return double(a.total_posts) / std::max(age, 1.0);
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

// Unbiased (n-1) sample variance.
double sample_var(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / double(v.size() - 1);
}

// Linear-interpolation quantile on a sorted copy (the numpy default).
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  double idx = q * double(sorted.size() - 1);
  size_t lo = size_t(std::floor(idx));
  size_t hi = size_t(std::ceil(idx));
  double frac = idx - double(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

HistogramKde histogram_kde(const std::vector<double>& values, int n_bins) {
  if (values.empty())
    throw std::invalid_argument("histogram_kde: empty input");
  if (n_bins < 1) throw std::invalid_argument("histogram_kde: n_bins < 1");

  HistogramKde h;
  auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  double mn = *mn_it, mx = *mx_it;
  size_t n = values.size();

  if (mn == mx) {
    // Degenerate: one occupied bin, KDE contractually omitted.
    h.bin_edges = {mn, mx};
    h.relative_frequencies = {1.0};
    return h;
  }

  h.bin_edges.resize(size_t(n_bins) + 1);
  for (int b = 0; b <= n_bins; ++b)
    h.bin_edges[size_t(b)] = mn + (mx - mn) * double(b) / double(n_bins);
  h.relative_frequencies.assign(size_t(n_bins), 0.0);
  for (double v : values) {
    auto b = size_t((v - mn) / (mx - mn) * double(n_bins));
    if (b >= size_t(n_bins)) b = size_t(n_bins) - 1;  // right edge inclusive
    h.relative_frequencies[b] += 1.0;
  }
  for (auto& f : h.relative_frequencies) f /= double(n);

  // Silverman bandwidth on the sample std and IQR.
  double mean = mean_of(values);
  double sigma = std::sqrt(sample_var(values, mean));
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double scale = iqr > 0.0 ? std::min(sigma, iqr / 1.34) : sigma;
  h.bandwidth = 0.9 * scale * std::pow(double(n), -0.2);
  h.kde_present = h.bandwidth > 0.0;
  if (!h.kde_present) return h;

  constexpr int kGrid = 256;
  double lo = mn - 3.0 * h.bandwidth, hi = mx + 3.0 * h.bandwidth;
  const double norm =
      1.0 / (double(n) * h.bandwidth * std::sqrt(2.0 * 3.14159265358979323846));
  h.kde_grid.reserve(kGrid);
  for (int g = 0; g < kGrid; ++g) {
    double x = lo + (hi - lo) * double(g) / double(kGrid - 1);
    double density = 0.0;
    for (double v : values) {
      double u = (x - v) / h.bandwidth;
      density += std::exp(-0.5 * u * u);
    }
    h.kde_grid.emplace_back(x, density * norm);
  }
  return h;
}

TTestResult welch_t_test(const std::vector<double>& x,
                         const std::vector<double>& y) {
  if (x.size() < 2 || y.size() < 2)
    throw std::invalid_argument("welch_t_test: need >= 2 values per sample");
  double nx = double(x.size()), ny = double(y.size());
  double mx = mean_of(x), my = mean_of(y);
  double vx = sample_var(x, mx), vy = sample_var(y, my);

  if (vx == 0.0 && vy == 0.0) {
    if (mx == my) {
      // Documented special case: no variation, no difference.
      return {0.0, nx + ny - 2.0, 1.0};
    }
    throw std::invalid_argument(
        "welch_t_test: zero variance in both samples with unequal means");
  }
  if (vx == 0.0 || vy == 0.0)
    throw std::invalid_argument("welch_t_test: zero variance in a sample");

  double sx = vx / nx, sy = vy / ny;
  double se = std::sqrt(sx + sy);
  double t = (mx - my) / se;
  double df =
      (sx + sy) * (sx + sy) / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
  boost::math::students_t_distribution<double> dist(df);
  double p = 2.0 * boost::math::cdf(dist, -std::fabs(t));
  return {t, df, std::min(p, 1.0)};
}

LinearFit linear_fit(const std::vector<double>& x,
                     const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("linear_fit: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 points");
  double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x is constant");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

FfRatios ff_ratios(const std::vector<AccountRecord>& accounts) {
  FfRatios r;
  for (const auto& a : accounts) {
    if (a.followers_count == 0) {
      ++r.excluded;
      continue;
    }
    r.ratios.push_back(double(a.following_count) / double(a.followers_count));
  }
  return r;
}

OddsRatioTable bigram_odds_ratios(
    const std::vector<std::pair<std::string, Label>>& profiles,
    std::int64_t min_support, double l2_strength, const LogregOptions& solver,
    const TokenizerConfig& tok) {
  if (min_support < 1)
    throw std::invalid_argument("bigram_odds_ratios: min_support must be >= 1");
  if (l2_strength < 0.0)
    throw std::invalid_argument("bigram_odds_ratios: negative l2_strength");
  bool has_general = false, has_zombie = false;
  for (const auto& [text, label] : profiles) {
    (void)text;
    if (label == Label::General) has_general = true;
    else if (label == Label::Zombie) has_zombie = true;
    else
      throw std::invalid_argument(
          "bigram_odds_ratios: profiles must be labeled General or Zombie");
  }
  if (!has_general || !has_zombie)
    throw std::invalid_argument("bigram_odds_ratios: both labels required");

  // Per-document bigram sets (binary presence) and global document frequency.
  std::vector<std::set<std::string>> doc_bigrams(profiles.size());
  std::map<std::string, std::int64_t> df;
  for (size_t i = 0; i < profiles.size(); ++i) {
    auto toks = tokenize(profiles[i].first, tok);
    for (size_t t = 0; t + 1 < toks.size(); ++t)
      doc_bigrams[i].insert(toks[t] + " " + toks[t + 1]);
    for (const auto& b : doc_bigrams[i]) ++df[b];
  }

  OddsRatioTable table;
  table.regularization_strength = l2_strength;
  table.n_documents = std::int64_t(profiles.size());

  std::map<std::string, std::uint32_t> columns;  // lexicographic order
  std::vector<std::int64_t> support;
  for (const auto& [bigram, count] : df)
    if (count >= min_support) {
      columns.emplace(bigram, std::uint32_t(columns.size()));
      support.push_back(count);
    }
  if (columns.empty()) {
    table.converged = true;
    return table;
  }

  std::vector<SparseVec> X(profiles.size());
  std::vector<int> y(profiles.size());
  for (size_t i = 0; i < profiles.size(); ++i) {
    for (const auto& b : doc_bigrams[i]) {
      auto it = columns.find(b);
      if (it != columns.end()) X[i].emplace_back(it->second, 1.0);
    }
    y[i] = profiles[i].second == Label::Zombie ? 1 : 0;
  }

  LogregOptions opts = solver;
  opts.l2 = l2_strength;
  LogregModel model = logreg_fit(X, y, std::uint32_t(columns.size()), opts);
  table.converged = model.converged;

  for (const auto& [bigram, col] : columns) {
    OddsRatioRow row;
    row.bigram = bigram;
    row.coefficient = model.weights[col];
    row.odds_ratio = std::exp(row.coefficient);
    row.support = support[col];
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const OddsRatioRow& a, const OddsRatioRow& b) {
              if (a.odds_ratio != b.odds_ratio)
                return a.odds_ratio > b.odds_ratio;
              return a.bigram < b.bigram;
            });
  return table;
}

HeatmapZ activity_heatmap(const std::vector<UtcSeconds>& timestamps,
                          int tz_offset_minutes) {
  if (timestamps.empty())
    throw std::invalid_argument("activity_heatmap: empty input");
  HeatmapZ h;
  h.timezone_offset_minutes = tz_offset_minutes;
  for (UtcSeconds t : timestamps) {
    std::int64_t local = t + std::int64_t(tz_offset_minutes) * 60;
    std::int64_t days = local / 86400;
    std::int64_t rem = local % 86400;
    if (rem < 0) {
      rem += 86400;
      days -= 1;
    }
    int dow = day_of_week_mon0(days);
    int hour = int(rem / 3600);
    ++h.counts[size_t(dow)][size_t(hour)];
  }
  double mean = double(timestamps.size()) / 168.0;
  double var = 0.0;
  for (const auto& row : h.counts)
    for (std::int64_t c : row) var += (double(c) - mean) * (double(c) - mean);
  var /= 168.0;  // population variance over all cells
  if (var == 0.0) return h;  // all cells equal -> all-zero z by contract
  double inv_std = 1.0 / std::sqrt(var);
  for (size_t d = 0; d < 7; ++d)
    for (size_t hh = 0; hh < 24; ++hh)
      h.cells[d][hh] = (double(h.counts[d][hh]) - mean) * inv_std;
  return h;
}

FleissKappa fleiss_kappa(const std::vector<std::vector<std::int64_t>>& votes,
                         std::int64_t raters_per_item) {
  if (votes.empty()) throw std::invalid_argument("fleiss_kappa: no items");
  if (raters_per_item < 2)
    throw std::invalid_argument("fleiss_kappa: raters_per_item must be >= 2");
  size_t k = votes[0].size();
  if (k < 2) throw std::invalid_argument("fleiss_kappa: need >= 2 categories");

  double n = double(raters_per_item);
  double N = double(votes.size());
  std::vector<double> category_mass(k, 0.0);
  double p_bar = 0.0;
  for (const auto& row : votes) {
    if (row.size() != k)
      throw std::invalid_argument("fleiss_kappa: ragged vote matrix");
    std::int64_t sum = 0;
    double agree = 0.0;
    for (size_t j = 0; j < k; ++j) {
      if (row[j] < 0)
        throw std::invalid_argument("fleiss_kappa: negative count");
      sum += row[j];
      agree += double(row[j]) * double(row[j] - 1);
      category_mass[j] += double(row[j]);
    }
    if (sum != raters_per_item)
      throw std::invalid_argument(
          "fleiss_kappa: row does not sum to raters_per_item");
    p_bar += agree / (n * (n - 1.0));
  }
  p_bar /= N;
  double pe = 0.0;
  for (size_t j = 0; j < k; ++j) {
    double pj = category_mass[j] / (N * n);
    pe += pj * pj;
  }
  FleissKappa out;
  if (pe >= 1.0 - 1e-15) {
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    out.defined = false;
    return out;
  }
  out.kappa = (p_bar - pe) / (1.0 - pe);
  out.defined = true;
  return out;
}

// ---------------------------------------------------------------------------
// Summary report

namespace {

struct ClassSamples {
  std::vector<double> ppd, age, ratio, age_under_500;
};

ClassAccountStats class_stats(const std::vector<AccountRecord>& accounts,
                              Label label, const ReportOptions& opt,
                              ClassSamples& samples,
                              std::vector<std::string>& warnings) {
  ClassAccountStats s;
  std::vector<AccountRecord> subset;
  for (const auto& a : accounts)
    if (a.label == label) subset.push_back(a);
  s.n_accounts = std::int64_t(subset.size());
  if (subset.empty()) {
    warnings.push_back("no " + label_to_string(label) +
                       " accounts; class statistics omitted");
    return s;
  }

  std::int64_t over_10k = 0, under_500 = 0, over_1800 = 0;
  for (const auto& a : subset) {
    double age = account_age_days(a, a.snapshot_at);
    double ppd = posts_per_day(a, a.snapshot_at);
    samples.age.push_back(age);
    samples.ppd.push_back(ppd);
    samples.age_under_500.push_back(age < 500.0 ? 1.0 : 0.0);
    if (a.total_posts > 10000) ++over_10k;
    if (age < 500.0) ++under_500;
    if (age > 1800.0) ++over_1800;
    PrelabelFlags f = heuristic_prelabel(a);
    if (f.non_japanese_name) ++s.flag_non_japanese_name;
    if (f.verified) ++s.flag_verified;
    if (f.non_japanese_profile) ++s.flag_non_japanese_profile;
  }
  FfRatios ff = ff_ratios(subset);
  samples.ratio = ff.ratios;
  s.ff_excluded = ff.excluded;

  s.mean_posts_per_day = mean_of(samples.ppd);
  s.mean_age_days = mean_of(samples.age);
  s.mean_ff_ratio = ff.ratios.empty() ? 0.0 : mean_of(ff.ratios);
  s.share_posts_over_10k = double(over_10k) / double(subset.size());
  s.share_age_under_500 = double(under_500) / double(subset.size());
  s.share_age_over_1800 = double(over_1800) / double(subset.size());

  s.age_hist = histogram_kde(samples.age, opt.n_bins);
  s.ppd_hist = histogram_kde(samples.ppd, opt.n_bins);
  if (!ff.ratios.empty()) s.ratio_hist = histogram_kde(ff.ratios, opt.n_bins);
  s.hists_present = true;
  return s;
}

}  // namespace

SummaryReport summary_report(const std::vector<AccountRecord>& accounts,
                             const std::vector<ReplyPair>& pairs,
                             const ReportOptions& options) {
  SummaryReport r;
  r.options = options;

  ClassSamples gen, zom;
  r.general = class_stats(accounts, Label::General, options, gen, r.warnings);
  r.zombie = class_stats(accounts, Label::Zombie, options, zom, r.warnings);
  for (const auto& a : accounts)
    if (a.label == Label::Unlabeled) ++r.n_accounts_unlabeled;

  if (gen.ppd.size() >= 2 && zom.ppd.size() >= 2) {
    try {
      r.posts_per_day_test = welch_t_test(zom.ppd, gen.ppd);
      r.age_under_500_test =
          welch_t_test(zom.age_under_500, gen.age_under_500);
      if (gen.ratio.size() >= 2 && zom.ratio.size() >= 2)
        r.ff_ratio_test = welch_t_test(zom.ratio, gen.ratio);
      r.tests_present = true;
    } catch (const std::invalid_argument& e) {
      r.warnings.push_back(std::string("t-tests omitted: ") + e.what());
    }
  } else {
    r.warnings.push_back("t-tests omitted: a class has fewer than 2 accounts");
  }

  for (const auto& p : pairs) {
    if (p.label == Label::General) ++r.n_pairs_general;
    else if (p.label == Label::Zombie) ++r.n_pairs_zombie;
    else ++r.n_pairs_unlabeled;
  }

  std::vector<std::vector<std::int64_t>> vote_rows;
  for (const auto& p : pairs) {
    if (p.annotator_votes.size() != 4) continue;
    std::int64_t z = 0;
    for (Label v : p.annotator_votes)
      if (v == Label::Zombie) ++z;
    vote_rows.push_back({4 - z, z});
  }
  r.kappa_items = std::int64_t(vote_rows.size());
  if (!vote_rows.empty()) {
    r.kappa = fleiss_kappa(vote_rows, 4);
    r.kappa_present = true;
  } else {
    r.warnings.push_back("no annotated pairs; Fleiss' kappa omitted");
  }

  std::vector<std::pair<std::string, Label>> profiles;
  for (const auto& a : accounts)
    if (a.label != Label::Unlabeled && !a.profile_text.empty())
      profiles.emplace_back(a.profile_text, a.label);
  bool has_g = false, has_z = false;
  for (const auto& [text, label] : profiles) {
    (void)text;
    if (label == Label::General) has_g = true;
    if (label == Label::Zombie) has_z = true;
  }
  if (has_g && has_z) {
    r.odds = bigram_odds_ratios(profiles, options.min_support, options.l2);
    if (options.top_n_bigrams >= 0 &&
        r.odds.rows.size() > size_t(options.top_n_bigrams))
      r.odds.rows.resize(size_t(options.top_n_bigrams));
  } else {
    r.warnings.push_back(
        "profile bigram odds ratios omitted: need non-empty profiles in both "
        "classes");
  }

  std::vector<UtcSeconds> ts_general, ts_zombie;
  for (const auto& p : pairs) {
    if (p.label == Label::General) ts_general.push_back(p.reply_created_at);
    else if (p.label == Label::Zombie) ts_zombie.push_back(p.reply_created_at);
  }
  if (!ts_general.empty()) {
    r.heatmap_general =
        activity_heatmap(ts_general, options.tz_offset_minutes);
    r.heatmap_general_present = true;
  }
  if (!ts_zombie.empty()) {
    r.heatmap_zombie = activity_heatmap(ts_zombie, options.tz_offset_minutes);
    r.heatmap_zombie_present = true;
  }
  return r;
}

namespace {

nlohmann::json ttest_json(const TTestResult& t) {
  return {{"t_statistic", t.t_statistic},
          {"degrees_of_freedom", t.degrees_of_freedom},
          {"p_value", t.p_value}};
}

nlohmann::json class_json(const ClassAccountStats& s) {
  nlohmann::json j{{"n_accounts", s.n_accounts}};
  if (s.n_accounts > 0) {
    j["mean_posts_per_day"] = s.mean_posts_per_day;
    j["mean_age_days"] = s.mean_age_days;
    j["mean_ff_ratio"] = s.mean_ff_ratio;
    j["ff_excluded"] = s.ff_excluded;
    j["share_posts_over_10k"] = s.share_posts_over_10k;
    j["share_age_under_500"] = s.share_age_under_500;
    j["share_age_over_1800"] = s.share_age_over_1800;
    j["prelabel_flags"] = {
        {"non_japanese_name", s.flag_non_japanese_name},
        {"verified", s.flag_verified},
        {"non_japanese_profile", s.flag_non_japanese_profile}};
  }
  return j;
}

}  // namespace

nlohmann::json report_to_json(const SummaryReport& r) {
  nlohmann::json j;
  j["accounts"] = {{"general", class_json(r.general)},
                   {"zombie", class_json(r.zombie)},
                   {"n_unlabeled", r.n_accounts_unlabeled}};
  j["pairs"] = {{"n_general", r.n_pairs_general},
                {"n_zombie", r.n_pairs_zombie},
                {"n_unlabeled", r.n_pairs_unlabeled}};
  if (r.tests_present) {
    j["tests"] = {{"posts_per_day_zombie_vs_general",
                   ttest_json(r.posts_per_day_test)},
                  {"ff_ratio_zombie_vs_general", ttest_json(r.ff_ratio_test)},
                  {"age_under_500_share_zombie_vs_general",
                   ttest_json(r.age_under_500_test)}};
  }
  if (r.kappa_present) {
    j["fleiss_kappa"] = {
        {"kappa", r.kappa.defined ? nlohmann::json(r.kappa.kappa)
                                  : nlohmann::json(nullptr)},
        {"defined", r.kappa.defined},
        {"n_items", r.kappa_items}};
  }
  nlohmann::json odds = nlohmann::json::array();
  for (const auto& row : r.odds.rows)
    odds.push_back({{"bigram", row.bigram},
                    {"coefficient", row.coefficient},
                    {"odds_ratio", row.odds_ratio},
                    {"support", row.support}});
  j["odds_ratios"] = {{"rows", std::move(odds)},
                      {"regularization_strength",
                       r.odds.regularization_strength},
                      {"n_documents", r.odds.n_documents}};
  j["options"] = {{"tz_offset_minutes", r.options.tz_offset_minutes},
                  {"n_bins", r.options.n_bins},
                  {"top_n_bigrams", r.options.top_n_bigrams},
                  {"min_support", r.options.min_support},
                  {"l2", r.options.l2}};
  j["warnings"] = r.warnings;
  return j;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + p.string() + " for writing");
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

void write_heatmap_csv(const HeatmapZ& h, const std::filesystem::path& p) {
  auto out = open_csv(p);
  out << "day,hour,count,z\n";
  static const char* days[7] = {"mon", "tue", "wed", "thu",
                                "fri", "sat", "sun"};
  for (size_t d = 0; d < 7; ++d)
    for (size_t hh = 0; hh < 24; ++hh)
      out << days[d] << ',' << hh << ',' << h.counts[d][hh] << ','
          << fmt(h.cells[d][hh]) << '\n';
}

void write_hist_csv(const HistogramKde& h, const std::filesystem::path& dir,
                    const std::string& metric, const std::string& cls) {
  {
    auto out = open_csv(dir / ("hist_" + metric + "_" + cls + ".csv"));
    out << "bin_lo,bin_hi,freq\n";
    for (size_t b = 0; b < h.relative_frequencies.size(); ++b)
      out << fmt(h.bin_edges[b]) << ',' << fmt(h.bin_edges[b + 1]) << ','
          << fmt(h.relative_frequencies[b]) << '\n';
  }
  if (h.kde_present) {
    auto out = open_csv(dir / ("kde_" + metric + "_" + cls + ".csv"));
    out << "x,density\n";
    for (const auto& [x, density] : h.kde_grid)
      out << fmt(x) << ',' << fmt(density) << '\n';
  }
}

}  // namespace

void write_report_files(const SummaryReport& r, const std::string& out_dir) {
  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    auto out = open_csv(dir / "report.json");
    out << report_to_json(r).dump(2) << '\n';
  }
  {
    auto out = open_csv(dir / "odds_ratios.csv");
    out << "bigram,coef,odds_ratio,support\n";
    for (const auto& row : r.odds.rows) {
      // Bigrams may contain arbitrary text; quote and escape for CSV.
      std::string quoted = "\"";
      for (char c : row.bigram) {
        quoted += c;
        if (c == '"') quoted += '"';
      }
      quoted += '"';
      out << quoted << ',' << fmt(row.coefficient) << ',' << fmt(row.odds_ratio)
          << ',' << row.support << '\n';
    }
  }
  if (r.heatmap_general_present)
    write_heatmap_csv(r.heatmap_general, dir / "heatmap_general.csv");
  if (r.heatmap_zombie_present)
    write_heatmap_csv(r.heatmap_zombie, dir / "heatmap_zombie.csv");
  if (r.general.hists_present) {
    write_hist_csv(r.general.age_hist, dir, "age", "general");
    write_hist_csv(r.general.ppd_hist, dir, "ppd", "general");
    if (!r.general.ratio_hist.relative_frequencies.empty())
      write_hist_csv(r.general.ratio_hist, dir, "ratio", "general");
  }
  if (r.zombie.hists_present) {
    write_hist_csv(r.zombie.age_hist, dir, "age", "zombie");
    write_hist_csv(r.zombie.ppd_hist, dir, "ppd", "zombie");
    if (!r.zombie.ratio_hist.relative_frequencies.empty())
      write_hist_csv(r.zombie.ratio_hist, dir, "ratio", "zombie");
  }
}

}  // namespace zk
