#pragma once

// Quantitative characterization of the account population: behavioral
// statistics, agreement, profile bigram odds ratios, activity heatmaps, and
// the aggregated summary report.

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

// (reference - created_at) in real days; throws if created_at > reference.
double account_age_days(const AccountRecord& a, UtcSeconds reference);

// total_posts / max(age_days, 1.0).
double posts_per_day(const AccountRecord& a, UtcSeconds reference);

struct HistogramKde {
  std::vector<double> bin_edges;             // n_bins + 1 (or {v, v} degenerate)
  std::vector<double> relative_frequencies;  // sums to 1
  std::vector<std::pair<double, double>> kde_grid;  // (x, density)
  double bandwidth = 0.0;
  // False when all values are identical (KDE omitted by contract).
  bool kde_present = false;
};

// Equal-width bins over [min, max]; Gaussian KDE with Silverman bandwidth
// h = 0.9 * min(sigma, IQR/1.34) * n^(-1/5) (sigma alone when IQR is 0).
// Throws on empty input or n_bins < 1.
HistogramKde histogram_kde(const std::vector<double>& values, int n_bins);

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;  // two-sided
};

// Welch's t with Welch-Satterthwaite df. Requires >= 2 values per sample.
// Both variances zero with equal means -> t=0, p=1, df = nx+ny-2 (documented
// special case); any other zero variance throws.
TTestResult welch_t_test(const std::vector<double>& x,
                         const std::vector<double>& y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares; throws when sizes mismatch, n < 2, or x constant.
LinearFit linear_fit(const std::vector<double>& x,
                     const std::vector<double>& y);

struct FfRatios {
  std::vector<double> ratios;  // following / followers, account order
  std::int64_t excluded = 0;   // accounts with followers_count = 0
};

FfRatios ff_ratios(const std::vector<AccountRecord>& accounts);

struct OddsRatioRow {
  std::string bigram;
  double coefficient = 0.0;
  double odds_ratio = 1.0;     // exp(coefficient)
  std::int64_t support = 0;    // documents containing the bigram
};

struct OddsRatioTable {
  std::vector<OddsRatioRow> rows;  // descending odds_ratio, ties by bigram
  double regularization_strength = 0.0;
  bool converged = false;
  std::int64_t n_documents = 0;
};

// Word bigrams (adjacent tokenizer tokens joined by one space) as binary
// presence features; one multivariate logistic regression with Zombie = 1.
// Throws unless both labels occur. No bigram at min_support -> empty table.
OddsRatioTable bigram_odds_ratios(
    const std::vector<std::pair<std::string, Label>>& profiles,
    std::int64_t min_support, double l2_strength,
    const LogregOptions& solver = {},
    const TokenizerConfig& tok = {});

struct HeatmapZ {
  // Rows Mon..Sun, columns local hour 0..23.
  std::array<std::array<double, 24>, 7> cells{};
  std::array<std::array<std::int64_t, 24>, 7> counts{};
  int timezone_offset_minutes = 540;
};

// Counts per local (day-of-week, hour); z-standardized over all 168 cells
// with the population std. All counts equal -> all cells 0. Throws on empty
// input.
HeatmapZ activity_heatmap(const std::vector<UtcSeconds>& timestamps,
                          int tz_offset_minutes);

struct FleissKappa {
  double kappa = 0.0;
  // False when expected agreement is 1 (all mass in one category); kappa is
  // NaN then.
  bool defined = false;
};

// votes: N rows of k category counts, each row summing to raters_per_item.
FleissKappa fleiss_kappa(const std::vector<std::vector<std::int64_t>>& votes,
                         std::int64_t raters_per_item);

// ---------------------------------------------------------------------------
// Aggregated report

struct ReportOptions {
  int tz_offset_minutes = 540;  // JST
  int n_bins = 30;
  int top_n_bigrams = 25;
  std::int64_t min_support = 5;
  double l2 = 1e-4;
};

struct ClassAccountStats {
  std::int64_t n_accounts = 0;
  double mean_posts_per_day = 0.0;
  double mean_age_days = 0.0;
  double mean_ff_ratio = 0.0;
  std::int64_t ff_excluded = 0;
  double share_posts_over_10k = 0.0;
  double share_age_under_500 = 0.0;
  double share_age_over_1800 = 0.0;
  std::int64_t flag_non_japanese_name = 0;
  std::int64_t flag_verified = 0;
  std::int64_t flag_non_japanese_profile = 0;
  bool hists_present = false;
  HistogramKde age_hist, ppd_hist, ratio_hist;
};

struct SummaryReport {
  ClassAccountStats general, zombie;
  std::int64_t n_accounts_unlabeled = 0;
  std::int64_t n_pairs_general = 0, n_pairs_zombie = 0,
               n_pairs_unlabeled = 0;

  bool tests_present = false;
  TTestResult posts_per_day_test, ff_ratio_test, age_under_500_test;

  bool kappa_present = false;
  FleissKappa kappa;
  std::int64_t kappa_items = 0;

  OddsRatioTable odds;

  bool heatmap_general_present = false, heatmap_zombie_present = false;
  HeatmapZ heatmap_general, heatmap_zombie;

  std::vector<std::string> warnings;
  ReportOptions options;
};

// Pure aggregation; per-account age reference is its own snapshot_at. Missing
// classes degrade to partial output with warnings, never an error.
SummaryReport summary_report(const std::vector<AccountRecord>& accounts,
                             const std::vector<ReplyPair>& pairs,
                             const ReportOptions& options = {});

// Scalar statistics + odds table of the report as one JSON document.
nlohmann::json report_to_json(const SummaryReport& r);

// report.json plus CSV tables (heatmap_<class>.csv with day,hour,count,z;
// hist_<metric>_<class>.csv with bin_lo,bin_hi,freq; kde_<metric>_<class>.csv
// with x,density; odds_ratios.csv). Deterministic bytes for equal inputs.
void write_report_files(const SummaryReport& r, const std::string& out_dir);

}  // namespace zk
