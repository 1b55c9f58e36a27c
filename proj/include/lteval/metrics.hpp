#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lteval/util.hpp"

namespace lteval {

/// A statistic that may be undefined (e.g. correlation of a constant vector).
using Stat = std::optional<double>;

/// Ratings from one rater, aligned with `ids`. Missing ratings are allowed
/// only where a metric accepts them (Krippendorff's alpha).
struct RatingVector {
  std::string rater;
  std::vector<std::string> ids;
  std::vector<std::optional<double>> scores;

  void add(std::string id, std::optional<double> score) {
    ids.push_back(std::move(id));
    scores.push_back(score);
  }
  std::optional<double> find(const std::string& id) const;
};

// Paired statistics over complete vectors of equal length.
Stat kendall_tau_b(std::span<const double> x, std::span<const double> y);
/// Tie-naive variant (C - D) / n0, kept for replication experiments.
Stat kendall_tau_a(std::span<const double> x, std::span<const double> y);
Stat spearman_rho(std::span<const double> x, std::span<const double> y);
Stat pearson_r(std::span<const double> x, std::span<const double> y);
double mse(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

// RatingVector overloads: ids must match position by position.
Stat kendall_tau_b(const RatingVector& x, const RatingVector& y);
Stat spearman_rho(const RatingVector& x, const RatingVector& y);
double mse(const RatingVector& x, const RatingVector& y);

enum class AlphaLevel { Nominal, Ordinal, Interval };
std::string_view to_string(AlphaLevel level) noexcept;
AlphaLevel parse_alpha_level(std::string_view name);

/// Rows are raters, columns are items; nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<double>>>;

/// Coincidence matrix over the sorted distinct pairable values.
struct CoincidenceMatrix {
  std::vector<double> values;
  std::vector<std::vector<double>> counts;  // counts[c][k]
  std::vector<double> marginals;            // n_c
  double total = 0.0;                       // n
};
CoincidenceMatrix coincidence_matrix(const RatingMatrix& ratings);

/// Krippendorff's alpha via the coincidence matrix. Items with fewer than two
/// ratings are dropped. Undefined (nullopt) when expected disagreement is 0.
/// Throws InsufficientOverlap when no item has two ratings.
Stat krippendorff_alpha(const RatingMatrix& ratings, AlphaLevel level = AlphaLevel::Ordinal);

struct LabelMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
  std::size_t predicted = 0;
  bool precision_undefined = false;  // nothing predicted with this label
  bool recall_undefined = false;     // zero support
  bool f1_undefined = false;        // label absent from both gold and pred
};

struct ClassificationReport {
  std::vector<std::string> labels;
  std::vector<LabelMetrics> per_label;
  double accuracy = 0.0;
  double macro_f1 = 0.0;  // over labels with non-zero support
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]

  /// Rows divided by their sums; empty rows stay zero.
  std::vector<std::vector<double>> row_normalized() const;
  json to_json() const;
};

ClassificationReport per_label_prf(std::span<const std::string> gold, std::span<const std::string> pred,
                                   std::span<const std::string> label_set);
ClassificationReport per_label_prf(std::span<const int> gold, std::span<const int> pred,
                                   std::span<const int> label_set);

/// Values restricted to the ids both raters scored, in `a`'s order.
struct CommonItems {
  std::vector<std::string> ids;
  std::vector<double> a;
  std::vector<double> b;
};
CommonItems common_items(const RatingVector& a, const RatingVector& b);

using PairMetric = std::function<Stat(std::span<const double>, std::span<const double>)>;

struct PairResult {
  std::string rater_a;
  std::string rater_b;
  std::size_t n_common = 0;
  Stat value;
};

struct PairwiseResult {
  Stat mean;  // over pairs with a defined value
  std::size_t skipped = 0;  // pairs whose metric was undefined
  std::vector<PairResult> pairs;
};

/// Metric per unordered rater pair on common items, then the mean.
/// Throws NoCommonItems if some pair shares no item.
PairwiseResult pairwise_agreement(std::span<const RatingVector> raters, const PairMetric& metric);
/// Every (a, b) with a from `group_a` and b from `group_b`.
PairwiseResult cross_agreement(std::span<const RatingVector> group_a, std::span<const RatingVector> group_b,
                               const PairMetric& metric);

struct AgreementReport {
  Stat tau;
  Stat rho;
  Stat mse;
  Stat alpha;
  std::size_t n_items = 0;
  std::size_t n_raters = 0;
  std::size_t skipped_pairs = 0;

  json to_json() const;
};

enum class TauVariant { B, A };

/// tau, rho and MSE averaged over rater pairs; alpha over all raters.
AgreementReport agreement_report(std::span<const RatingVector> raters, AlphaLevel level = AlphaLevel::Ordinal,
                                 TauVariant tau = TauVariant::B);

}  // namespace lteval
