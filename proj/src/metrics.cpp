#include "lteval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "lteval/error.hpp"

namespace lteval {

namespace {

void check_paired(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "vectors differ in length (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < min_len) {
    throw Error(min_len <= 1 ? ErrorCode::EmptyInput : ErrorCode::TooFewItems,
                "need at least " + std::to_string(min_len) + " items, got " + std::to_string(x.size()));
  }
}

int sign(double v) { return (v > 0) - (v < 0); }

struct PairCounts {
  double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
};

PairCounts count_pairs(std::span<const double> x, std::span<const double> y) {
  PairCounts c;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      if (sx == 0) c.ties_x += 1;
      if (sy == 0) c.ties_y += 1;
      if (sx * sy > 0) c.concordant += 1;
      if (sx * sy < 0) c.discordant += 1;
    }
  }
  return c;
}

std::vector<double> complete_values(const RatingVector& v) {
  std::vector<double> out;
  out.reserve(v.scores.size());
  for (const auto& s : v.scores) {
    if (!s) throw Error(ErrorCode::EmptyInput, "missing rating in paired metric for rater '" + v.rater + "'");
    out.push_back(*s);
  }
  return out;
}

void check_ids(const RatingVector& x, const RatingVector& y) {
  if (x.ids != y.ids) throw Error(ErrorCode::LengthMismatch, "rating vectors are not aligned on item ids");
}

}  // namespace

std::optional<double> RatingVector::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return scores[i];
  return std::nullopt;
}

Stat kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y, 2);
  const auto c = count_pairs(x, y);
  const double n = static_cast<double>(x.size());
  const double n0 = n * (n - 1) / 2;
  const double denom = (n0 - c.ties_x) * (n0 - c.ties_y);
  if (denom <= 0) return std::nullopt;
  return (c.concordant - c.discordant) / std::sqrt(denom);
}

Stat kendall_tau_a(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y, 2);
  const auto c = count_pairs(x, y);
  const double n = static_cast<double>(x.size());
  return (c.concordant - c.discordant) / (n * (n - 1) / 2);
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

Stat pearson_r(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y, 2);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Stat spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y, 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_r(rx, ry);
}

double mse(std::span<const double> x, std::span<const double> y) {
  check_paired(x, y, 1);
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
  return sum / static_cast<double>(x.size());
}

Stat kendall_tau_b(const RatingVector& x, const RatingVector& y) {
  check_ids(x, y);
  return kendall_tau_b(complete_values(x), complete_values(y));
}

Stat spearman_rho(const RatingVector& x, const RatingVector& y) {
  check_ids(x, y);
  return spearman_rho(complete_values(x), complete_values(y));
}

double mse(const RatingVector& x, const RatingVector& y) {
  check_ids(x, y);
  return mse(complete_values(x), complete_values(y));
}

// --- Krippendorff's alpha ------------------------------------------------------------

std::string_view to_string(AlphaLevel level) noexcept {
  switch (level) {
    case AlphaLevel::Nominal: return "nominal";
    case AlphaLevel::Ordinal: return "ordinal";
    case AlphaLevel::Interval: return "interval";
  }
  return "?";
}

AlphaLevel parse_alpha_level(std::string_view name) {
  for (auto l : {AlphaLevel::Nominal, AlphaLevel::Ordinal, AlphaLevel::Interval}) {
    if (iequals(name, to_string(l))) return l;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown alpha level '" + std::string(name) + "'");
}

CoincidenceMatrix coincidence_matrix(const RatingMatrix& ratings) {
  CoincidenceMatrix cm;
  if (ratings.size() < 2) throw Error(ErrorCode::InsufficientOverlap, "alpha needs at least two raters");
  const std::size_t n_items = ratings.front().size();
  for (const auto& row : ratings) {
    if (row.size() != n_items) throw Error(ErrorCode::LengthMismatch, "rating matrix rows differ in length");
  }

  std::vector<std::vector<double>> units;
  std::set<double> distinct;
  for (std::size_t u = 0; u < n_items; ++u) {
    std::vector<double> vals;
    for (const auto& row : ratings)
      if (row[u]) vals.push_back(*row[u]);
    if (vals.size() < 2) continue;
    distinct.insert(vals.begin(), vals.end());
    units.push_back(std::move(vals));
  }
  if (units.empty()) throw Error(ErrorCode::InsufficientOverlap, "no item has ratings from two raters");

  cm.values.assign(distinct.begin(), distinct.end());
  const std::size_t v = cm.values.size();
  cm.counts.assign(v, std::vector<double>(v, 0.0));
  auto index_of = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(cm.values.begin(), cm.values.end(), x) - cm.values.begin());
  };
  for (const auto& vals : units) {
    std::vector<double> tally(v, 0.0);
    for (double x : vals) tally[index_of(x)] += 1;
    const double weight = 1.0 / static_cast<double>(vals.size() - 1);
    for (std::size_t c = 0; c < v; ++c) {
      if (tally[c] == 0) continue;
      for (std::size_t k = 0; k < v; ++k) {
        const double pairs = c == k ? tally[c] * (tally[c] - 1) : tally[c] * tally[k];
        cm.counts[c][k] += pairs * weight;
      }
    }
  }
  cm.marginals.assign(v, 0.0);
  for (std::size_t c = 0; c < v; ++c) {
    cm.marginals[c] = std::accumulate(cm.counts[c].begin(), cm.counts[c].end(), 0.0);
    cm.total += cm.marginals[c];
  }
  return cm;
}

Stat krippendorff_alpha(const RatingMatrix& ratings, AlphaLevel level) {
  const auto cm = coincidence_matrix(ratings);
  const std::size_t v = cm.values.size();

  auto delta2 = [&](std::size_t c, std::size_t k) -> double {
    if (c == k) return 0.0;
    switch (level) {
      case AlphaLevel::Nominal: return 1.0;
      case AlphaLevel::Interval: {
        const double d = cm.values[c] - cm.values[k];
        return d * d;
      }
      case AlphaLevel::Ordinal: {
        const auto [lo, hi] = std::minmax(c, k);
        double s = 0;
        for (std::size_t g = lo; g <= hi; ++g) s += cm.marginals[g];
        s -= (cm.marginals[c] + cm.marginals[k]) / 2.0;
        return s * s;
      }
    }
    return 0.0;
  };

  double observed = 0, expected = 0;
  for (std::size_t c = 0; c < v; ++c) {
    for (std::size_t k = 0; k < v; ++k) {
      const double d = delta2(c, k);
      observed += cm.counts[c][k] * d;
      expected += cm.marginals[c] * cm.marginals[k] * d;
    }
  }
  if (expected <= 0) return std::nullopt;
  if (observed == 0) return 1.0;
  return 1.0 - (cm.total - 1.0) * observed / expected;
}

// --- Classification ----------------------------------------------------------------

std::vector<std::vector<double>> ClassificationReport::row_normalized() const {
  std::vector<std::vector<double>> out(confusion.size());
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    const double sum = static_cast<double>(std::accumulate(confusion[r].begin(), confusion[r].end(), std::size_t{0}));
    out[r].assign(confusion[r].size(), 0.0);
    if (sum == 0) continue;
    for (std::size_t c = 0; c < confusion[r].size(); ++c) out[r][c] = static_cast<double>(confusion[r][c]) / sum;
  }
  return out;
}

json ClassificationReport::to_json() const {
  json labels_json = json::array();
  for (const auto& m : per_label) {
    labels_json.push_back({{"label", m.label},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"predicted", m.predicted},
                           {"precision_undefined", m.precision_undefined},
                           {"recall_undefined", m.recall_undefined},
                           {"f1_undefined", m.f1_undefined}});
  }
  return json{{"labels", labels},       {"per_label", std::move(labels_json)}, {"accuracy", accuracy},
              {"macro_f1", macro_f1},   {"n", n},                              {"confusion", confusion}};
}

ClassificationReport per_label_prf(std::span<const std::string> gold, std::span<const std::string> pred,
                                   std::span<const std::string> label_set) {
  if (gold.size() != pred.size()) throw Error(ErrorCode::LengthMismatch, "gold and predicted lengths differ");
  ClassificationReport rep;
  rep.labels.assign(label_set.begin(), label_set.end());
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < rep.labels.size(); ++i) {
    if (!pos.emplace(rep.labels[i], i).second) {
      throw Error(ErrorCode::InvalidConfig, "label '" + rep.labels[i] + "' listed twice");
    }
  }
  const std::size_t L = rep.labels.size();
  rep.confusion.assign(L, std::vector<std::size_t>(L, 0));
  rep.n = gold.size();
  auto lookup = [&](const std::string& label) {
    auto it = pos.find(label);
    if (it == pos.end()) throw Error(ErrorCode::UnknownLabel, "label '" + label + "' not in label set");
    return it->second;
  };
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto g = lookup(gold[i]);
    const auto p = lookup(pred[i]);
    ++rep.confusion[g][p];
    if (g == p) ++correct;
  }
  rep.accuracy = rep.n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(rep.n);

  double f1_sum = 0;
  std::size_t f1_count = 0;
  for (std::size_t l = 0; l < L; ++l) {
    LabelMetrics m;
    m.label = rep.labels[l];
    const double tp = static_cast<double>(rep.confusion[l][l]);
    for (std::size_t k = 0; k < L; ++k) {
      m.support += rep.confusion[l][k];
      m.predicted += rep.confusion[k][l];
    }
    if (m.predicted == 0) {
      m.precision_undefined = true;
    } else {
      m.precision = tp / static_cast<double>(m.predicted);
    }
    if (m.support == 0) {
      m.recall_undefined = true;
    } else {
      m.recall = tp / static_cast<double>(m.support);
    }
    if (m.support == 0 && m.predicted == 0) {
      m.f1_undefined = true;
    } else {
      m.f1 = 2 * tp / static_cast<double>(m.support + m.predicted);
    }
    if (m.support > 0) {
      f1_sum += m.f1;
      ++f1_count;
    }
    rep.per_label.push_back(std::move(m));
  }
  rep.macro_f1 = f1_count == 0 ? 0.0 : f1_sum / static_cast<double>(f1_count);
  return rep;
}

ClassificationReport per_label_prf(std::span<const int> gold, std::span<const int> pred,
                                   std::span<const int> label_set) {
  auto conv = [](std::span<const int> v) {
    std::vector<std::string> out;
    out.reserve(v.size());
    for (int x : v) out.push_back(std::to_string(x));
    return out;
  };
  return per_label_prf(conv(gold), conv(pred), conv(label_set));
}

// --- Pairwise ------------------------------------------------------------------------

CommonItems common_items(const RatingVector& a, const RatingVector& b) {
  std::map<std::string, double> in_b;
  for (std::size_t i = 0; i < b.ids.size(); ++i)
    if (b.scores[i]) in_b.emplace(b.ids[i], *b.scores[i]);
  CommonItems out;
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    if (!a.scores[i]) continue;
    auto it = in_b.find(a.ids[i]);
    if (it == in_b.end()) continue;
    out.ids.push_back(a.ids[i]);
    out.a.push_back(*a.scores[i]);
    out.b.push_back(it->second);
  }
  return out;
}

namespace {

void add_pair(PairwiseResult& result, const RatingVector& a, const RatingVector& b, const PairMetric& metric) {
  auto common = common_items(a, b);
  if (common.ids.empty()) {
    throw Error(ErrorCode::NoCommonItems, "raters '" + a.rater + "' and '" + b.rater + "' share no items");
  }
  PairResult pr{a.rater, b.rater, common.ids.size(), metric(common.a, common.b)};
  if (!pr.value) ++result.skipped;
  result.pairs.push_back(std::move(pr));
}

void finish(PairwiseResult& result) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& p : result.pairs) {
    if (p.value) {
      sum += *p.value;
      ++n;
    }
  }
  if (n > 0) result.mean = sum / static_cast<double>(n);
}

}  // namespace

PairwiseResult pairwise_agreement(std::span<const RatingVector> raters, const PairMetric& metric) {
  if (raters.size() < 2) throw Error(ErrorCode::TooFewItems, "pairwise agreement needs at least two raters");
  PairwiseResult result;
  for (std::size_t i = 0; i < raters.size(); ++i)
    for (std::size_t j = i + 1; j < raters.size(); ++j) add_pair(result, raters[i], raters[j], metric);
  finish(result);
  return result;
}

PairwiseResult cross_agreement(std::span<const RatingVector> group_a, std::span<const RatingVector> group_b,
                               const PairMetric& metric) {
  if (group_a.empty() || group_b.empty()) throw Error(ErrorCode::TooFewItems, "cross agreement needs two groups");
  PairwiseResult result;
  for (const auto& a : group_a)
    for (const auto& b : group_b) add_pair(result, a, b, metric);
  finish(result);
  return result;
}

// --- Report ------------------------------------------------------------------------

json AgreementReport::to_json() const {
  auto stat = [](const Stat& s) { return s ? json(*s) : json("undefined"); };
  return json{{"tau", stat(tau)},         {"rho", stat(rho)},           {"mse", stat(mse)},
              {"alpha", stat(alpha)},     {"n_items", n_items},         {"n_raters", n_raters},
              {"skipped_pairs", skipped_pairs}};
}

AgreementReport agreement_report(std::span<const RatingVector> raters, AlphaLevel level, TauVariant tau) {
  AgreementReport rep;
  rep.n_raters = raters.size();
  PairMetric tau_fn = tau == TauVariant::B
                          ? PairMetric([](auto x, auto y) { return kendall_tau_b(x, y); })
                          : PairMetric([](auto x, auto y) { return kendall_tau_a(x, y); });
  auto safe = [](const PairMetric& m) {
    // Pairs with a single common item have no correlation.
    return PairMetric([m](std::span<const double> x, std::span<const double> y) -> Stat {
      if (x.size() < 2) return std::nullopt;
      return m(x, y);
    });
  };
  auto t = pairwise_agreement(raters, safe(tau_fn));
  auto r = pairwise_agreement(raters, safe([](auto x, auto y) { return spearman_rho(x, y); }));
  auto m = pairwise_agreement(raters, [](auto x, auto y) -> Stat { return mse(x, y); });
  rep.tau = t.mean;
  rep.rho = r.mean;
  rep.mse = m.mean;
  rep.skipped_pairs = t.skipped + r.skipped;

  std::vector<std::string> items;
  std::map<std::string, std::size_t> col;
  for (const auto& rv : raters) {
    for (const auto& id : rv.ids) {
      if (col.emplace(id, items.size()).second) items.push_back(id);
    }
  }
  rep.n_items = items.size();
  RatingMatrix matrix(raters.size(), std::vector<std::optional<double>>(items.size()));
  for (std::size_t i = 0; i < raters.size(); ++i) {
    for (std::size_t k = 0; k < raters[i].ids.size(); ++k) matrix[i][col[raters[i].ids[k]]] = raters[i].scores[k];
  }
  rep.alpha = krippendorff_alpha(matrix, level);
  return rep;
}

}  // namespace lteval
