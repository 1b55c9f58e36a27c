#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lteval/error.hpp"
#include "lteval/metrics.hpp"

using namespace lteval;

namespace {

constexpr double kTol = 1e-9;
const std::optional<double> N = std::nullopt;

// Brute-force references, written independently of the library.

std::optional<double> brute_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  long long c = 0, d = 0, tx = 0, ty = 0, n0 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      ++n0;
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ++tx;
      if (dy == 0) ++ty;
      if (dx * dy > 0) ++c;
      if (dx * dy < 0) ++d;
    }
  }
  const double denom = std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c - d) / denom;
}

std::vector<double> brute_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2.0;
  }
  return r;
}

std::optional<double> brute_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  if (vx <= 1e-12 || vy <= 1e-12) return std::nullopt;
  return cov / std::sqrt(vx * vy);
}

/// Krippendorff's alpha from the pairwise definition, no coincidence matrix.
std::optional<double> brute_alpha(const RatingMatrix& m, AlphaLevel level) {
  std::vector<std::vector<double>> units;
  for (std::size_t u = 0; u < m[0].size(); ++u) {
    std::vector<double> vals;
    for (const auto& row : m) {
      if (row[u]) vals.push_back(*row[u]);
    }
    if (vals.size() >= 2) units.push_back(vals);
  }
  std::vector<double> pooled;
  for (const auto& u : units) pooled.insert(pooled.end(), u.begin(), u.end());
  const double n = static_cast<double>(pooled.size());
  auto delta2 = [&](double a, double b) {
    if (level == AlphaLevel::Nominal) return a == b ? 0.0 : 1.0;
    if (level == AlphaLevel::Interval) return (a - b) * (a - b);
    const double lo = std::min(a, b), hi = std::max(a, b);
    double between = 0, na = 0, nb = 0;
    for (double v : pooled) {
      if (v >= lo && v <= hi) ++between;
      if (v == a) ++na;
      if (v == b) ++nb;
    }
    const double g = between - (na + nb) / 2.0;
    return g * g;
  };
  double d_o = 0;
  for (const auto& u : units) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) {
        if (i != j) d_o += delta2(u[i], u[j]) / static_cast<double>(u.size() - 1);
      }
    }
  }
  d_o /= n;
  double d_e = 0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = 0; j < pooled.size(); ++j) {
      if (i != j) d_e += delta2(pooled[i], pooled[j]);
    }
  }
  d_e /= n * (n - 1);
  if (d_e == 0) return std::nullopt;
  return 1.0 - d_o / d_e;
}

void expect_stat(const Stat& got, const std::optional<double>& want) {
  ASSERT_EQ(got.has_value(), want.has_value());
  if (want) EXPECT_NEAR(*got, *want, kTol);
}

}  // namespace

TEST(PairedStats, KnownValuesFromScipy) {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  EXPECT_NEAR(*kendall_tau_b(a, b), 0.6666666666666666, kTol);
  EXPECT_NEAR(*spearman_rho(a, b), 0.8, kTol);
  const std::vector<double> c{1, 1, 2}, d{1, 2, 2}, e{2, 1, 1};
  EXPECT_NEAR(*kendall_tau_b(c, d), 0.5, kTol);
  EXPECT_NEAR(*spearman_rho(c, e), -0.5, kTol);
}

TEST(PairedStats, TauAIgnoresTies) {
  const std::vector<double> c{1, 1, 2}, d{1, 2, 2};
  // concordant 1, discordant 0, 3 pairs
  EXPECT_NEAR(*kendall_tau_a(c, d), 1.0 / 3.0, kTol);
}

TEST(PairedStats, ConstantVectorIsUndefined) {
  const std::vector<double> a{3, 3, 3}, b{1, 2, 3};
  EXPECT_FALSE(kendall_tau_b(a, b).has_value());
  EXPECT_FALSE(spearman_rho(a, b).has_value());
  EXPECT_FALSE(pearson_r(a, b).has_value());
}

TEST(PairedStats, Errors) {
  const std::vector<double> a{1, 2}, b{1, 2, 3}, one{1};
  try {
    kendall_tau_b(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  try {
    spearman_rho(one, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewItems);
  }
  try {
    mse(std::span<const double>{}, std::span<const double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(PairedStats, MseAndRanks) {
  const std::vector<double> a{1, 2, 3}, b{2, 2, 5};
  EXPECT_NEAR(mse(a, b), (1.0 + 0.0 + 4.0) / 3.0, kTol);
  const std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(PairedStats, SymmetryAndBounds) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> score(1, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(12), y(12);
    for (auto& v : x) v = score(rng);
    for (auto& v : y) v = score(rng);
    auto t1 = kendall_tau_b(x, y), t2 = kendall_tau_b(y, x);
    auto r1 = spearman_rho(x, y), r2 = spearman_rho(y, x);
    ASSERT_EQ(t1.has_value(), t2.has_value());
    if (t1) {
      EXPECT_NEAR(*t1, *t2, kTol);
      EXPECT_LE(std::abs(*t1), 1.0 + kTol);
    }
    if (r1) {
      EXPECT_NEAR(*r1, *r2, kTol);
      EXPECT_LE(std::abs(*r1), 1.0 + kTol);
    }
    EXPECT_NEAR(mse(x, y), mse(y, x), kTol);
  }
}

TEST(PairedStats, RatingVectorsMustAlign) {
  RatingVector a{"a", {}, {}}, b{"b", {}, {}};
  a.add("x", 1);
  a.add("y", 2);
  b.add("y", 2);
  b.add("x", 1);
  EXPECT_THROW(kendall_tau_b(a, b), Error);
  const auto common = common_items(a, b);
  EXPECT_EQ(common.ids, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(common.b, (std::vector<double>{1, 2}));
}

TEST(PairedStats, ExhaustiveSmallVectorsMatchBruteForce) {
  // All pairs of vectors of length 2..5 over {1,2,3}.
  for (std::size_t n = 2; n <= 5; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    std::vector<std::vector<double>> all(total, std::vector<double>(n));
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= 3) all[code][i] = static_cast<double>(c % 3 + 1);
    }
    for (const auto& x : all) {
      for (const auto& y : all) {
        expect_stat(kendall_tau_b(x, y), brute_tau_b(x, y));
        expect_stat(spearman_rho(x, y), brute_pearson(brute_ranks(x), brute_ranks(y)));
      }
    }
  }
}

TEST(Alpha, PerfectAgreementIsExactlyOne) {
  const RatingMatrix m{{1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, {1, 2, N, 4, 5}};
  for (auto level : {AlphaLevel::Nominal, AlphaLevel::Ordinal, AlphaLevel::Interval}) {
    EXPECT_EQ(*krippendorff_alpha(m, level), 1.0);
  }
}

TEST(Alpha, NineItemTwoRaterFixture) {
  const RatingMatrix m{{1, 2, 3, 3, 2, 1, 4, 1, 2}, {1, 2, 3, 3, 2, 2, 4, 1, 2}};
  EXPECT_NEAR(*krippendorff_alpha(m, AlphaLevel::Nominal), 0.8521739130434782, kTol);
  EXPECT_NEAR(*krippendorff_alpha(m, AlphaLevel::Ordinal), 0.9229024943310657, kTol);
  EXPECT_NEAR(*krippendorff_alpha(m, AlphaLevel::Interval), 0.9427609427609428, kTol);
}

TEST(Alpha, PublishedReliabilityExample) {
  // Four observers, twelve units, with missing values.
  const RatingMatrix m{
      {1, 2, 3, 3, 2, 1, 4, 1, 2, N, N, N},
      {1, 2, 3, 3, 2, 2, 4, 1, 2, 5, N, 3},
      {N, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, N},
      {1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, N},
  };
  EXPECT_NEAR(*krippendorff_alpha(m, AlphaLevel::Nominal), 0.7434210526315791, kTol);
  EXPECT_NEAR(*krippendorff_alpha(m, AlphaLevel::Ordinal), 0.8153875037548814, kTol);
  EXPECT_NEAR(*krippendorff_alpha(m, AlphaLevel::Interval), 0.8491071428571428, kTol);
}

TEST(Alpha, RaterSkipsItems) {
  const RatingMatrix two{{1, 2, 3, 3, 2, 1, 4, 1, 2}, {1, 2, N, 3, 2, 2, 4, N, 2}};
  EXPECT_NEAR(*krippendorff_alpha(two, AlphaLevel::Nominal), 0.8, kTol);
  EXPECT_NEAR(*krippendorff_alpha(two, AlphaLevel::Ordinal), 0.8818611414031261, kTol);
  EXPECT_NEAR(*krippendorff_alpha(two, AlphaLevel::Interval), 0.9248554913294798, kTol);
  const RatingMatrix three{two[0], two[1], {N, 2, 3, 3, 1, 1, 4, 1, N}};
  EXPECT_NEAR(*krippendorff_alpha(three, AlphaLevel::Nominal), 0.7696335078534031, kTol);
  EXPECT_NEAR(*krippendorff_alpha(three, AlphaLevel::Ordinal), 0.8842917251051894, kTol);
  EXPECT_NEAR(*krippendorff_alpha(three, AlphaLevel::Interval), 0.917910447761194, kTol);
  // Items rated once do not count.
  EXPECT_EQ(*krippendorff_alpha(RatingMatrix{{1, 2, N}, {1, 2, 3}}, AlphaLevel::Nominal), 1.0);
}

TEST(Alpha, RandomMatricesMatchPairwiseDefinition) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> score(1, 5);
  std::bernoulli_distribution missing(0.25);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t raters = 2 + trial % 3, items = 4 + trial % 9;
    RatingMatrix m(raters, std::vector<std::optional<double>>(items));
    for (auto& row : m) {
      for (auto& v : row) {
        if (!missing(rng)) v = score(rng);
      }
    }
    for (auto level : {AlphaLevel::Nominal, AlphaLevel::Ordinal, AlphaLevel::Interval}) {
      std::optional<double> want;
      try {
        want = brute_alpha(m, level);
      } catch (...) {
        continue;
      }
      bool pairable = false;
      for (std::size_t u = 0; u < items; ++u) {
        int k = 0;
        for (const auto& row : m) k += row[u].has_value();
        pairable = pairable || k >= 2;
      }
      if (!pairable) {
        EXPECT_THROW(krippendorff_alpha(m, level), Error);
        continue;
      }
      expect_stat(krippendorff_alpha(m, level), want);
    }
  }
}

TEST(Alpha, UndefinedWithoutVariation) {
  const RatingMatrix m{{3, 3, 3}, {3, 3, 3}};
  for (auto level : {AlphaLevel::Nominal, AlphaLevel::Ordinal, AlphaLevel::Interval}) {
    EXPECT_FALSE(krippendorff_alpha(m, level).has_value());
  }
  EXPECT_THROW(krippendorff_alpha(RatingMatrix{{1, N}, {N, 2}}), Error);
  EXPECT_THROW(krippendorff_alpha(RatingMatrix{{1, 2}}), Error);
}

TEST(Alpha, CoincidenceMatrixMarginals) {
  const RatingMatrix m{{1, 2, 3, 3, 2, 1, 4, 1, 2}, {1, 2, 3, 3, 2, 2, 4, 1, 2}};
  const auto cm = coincidence_matrix(m);
  EXPECT_EQ(cm.values, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_DOUBLE_EQ(cm.total, 18.0);
  for (std::size_t c = 0; c < cm.values.size(); ++c) {
    double row = 0;
    for (double v : cm.counts[c]) row += v;
    EXPECT_DOUBLE_EQ(row, cm.marginals[c]);
  }
  EXPECT_DOUBLE_EQ(cm.counts[0][1], 1.0);
  EXPECT_DOUBLE_EQ(cm.counts[1][0], 1.0);
}

TEST(Alpha, ParseLevel) {
  EXPECT_EQ(parse_alpha_level("ordinal"), AlphaLevel::Ordinal);
  EXPECT_EQ(parse_alpha_level("Interval"), AlphaLevel::Interval);
  EXPECT_THROW(parse_alpha_level("ratio"), Error);
}

TEST(Classification, HandCountedFixture) {
  const std::vector<int> gold{1, 1, 2}, pred{1, 2, 2}, labels{1, 2};
  const auto rep = per_label_prf(gold, pred, labels);
  EXPECT_NEAR(rep.per_label[0].precision, 1.0, 1e-4);
  EXPECT_NEAR(rep.per_label[0].recall, 0.5, 1e-4);
  EXPECT_NEAR(rep.per_label[0].f1, 0.6667, 1e-4);
  EXPECT_NEAR(rep.per_label[1].precision, 0.5, 1e-4);
  EXPECT_NEAR(rep.per_label[1].recall, 1.0, 1e-4);
  EXPECT_NEAR(rep.per_label[1].f1, 0.6667, 1e-4);
  EXPECT_NEAR(rep.accuracy, 0.6667, 1e-4);
  EXPECT_EQ(rep.confusion, (std::vector<std::vector<std::size_t>>{{1, 1}, {0, 1}}));
}

TEST(Classification, UndefinedCells) {
  const std::vector<std::string> gold{"a", "a"}, pred{"a", "b"}, labels{"a", "b", "c"};
  const auto rep = per_label_prf(gold, pred, labels);
  // "b": predicted but never gold.
  EXPECT_TRUE(rep.per_label[1].recall_undefined);
  EXPECT_FALSE(rep.per_label[1].precision_undefined);
  EXPECT_FALSE(rep.per_label[1].f1_undefined);
  EXPECT_EQ(rep.per_label[1].f1, 0.0);
  // "c": absent everywhere.
  EXPECT_TRUE(rep.per_label[2].f1_undefined);
  EXPECT_TRUE(rep.per_label[2].precision_undefined);
  // Macro F1 only over labels with support.
  EXPECT_NEAR(rep.macro_f1, rep.per_label[0].f1, kTol);
  EXPECT_THROW(per_label_prf(std::vector<std::string>{"z"}, std::vector<std::string>{"a"}, labels), Error);
}

TEST(Classification, ConfusionMarginalsOnRandomFixtures) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> label(1, 5);
  std::uniform_int_distribution<int> len(1, 60);
  const std::vector<int> labels{1, 2, 3, 4, 5};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> gold(len(rng)), pred;
    for (auto& g : gold) g = label(rng);
    for (std::size_t i = 0; i < gold.size(); ++i) pred.push_back(label(rng));
    const auto rep = per_label_prf(gold, pred, labels);
    for (std::size_t l = 0; l < labels.size(); ++l) {
      const auto gold_count = static_cast<std::size_t>(std::count(gold.begin(), gold.end(), labels[l]));
      const auto pred_count = static_cast<std::size_t>(std::count(pred.begin(), pred.end(), labels[l]));
      std::size_t row = 0, col = 0;
      for (std::size_t k = 0; k < labels.size(); ++k) {
        row += rep.confusion[l][k];
        col += rep.confusion[k][l];
      }
      EXPECT_EQ(row, gold_count);
      EXPECT_EQ(col, pred_count);
      EXPECT_EQ(rep.per_label[l].support, gold_count);
    }
    const auto norm = rep.row_normalized();
    for (std::size_t l = 0; l < labels.size(); ++l) {
      double s = 0;
      for (double v : norm[l]) s += v;
      if (rep.per_label[l].support > 0) {
        EXPECT_NEAR(s, 1.0, 1e-12);
      } else {
        EXPECT_EQ(s, 0.0);
      }
    }
  }
}

TEST(Agreement, PairwiseMeansAndSkips) {
  RatingVector a{"a", {}, {}}, b{"b", {}, {}}, c{"c", {}, {}};
  for (int i = 0; i < 4; ++i) {
    a.add("i" + std::to_string(i), i + 1);
    b.add("i" + std::to_string(i), i + 1);
    c.add("i" + std::to_string(i), 3);  // constant: correlation undefined
  }
  const std::vector<RatingVector> raters{a, b, c};
  const auto res = pairwise_agreement(raters, [](auto x, auto y) { return kendall_tau_b(x, y); });
  EXPECT_EQ(res.pairs.size(), 3u);
  EXPECT_EQ(res.skipped, 2u);
  EXPECT_NEAR(*res.mean, 1.0, kTol);

  RatingVector d{"d", {}, {}};
  d.add("other", 1);
  const std::vector<RatingVector> disjoint{a, d};
  EXPECT_THROW(pairwise_agreement(disjoint, [](auto x, auto y) { return kendall_tau_b(x, y); }), Error);
}

TEST(Agreement, ReportOnMissingData) {
  RatingVector a{"a", {}, {}}, b{"b", {}, {}};
  const std::vector<double> av{1, 2, 3, 3, 2, 1, 4, 1, 2};
  const std::vector<std::optional<double>> bv{1, 2, N, 3, 2, 2, 4, N, 2};
  for (std::size_t i = 0; i < av.size(); ++i) {
    a.add("i" + std::to_string(i), av[i]);
    if (bv[i]) b.add("i" + std::to_string(i), bv[i]);
  }
  const std::vector<RatingVector> raters{a, b};
  const auto rep = agreement_report(raters, AlphaLevel::Nominal);
  EXPECT_EQ(rep.n_items, 9u);
  EXPECT_EQ(rep.n_raters, 2u);
  EXPECT_NEAR(*rep.alpha, 0.8, kTol);
  // Paired metrics use the 7 common items.
  const std::vector<double> x{1, 2, 3, 2, 1, 4, 2}, y{1, 2, 3, 2, 2, 4, 2};
  EXPECT_NEAR(*rep.tau, *brute_tau_b(x, y), kTol);
  EXPECT_NEAR(*rep.mse, 1.0 / 7.0, kTol);
  const auto j = rep.to_json();
  EXPECT_TRUE(j.contains("alpha"));
}
