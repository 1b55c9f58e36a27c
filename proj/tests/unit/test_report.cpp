#include <gtest/gtest.h>

#include "lteval/error.hpp"
#include "lteval/report.hpp"
#include "support.hpp"

using namespace lteval;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::Io;
}

RubricScorecard card(const std::string& sys, std::size_t index, std::array<int, 4> scores) {
  RubricScorecard c;
  c.system_id = sys;
  c.key = {"s0", index};
  c.scores = scores;
  return c;
}

std::vector<std::string> csv_row(const std::string& csv, std::size_t row) {
  return split_csv_line(split_lines(csv).at(row));
}

}  // namespace

TEST(Scale, Endpoints) {
  EXPECT_DOUBLE_EQ(to_percentage(5, kLikertScale), 100.0);
  EXPECT_DOUBLE_EQ(to_percentage(1, kLikertScale), 0.0);
  EXPECT_DOUBLE_EQ(to_percentage(3, kVerseScale), 100.0);
  EXPECT_DOUBLE_EQ(to_percentage(1, kVerseScale), 0.0);
  EXPECT_DOUBLE_EQ(to_percentage(2, kVerseScale), 50.0);
  EXPECT_DOUBLE_EQ(to_percentage(1, kLikertScale, PercentMapping::OverMax), 20.0);
  EXPECT_DOUBLE_EQ(to_percentage(3, kVerseScale, PercentMapping::OverMax), 100.0);
  EXPECT_EQ(code_of([] { to_percentage(0, kLikertScale); }), ErrorCode::ScaleViolation);
  EXPECT_EQ(code_of([] { to_percentage(4, kVerseScale); }), ErrorCode::ScaleViolation);
  EXPECT_EQ(code_of([] { to_percentage(1, ScoreScale{3, 3}); }), ErrorCode::ScaleViolation);
}

TEST(Scale, MeanOfPercentEqualsPercentOfMean) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> s(1 + rng() % 30);
    for (auto& v : s) v = 1 + static_cast<int>(rng() % 5);
    double mean_pct = 0, mean = 0;
    for (int v : s) {
      mean_pct += to_percentage(v, kLikertScale);
      mean += v;
    }
    mean_pct /= s.size();
    mean /= s.size();
    EXPECT_NEAR(mean_pct, to_percentage(mean, kLikertScale), 1e-9);
  }
}

TEST(Table, AllFivesAndAllOnes) {
  std::vector<RubricScorecard> cards;
  for (std::size_t i = 0; i < 4; ++i) {
    cards.push_back(card("top", i, {5, 5, 5, 5}));
    cards.push_back(card("bottom", i, {1, 1, 1, 1}));
  }
  std::vector<VerseQuestion> qs = {{"q1", {"s0", 0}, "?", Category::Imagery},
                                   {"q2", {"s0", 1}, "?", Category::NarrativePacing}};
  std::vector<VerseGrade> grades = {{"q1", "top", 3, "", ""}, {"q2", "top", 3, "", ""}, {"q1", "bottom", 1, "", ""}};
  const auto t = aggregate_table(cards, grades, qs, PercentMapping::MinMax, FailureCounts{{{"top", 2}}, {}});
  const auto csv = t.to_csv();
  const auto header = csv_row(csv, 0);
  EXPECT_EQ(header[0], "system_id");
  EXPECT_EQ(header[1], "honorifics");
  EXPECT_EQ(header[2], "syntax");
  EXPECT_EQ(header[5], "Hist.");
  EXPECT_EQ(header[14], "verse_mean");
  const auto top = csv_row(csv, 1);
  const auto bottom = csv_row(csv, 2);
  EXPECT_EQ(top[0], "top");
  for (int i = 1; i <= 4; ++i) {
    EXPECT_EQ(top[i], "100.00");
    EXPECT_EQ(bottom[i], "0.00");
  }
  EXPECT_EQ(top[6], "100.00");   // Img.
  EXPECT_EQ(top[5], "");         // Hist. has no grades
  EXPECT_EQ(top[14], "100.00");
  EXPECT_EQ(bottom[14], "0.00");
  EXPECT_EQ(top[header.size() - 2], "2");  // ruler_failed
  EXPECT_EQ(top[15], "4");
  EXPECT_EQ(t.rows[0].verse_mean.n, 2u);
}

TEST(Table, VerseMeanIsOverFilledCategories) {
  std::vector<VerseQuestion> qs = {{"a", {"s0", 0}, "?", Category::Imagery},
                                   {"b", {"s0", 0}, "?", Category::Imagery},
                                   {"c", {"s0", 0}, "?", Category::CharacterVoice}};
  std::vector<VerseGrade> g = {{"a", "x", 3, "", ""}, {"b", "x", 3, "", ""}, {"c", "x", 1, "", ""}};
  const auto t = aggregate_table({}, g, qs);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(*t.rows[0].verse_mean.percent, 50.0);
  EXPECT_FALSE(t.rows[0].ruler[0].percent);
  EXPECT_EQ(code_of([] { aggregate_table({}, {}, {}); }), ErrorCode::EmptyRun);
  auto bad = qs;
  bad[2].category.reset();
  EXPECT_EQ(code_of([&] { aggregate_table({}, g, bad); }), ErrorCode::UnclassifiedQuestion);
}

TEST(Table, OverMaxMapping) {
  const auto t = aggregate_table({card("x", 0, {1, 2, 3, 4})}, {}, {}, PercentMapping::OverMax);
  EXPECT_DOUBLE_EQ(*t.rows[0].ruler[0].percent, 20.0);  // honorifics
  EXPECT_DOUBLE_EQ(*t.rows[0].ruler[1].percent, 60.0);  // syntax
  EXPECT_DOUBLE_EQ(*t.rows[0].ruler[2].percent, 40.0);  // lexical
  EXPECT_EQ(t.to_json()["mapping"], "over-max");
}

TEST(Csv, SplitAndEscape) {
  EXPECT_EQ(split_csv_line(R"(a,"b,c","say ""hi""",)"), (std::vector<std::string>{"a", "b,c", "say \"hi\"", ""}));
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("q\"x"), "\"q\"\"x\"");
  EXPECT_EQ(split_csv_line(csv_escape("x, \"y\"")), (std::vector<std::string>{"x, \"y\""}));
}

TEST(Csv, Baselines) {
  const auto b = parse_baseline_csv("system_id,COMET,BLEURT\nx,0.81,\nghost,0.5,0.6\n");
  EXPECT_DOUBLE_EQ(b.at("x").at("COMET"), 0.81);
  EXPECT_FALSE(b.at("x").count("BLEURT"));
  auto t = aggregate_table({card("x", 0, {5, 5, 5, 5})}, {}, {});
  std::vector<std::string> warnings;
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  attach_baselines(t, b);
  set_warning_sink(nullptr);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(t.baseline_columns, (std::vector<std::string>{"COMET"}));
  EXPECT_EQ(csv_row(t.to_csv(), 1)[15], "0.8100");
  EXPECT_EQ(code_of([] { parse_baseline_csv("model,COMET\nx,1\n"); }), ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_baseline_csv("system_id,COMET\nx,abc\n"); }), ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([] { parse_baseline_csv("system_id,COMET\nx,1,2\n"); }), ErrorCode::MalformedRecord);
}

TEST(Radar, DeterministicAndValidated) {
  const std::vector<std::string> axes = {"Hist.", "Img.", "Char.", "Comm."};
  const std::vector<RadarSeries> series = {{"A", {80, 90, 100, 55}}, {"B & co", {41, 60, 70, 30}}};
  const auto a = radar_svg(axes, series, {"Title <x>"});
  const auto b = radar_svg(axes, series, {"Title <x>"});
  EXPECT_EQ(a.svg, b.svg);
  EXPECT_EQ(a.svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(a.svg.find("B &amp; co"), std::string::npos);
  EXPECT_NE(a.svg.find("Title &lt;x&gt;"), std::string::npos);
  EXPECT_EQ(a.svg.find("B & co"), std::string::npos);
  ASSERT_EQ(a.warnings.size(), 1u);  // 30 < 40
  EXPECT_NE(a.warnings[0].find("B & co"), std::string::npos);

  RadarOptions zero;
  zero.axis_min = 0;
  EXPECT_TRUE(radar_svg(axes, series, zero).warnings.empty());
  EXPECT_NE(radar_svg(axes, series, zero).svg, a.svg);

  EXPECT_EQ(code_of([&] { radar_svg({"a", "b"}, {{"A", {1, 2}}}); }), ErrorCode::TooFewAxes);
  EXPECT_EQ(code_of([&] { radar_svg(axes, {{"A", {1, 2, 3}}}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { radar_svg(axes, {{"A", {50, 50, 50, 100.5}}}); }), ErrorCode::ValueAboveMaximum);
  RadarOptions bad;
  bad.axis_min = 100;
  EXPECT_EQ(code_of([&] { radar_svg(axes, series, bad); }), ErrorCode::InvalidConfig);
}

TEST(Confusion, CsvLayout) {
  const std::vector<std::string> gold = {"a", "a", "b", "b", "b"};
  const std::vector<std::string> pred = {"a", "b", "b", "b", "a"};
  const std::vector<std::string> labels = {"a", "b", "c"};
  const auto rep = per_label_prf(gold, pred, labels);
  EXPECT_EQ(confusion_csv(rep), "gold\\pred,a,b,c\na,1,1,0\nb,1,2,0\nc,0,0,0\n");
  EXPECT_EQ(confusion_csv(rep, true),
            "gold\\pred,a,b,c\na,0.5000,0.5000,0.0000\nb,0.3333,0.6667,0.0000\nc,0.0000,0.0000,0.0000\n");
}
