#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lteval/metrics.hpp"
#include "lteval/ruler.hpp"
#include "lteval/scale.hpp"
#include "lteval/verse.hpp"

namespace lteval {

struct Cell {
  std::optional<double> percent;
  std::size_t n = 0;
};

/// RULER columns in table order: Hon., Syn., Lex., Con.
inline constexpr std::array<Criterion, 4> kTableCriteria = {Criterion::Honorifics, Criterion::SyntaxGrammar,
                                                            Criterion::LexicalChoice, Criterion::ContentAccuracy};

struct AggregateRow {
  std::string system_id;
  std::array<Cell, 4> ruler;  // kTableCriteria order
  std::array<Cell, kCategoryCount> verse;  // kCategories order
  Cell verse_mean;  // mean of the non-empty category cells; n = grades
  std::map<std::string, double> baselines;
  std::size_t ruler_failed = 0;
  std::size_t verse_failed = 0;
};

struct AggregateTable {
  std::vector<AggregateRow> rows;
  std::vector<std::string> baseline_columns;
  PercentMapping mapping = PercentMapping::MinMax;

  /// Percent cells with two decimals, followed by count columns.
  std::string to_csv() const;
  json to_json() const;
};

struct FailureCounts {
  std::map<std::string, std::size_t> ruler;  // by system_id
  std::map<std::string, std::size_t> verse;
};

/// Means of per-item percentages per system. VERSE grades are bucketed by
/// the top-1 category of their question. Throws EmptyRun when there is
/// nothing to aggregate.
AggregateTable aggregate_table(const std::vector<RubricScorecard>& scorecards, const std::vector<VerseGrade>& grades,
                               const std::vector<VerseQuestion>& questions,
                               PercentMapping mapping = PercentMapping::MinMax, const FailureCounts& failures = {});

/// Baseline metric columns, e.g. "system_id,COMET,BLEURT" with one row per
/// system. Values are appended to matching rows; unknown systems are warned
/// about and ignored.
std::map<std::string, std::map<std::string, double>> parse_baseline_csv(std::string_view csv);
void attach_baselines(AggregateTable& table, const std::map<std::string, std::map<std::string, double>>& baselines);

/// RFC 4180-ish field split (double quotes, doubled-quote escape).
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

struct RadarSeries {
  std::string name;
  std::vector<double> values;  // percent, one per axis
};

struct RadarOptions {
  std::string title;
  double axis_min = 40.0;
  int rings = 4;
};

struct RadarChart {
  std::string svg;
  std::vector<std::string> warnings;
};

/// Self-contained SVG radar chart. Values below axis_min are clamped to it
/// with a warning; values above 100 are rejected. Output bytes depend only
/// on the input.
RadarChart radar_svg(const std::vector<std::string>& axes, const std::vector<RadarSeries>& series,
                     const RadarOptions& options = {});

/// Confusion matrix as CSV: header "gold\pred,<labels...>", one row per gold label.
std::string confusion_csv(const ClassificationReport& report, bool normalized = false);

}  // namespace lteval
