#include "lteval/report.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "lteval/error.hpp"

namespace lteval {

namespace {

std::string cell_text(const Cell& c) { return c.percent ? format_fixed(*c.percent, 2) : ""; }

json cell_json(const Cell& c) {
  return json{{"percent", c.percent ? json(*c.percent) : json(nullptr)}, {"n", c.n}};
}

struct Accum {
  double sum = 0;
  std::size_t n = 0;
  Cell cell() const {
    Cell c;
    c.n = n;
    if (n > 0) c.percent = sum / static_cast<double>(n);
    return c;
  }
};

}  // namespace

std::string AggregateTable::to_csv() const {
  std::string out = "system_id";
  for (auto c : kTableCriteria) out += "," + std::string(criterion_key(c));
  for (auto c : kCategories) out += "," + csv_escape(category_short(c));
  out += ",verse_mean";
  for (const auto& b : baseline_columns) out += "," + csv_escape(b);
  for (auto c : kTableCriteria) out += ",n_" + std::string(criterion_key(c));
  out += ",n_verse,ruler_failed,verse_failed\n";
  for (const auto& row : rows) {
    out += csv_escape(row.system_id);
    for (const auto& c : row.ruler) out += "," + cell_text(c);
    for (const auto& c : row.verse) out += "," + cell_text(c);
    out += "," + cell_text(row.verse_mean);
    for (const auto& b : baseline_columns) {
      auto it = row.baselines.find(b);
      out += "," + (it == row.baselines.end() ? std::string() : format_fixed(it->second, 4));
    }
    for (const auto& c : row.ruler) out += "," + std::to_string(c.n);
    out += "," + std::to_string(row.verse_mean.n) + "," + std::to_string(row.ruler_failed) + "," +
           std::to_string(row.verse_failed) + "\n";
  }
  return out;
}

json AggregateTable::to_json() const {
  json rows_json = json::array();
  for (const auto& row : rows) {
    json ruler = json::object();
    for (std::size_t i = 0; i < kTableCriteria.size(); ++i) {
      ruler[std::string(criterion_key(kTableCriteria[i]))] = cell_json(row.ruler[i]);
    }
    json verse = json::object();
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
      verse[std::string(category_label(kCategories[i]))] = cell_json(row.verse[i]);
    }
    rows_json.push_back({{"system_id", row.system_id},
                         {"ruler", std::move(ruler)},
                         {"verse", std::move(verse)},
                         {"verse_mean", cell_json(row.verse_mean)},
                         {"baselines", row.baselines},
                         {"ruler_failed", row.ruler_failed},
                         {"verse_failed", row.verse_failed}});
  }
  return json{{"mapping", mapping == PercentMapping::MinMax ? "min-max" : "over-max"},
              {"baseline_columns", baseline_columns},
              {"rows", std::move(rows_json)}};
}

AggregateTable aggregate_table(const std::vector<RubricScorecard>& scorecards, const std::vector<VerseGrade>& grades,
                               const std::vector<VerseQuestion>& questions, PercentMapping mapping,
                               const FailureCounts& failures) {
  if (scorecards.empty() && grades.empty()) {
    throw Error(ErrorCode::EmptyRun, "no completed scorecards or grades to aggregate");
  }
  std::vector<std::string> systems;
  std::set<std::string> seen;
  auto note = [&](const std::string& s) {
    if (seen.insert(s).second) systems.push_back(s);
  };
  for (const auto& c : scorecards) note(c.system_id);
  for (const auto& g : grades) note(g.system_id);

  std::map<std::string, const VerseQuestion*> by_id;
  for (const auto& q : questions) by_id[q.question_id] = &q;

  std::map<std::string, std::array<Accum, 4>> ruler;
  std::map<std::string, std::array<Accum, kCategoryCount>> verse;
  for (const auto& card : scorecards) {
    auto& acc = ruler[card.system_id];
    for (std::size_t i = 0; i < kTableCriteria.size(); ++i) {
      acc[i].sum += to_percentage(card.score(kTableCriteria[i]), kLikertScale, mapping);
      ++acc[i].n;
    }
  }
  for (const auto& g : grades) {
    auto it = by_id.find(g.question_id);
    if (it == by_id.end()) throw Error(ErrorCode::UnknownItem, "grade for unknown question " + g.question_id);
    if (!it->second->category) {
      throw Error(ErrorCode::UnclassifiedQuestion, "grade references unclassified question " + g.question_id);
    }
    auto& acc = verse[g.system_id][static_cast<std::size_t>(*it->second->category)];
    acc.sum += to_percentage(g.score, kVerseScale, mapping);
    ++acc.n;
  }

  AggregateTable table;
  table.mapping = mapping;
  for (const auto& sys : systems) {
    AggregateRow row;
    row.system_id = sys;
    if (auto it = ruler.find(sys); it != ruler.end()) {
      for (std::size_t i = 0; i < 4; ++i) row.ruler[i] = it->second[i].cell();
    }
    if (auto it = verse.find(sys); it != verse.end()) {
      double sum = 0;
      std::size_t filled = 0;
      for (std::size_t i = 0; i < kCategoryCount; ++i) {
        row.verse[i] = it->second[i].cell();
        row.verse_mean.n += row.verse[i].n;
        if (row.verse[i].percent) {
          sum += *row.verse[i].percent;
          ++filled;
        }
      }
      if (filled > 0) row.verse_mean.percent = sum / static_cast<double>(filled);
    }
    if (auto it = failures.ruler.find(sys); it != failures.ruler.end()) row.ruler_failed = it->second;
    if (auto it = failures.verse.find(sys); it != failures.verse.end()) row.verse_failed = it->second;
    table.rows.push_back(std::move(row));
  }
  return table;
}

// --- CSV ---------------------------------------------------------------------------

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::map<std::string, std::map<std::string, double>> parse_baseline_csv(std::string_view csv) {
  std::map<std::string, std::map<std::string, double>> out;
  auto lines = split_lines(csv);
  std::vector<std::string> header;
  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    for (auto& f : fields) f = trim(f);
    if (header.empty()) {
      header = std::move(fields);
      if (header.size() < 2 || header[0] != "system_id") {
        throw Error(ErrorCode::MalformedRecord, "baseline CSV must start with a system_id column");
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedRecord, "baseline CSV line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(header.size()) + " fields");
    }
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) continue;
      try {
        std::size_t used = 0;
        double v = std::stod(fields[i], &used);
        if (used != fields[i].size()) throw std::invalid_argument("trailing text");
        out[fields[0]][header[i]] = v;
      } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedRecord,
                    "baseline CSV line " + std::to_string(line_no) + ": bad number '" + fields[i] + "'");
      }
    }
  }
  return out;
}

void attach_baselines(AggregateTable& table, const std::map<std::string, std::map<std::string, double>>& baselines) {
  std::set<std::string> columns(table.baseline_columns.begin(), table.baseline_columns.end());
  for (const auto& [sys, metrics] : baselines) {
    auto row = std::find_if(table.rows.begin(), table.rows.end(),
                            [&](const AggregateRow& r) { return r.system_id == sys; });
    if (row == table.rows.end()) {
      warn("baseline scores for unknown system '" + sys + "' ignored");
      continue;
    }
    for (const auto& [metric, value] : metrics) {
      row->baselines[metric] = value;
      if (columns.insert(metric).second) table.baseline_columns.push_back(metric);
    }
  }
}

std::string confusion_csv(const ClassificationReport& report, bool normalized) {
  std::string out = "gold\\pred";
  for (const auto& l : report.labels) out += "," + csv_escape(l);
  out += "\n";
  const auto norm = report.row_normalized();
  for (std::size_t r = 0; r < report.labels.size(); ++r) {
    out += csv_escape(report.labels[r]);
    for (std::size_t c = 0; c < report.labels.size(); ++c) {
      out += "," + (normalized ? format_fixed(norm[r][c], 4) : std::to_string(report.confusion[r][c]));
    }
    out += "\n";
  }
  return out;
}

// --- Radar -----------------------------------------------------------------------------

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

std::string num(double v) { return format_fixed(v, 2); }

}  // namespace

RadarChart radar_svg(const std::vector<std::string>& axes, const std::vector<RadarSeries>& series,
                     const RadarOptions& options) {
  if (axes.size() < 3) throw Error(ErrorCode::TooFewAxes, "radar chart needs at least 3 axes");
  if (!(options.axis_min >= 0.0 && options.axis_min < 100.0)) {
    throw Error(ErrorCode::InvalidConfig, "axis_min must be in [0, 100)");
  }
  RadarChart chart;
  const double cx = 300, cy = 300, radius = 200;
  const double width = 820, height = 620;
  const std::size_t n = axes.size();
  auto angle = [&](std::size_t i) {
    return -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
  };
  auto point = [&](std::size_t i, double r) {
    return num(cx + r * std::cos(angle(i))) + "," + num(cy + r * std::sin(angle(i)));
  };
  auto scaled = [&](double v) { return radius * (v - options.axis_min) / (100.0 - options.axis_min); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
       "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\" font-family=\"sans-serif\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    s += "<text x=\"" + num(cx) + "\" y=\"40.00\" font-size=\"18\" text-anchor=\"middle\">" +
         xml_escape(options.title) + "</text>\n";
  }

  s += "<g class=\"grid\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\">\n";
  const int rings = std::max(1, options.rings);
  for (int k = 1; k <= rings; ++k) {
    const double r = radius * k / rings;
    std::string pts;
    for (std::size_t i = 0; i < n; ++i) pts += (i ? " " : "") + point(i, r);
    s += "<polygon points=\"" + pts + "\"/>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(cy) + "\" x2=\"" + num(cx + radius * std::cos(angle(i))) +
         "\" y2=\"" + num(cy + radius * std::sin(angle(i))) + "\"/>\n";
  }
  s += "</g>\n";

  s += "<g class=\"ring-labels\" font-size=\"10\" fill=\"#888888\">\n";
  for (int k = 0; k <= rings; ++k) {
    const double value = options.axis_min + (100.0 - options.axis_min) * k / rings;
    s += "<text x=\"" + num(cx + 4) + "\" y=\"" + num(cy - radius * k / rings - 2) + "\">" +
         format_fixed(value, 0) + "%</text>\n";
  }
  s += "</g>\n";

  s += "<g class=\"axis-labels\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = cx + (radius + 18) * std::cos(angle(i));
    const double ly = cy + (radius + 18) * std::sin(angle(i));
    const double c = std::cos(angle(i));
    const char* anchor = std::abs(c) < 1e-6 ? "middle" : (c > 0 ? "start" : "end");
    s += "<text x=\"" + num(lx) + "\" y=\"" + num(ly + 4) + "\" text-anchor=\"" + anchor + "\">" +
         xml_escape(axes[i]) + "</text>\n";
  }
  s += "</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& ser = series[k];
    if (ser.values.size() != n) {
      throw Error(ErrorCode::LengthMismatch, "series '" + ser.name + "' has " + std::to_string(ser.values.size()) +
                                                 " values for " + std::to_string(n) + " axes");
    }
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < n; ++i) {
      double v = ser.values[i];
      if (std::isnan(v)) throw Error(ErrorCode::InvalidConfig, "series '" + ser.name + "' has a NaN value");
      if (v > 100.0) {
        throw Error(ErrorCode::ValueAboveMaximum,
                    "series '" + ser.name + "' value " + num(v) + " on axis '" + axes[i] + "' exceeds 100");
      }
      if (v < options.axis_min) {
        chart.warnings.push_back("series '" + ser.name + "' value " + num(v) + " on axis '" + axes[i] +
                                 "' clamped to " + num(options.axis_min));
        v = options.axis_min;
      }
      pts += (i ? " " : "") + point(i, scaled(v));
    }
    s += "<polygon class=\"series\" data-series=\"" + xml_escape(ser.name) + "\" points=\"" + pts +
         "\" fill=\"" + color + "\" fill-opacity=\"0.12\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
  }

  s += "<g class=\"legend\" font-size=\"12\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = 80 + 22.0 * static_cast<double>(k);
    const char* color = kPalette[k % std::size(kPalette)];
    s += "<rect x=\"600.00\" y=\"" + num(y - 10) + "\" width=\"14.00\" height=\"14.00\" fill=\"" + color +
         "\"/>\n";
    s += "<text x=\"620.00\" y=\"" + num(y + 2) + "\">" + xml_escape(series[k].name) + "</text>\n";
  }
  s += "</g>\n</svg>\n";
  chart.svg = std::move(s);
  return chart;
}

}  // namespace lteval
