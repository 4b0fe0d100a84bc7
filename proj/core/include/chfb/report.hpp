#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/evaluation.hpp"

namespace chfb {

/// Shortest round-trip decimal form; identical on every run.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

void write_case_report_csv(std::ostream& out, const CaseReport& report);
nlohmann::json to_json(const CaseReport& report);
void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions);
void write_roc_csv(std::ostream& out, const RocCurve& curve);
void write_ann_series_csv(std::ostream& out, const AnnEvalSeries& series);
nlohmann::json to_json(const AnnEvalSeries& series);

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series);
/// Grouped bars, one group per category.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& categories,
                          const std::vector<ChartSeries>& series);

}  // namespace chfb
