#include "chfb/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

namespace chfb {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kW = 640;
constexpr double kH = 400;
constexpr double kLeft = 60;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 50;

std::string fixed(double v) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(2);
  s << v;
  return s.str();
}

}  // namespace

void write_case_report_csv(std::ostream& out, const CaseReport& report) {
  out << "scheme,case,simulations,min_accuracy,avg_accuracy,max_accuracy,fp_percent,fn_percent,sensitivity,"
         "specificity,false_positive_rate,pooled_auc,test_contours,test_fractured\n";
  for (const auto& r : report.rows) {
    out << to_string(report.scheme) << "-chfb," << r.case_index << ',' << r.simulations << ','
        << format_number(r.min_accuracy) << ',' << format_number(r.avg_accuracy) << ','
        << format_number(r.max_accuracy) << ',' << format_number(r.fp_percent) << ',' << format_number(r.fn_percent)
        << ',' << format_number(r.avg_sensitivity) << ',' << format_number(r.avg_specificity) << ','
        << format_number(r.avg_false_positive_rate) << ',' << format_number(r.pooled_auc) << ',' << r.test_contours
        << ',' << r.test_fractured << '\n';
  }
}

nlohmann::json to_json(const CaseReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"case", r.case_index},
                    {"simulations", r.simulations},
                    {"min_accuracy", r.min_accuracy},
                    {"avg_accuracy", r.avg_accuracy},
                    {"max_accuracy", r.max_accuracy},
                    {"fp_percent", r.fp_percent},
                    {"fn_percent", r.fn_percent},
                    {"sensitivity", optional_json(r.avg_sensitivity)},
                    {"specificity", optional_json(r.avg_specificity)},
                    {"false_positive_rate", optional_json(r.avg_false_positive_rate)},
                    {"pooled_auc", optional_json(r.pooled_auc)},
                    {"test_contours", r.test_contours},
                    {"test_fractured", r.test_fractured}});
  }
  return {{"scheme", std::string(to_string(report.scheme)) + "-chfb"},
          {"overall_avg_accuracy", report.overall_avg_accuracy},
          {"cases", rows}};
}

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions) {
  out << "case,simulation,image_id,contour_id,score,truth,predicted\n";
  for (const auto& p : predictions) {
    out << p.case_index << ',' << p.simulation << ',' << p.image_id << ',' << p.contour_id << ','
        << format_number(p.score) << ',' << (p.truth ? 1 : 0) << ',' << (p.predicted ? 1 : 0) << '\n';
  }
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out << format_number(p.threshold) << ',' << format_number(p.fpr) << ',' << format_number(p.tpr) << '\n';
  }
}

void write_ann_series_csv(std::ostream& out, const AnnEvalSeries& series) {
  out << "scheme,per_class,train_size,tp,fp,tn,fn,accuracy,auc\n";
  for (const auto& r : series.rows) {
    out << to_string(series.scheme) << "-chfb," << r.per_class << ',' << 2 * r.per_class << ',' << r.counts.tp << ','
        << r.counts.fp << ',' << r.counts.tn << ',' << r.counts.fn << ',' << format_number(r.accuracy) << ','
        << format_number(r.auc) << '\n';
  }
}

nlohmann::json to_json(const AnnEvalSeries& series) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : series.rows) {
    rows.push_back({{"per_class", r.per_class},
                    {"tp", r.counts.tp},
                    {"fp", r.counts.fp},
                    {"tn", r.counts.tn},
                    {"fn", r.counts.fn},
                    {"accuracy", r.accuracy},
                    {"auc", optional_json(r.auc)}});
  }
  return {{"scheme", std::string(to_string(series.scheme)) + "-chfb"}, {"rows", rows}, {"warnings", series.warnings}};
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series) {
  double x0 = 0;
  double x1 = 1;
  double y0 = 0;
  double y1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (first) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return kTop + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0;
    const double yv = y0 + (y1 - y0) * t / 4.0;
    svg << "<text x=\"" << fixed(sx(xv)) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << fixed(xv) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(sy(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
        << fixed(yv) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << escape(x_label) << "</text>\n";
  svg << "<text x=\"14\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
      << kTop + ph / 2 << ")\">" << escape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      svg << (i ? " " : "") << fixed(sx(s.x[i])) << ',' << fixed(sy(s.y[i]));
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 14 + 14 * static_cast<double>(k) << "\" fill=\"" << colour
        << "\" font-size=\"12\">" << escape(s.name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& categories,
                          const std::vector<ChartSeries>& series) {
  double y1 = 0;
  for (const auto& s : series) {
    for (double v : s.y) y1 = std::max(y1, v);
  }
  if (y1 <= 0) y1 = 1;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  const double group = categories.empty() ? pw : pw / static_cast<double>(categories.size());
  const double bar = series.empty() ? group : group * 0.8 / static_cast<double>(series.size());

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << fixed(y1)
      << "</text>\n";
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + group * static_cast<double>(c);
    svg << "<text x=\"" << fixed(gx + group / 2) << "\" y=\"" << kTop + ph + 16
        << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(categories[c]) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double v = c < series[k].y.size() ? series[k].y[c] : 0.0;
      const double h = v / y1 * ph;
      svg << "<rect x=\"" << fixed(gx + group * 0.1 + bar * static_cast<double>(k)) << "\" y=\"" << fixed(kTop + ph - h)
          << "\" width=\"" << fixed(bar) << "\" height=\"" << fixed(h) << "\" fill=\""
          << kPalette[k % std::size(kPalette)] << "\"/>\n";
    }
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    svg << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 14 + 14 * static_cast<double>(k) << "\" fill=\""
        << kPalette[k % std::size(kPalette)] << "\" font-size=\"12\">" << escape(series[k].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace chfb
