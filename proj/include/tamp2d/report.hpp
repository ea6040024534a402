#ifndef TAMP2D_REPORT_HPP_
#define TAMP2D_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tamp2d/config.hpp"
#include "tamp2d/metrics.hpp"

namespace tamp2d {

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

// Deterministic standalone SVG line chart. No timestamps, no randomness:
// identical inputs yield identical bytes.
inline std::string render_svg(const std::vector<Curve>& curves,
                              const std::string& title,
                              const std::string& x_label,
                              const std::string& y_label) {
  const double W = 640, H = 400;
  const double ml = 60, mr = 20, mt = 40, mb = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const Curve& c : curves)
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!any) {
        x0 = x1 = c.x[i];
        y0 = y1 = c.y[i];
        any = true;
      }
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.y[i]);
      y1 = std::max(y1, c.y[i]);
    }
  if (x1 - x0 < 1e-12) x1 = x0 + 1;
  if (y1 - y0 < 1e-12) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
     << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">" << detail::fmt(xv) << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"11\">" << detail::fmt(yv) << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">" << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        "transform=\"rotate(-90 16 " << (mt + H - mb) / 2 << ")\">" << y_label
     << "</text>\n";

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const Curve& c = curves[ci];
    const char* color = kColors[ci % 6];
    if (!c.x.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < c.x.size(); ++i)
        os << (i ? " " : "") << detail::fmt(px(c.x[i])) << ","
           << detail::fmt(py(c.y[i]));
      os << "\"/>\n";
    }
    os << "<text x=\"" << W - mr - 6 << "\" y=\"" << mt + 16 * (ci + 1)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
          "fill=\"" << color << "\">" << c.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline Curve curve_from_csv(const CsvTable& t, const std::string& x_col,
                            const std::string& y_col,
                            const std::string& label) {
  Curve c;
  c.label = label;
  int xi = -1, yi = -1;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i] == x_col) xi = static_cast<int>(i);
    if (t.header[i] == y_col) yi = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0) return c;
  for (const auto& row : t.rows) {
    try {
      const double x = std::stod(row[xi]);
      const double y = std::stod(row[yi]);
      if (std::isfinite(x) && std::isfinite(y)) {
        c.x.push_back(x);
        c.y.push_back(y);
      }
    } catch (...) {
    }
  }
  return c;
}

// Build report/ artifacts from a finished run directory: two SVG charts and
// a plain-text summary. Returns false if no metrics were found.
inline bool write_report(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const std::string mdir = run_dir + "/metrics";
  const std::string rdir = run_dir + "/report";
  if (!fs::exists(mdir)) return false;
  fs::create_directories(rdir);

  const CsvTable eval = CsvTable::load(mdir + "/eval.csv");
  const CsvTable train = CsvTable::load(mdir + "/train.csv");
  bool wrote = false;

  if (!eval.rows.empty()) {
    std::vector<Curve> cs{
        curve_from_csv(eval, "step", "success_rate", "success rate"),
        curve_from_csv(eval, "step", "mean_progress", "mean progress")};
    std::ofstream f(rdir + "/eval_curve.svg");
    f << render_svg(cs, "Policy evaluation", "trainer step", "rate");
    wrote = true;
  }
  if (!train.rows.empty()) {
    std::vector<Curve> cs{
        curve_from_csv(train, "step", "task_loss", "task loss"),
        curve_from_csv(train, "step", "motion_loss", "motion loss")};
    std::ofstream f(rdir + "/loss_curve.svg");
    f << render_svg(cs, "Training losses", "trainer step", "loss");
    wrote = true;
  }

  std::ofstream sum(rdir + "/summary.txt");
  sum << "run directory: " << run_dir << "\n";
  const std::string kv_path = run_dir + "/report/report.kv";
  if (fs::exists(kv_path)) {
    KeyValueFile kv = KeyValueFile::load(kv_path);
    sum << "plans refined: " << kv.get_int("report.plans_refined", 0) << "\n";
    sum << "trainer steps: " << kv.get_int("report.trainer_steps", 0) << "\n";
    sum << "final success rate: "
        << kv.get_num("report.eval_success_rate", 0.0) << "\n";
    sum << "final mean progress: "
        << kv.get_num("report.eval_mean_progress", 0.0) << "\n";
  }
  sum << "eval rows: " << eval.rows.size()
      << " (skipped " << eval.skipped << ")\n";
  sum << "train rows: " << train.rows.size()
      << " (skipped " << train.skipped << ")\n";
  return wrote || !eval.rows.empty() || !train.rows.empty();
}

}  // namespace tamp2d

#endif  // TAMP2D_REPORT_HPP_
