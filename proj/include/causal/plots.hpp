#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causal/csv.hpp"
#include "causal/experiment.hpp"
#include "causal/svg.hpp"

namespace causal {

// Rendering and verification over the CSV artifacts of a finished run
// directory. Both are pure functions of the files on disk.

namespace detail {

inline std::vector<std::filesystem::path> seed_dirs(const std::string& result_dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> dirs;
  if (!fs::exists(result_dir)) throw std::runtime_error("no such result directory: " + result_dir);
  for (const auto& entry : fs::directory_iterator(result_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("seed", 0) == 0)
      dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

// Axes for a plot box with x mapped by sx and y values in [sy.lo, sy.hi]
// drawn bottom-up between pixel rows sy.px0 (bottom) and sy.px1 (top).
inline void draw_axes(svg::Canvas& c, const svg::Scale& sx, const svg::Scale& sy,
                      const std::string& xlabel, const std::string& ylabel) {
  const double bottom = std::max(sy.px0, sy.px1), top = std::min(sy.px0, sy.px1);
  c.line(sx.px0, bottom, sx.px1, bottom, "black");
  c.line(sx.px0, top, sx.px0, bottom, "black");
  c.text((sx.px0 + sx.px1) / 2, bottom + 32, xlabel, 12, "middle");
  c.text(sx.px0 - 34, top - 8, ylabel, 12, "start");
  for (int k = 0; k <= 4; ++k) {
    const double xv = sx.lo + (sx.hi - sx.lo) * k / 4.0;
    const double yv = sy.lo + (sy.hi - sy.lo) * k / 4.0;
    const double ypix = bottom - (sy.hi == sy.lo ? 0.0 : (yv - sy.lo) / (sy.hi - sy.lo)) *
                                     (bottom - top);
    c.line(sx(xv), bottom, sx(xv), bottom + 4, "black");
    c.text(sx(xv), bottom + 16, svg::num(xv), 10, "middle");
    c.line(sx.px0 - 4, ypix, sx.px0, ypix, "black");
    c.text(sx.px0 - 6, ypix + 4, svg::num(yv), 10, "end");
  }
}

}  // namespace detail

// SHD-vs-round curve with a min/max envelope across seeds. Runs that stopped
// early are padded with their final SHD so the envelope stays defined.
inline void plot_shd_curve(const std::string& result_dir, const std::string& out_path) {
  std::vector<std::vector<int>> series;
  for (const auto& dir : detail::seed_dirs(result_dir)) {
    const std::string file = (dir / "history.csv").string();
    if (!std::filesystem::exists(file)) continue;
    CsvTable t = read_csv(file);
    const int shd_col = t.require_column("shd", file);
    std::vector<int> s;
    s.reserve(t.rows.size());
    for (const auto& row : t.rows) s.push_back(std::stoi(row[shd_col]));
    series.push_back(std::move(s));
  }
  std::size_t len = 0;
  for (const auto& s : series) len = std::max(len, s.size());

  svg::Canvas canvas(640, 420);
  const double max_round = static_cast<double>(len > 1 ? len - 1 : 1);
  svg::Scale sx{0.0, max_round, 60, 610};
  double max_shd = 1.0;
  for (const auto& s : series)
    for (int v : s) max_shd = std::max(max_shd, static_cast<double>(v));
  detail::draw_axes(canvas, sx, svg::Scale{0.0, max_shd, 30, 380}, "structural round", "shd");
  auto ypix = [&](double v) { return 380.0 - v / max_shd * 350.0; };

  if (len > 0 && !series.empty()) {
    std::vector<std::pair<double, double>> mean_pts, band;
    std::vector<double> mins(len), maxs(len);
    for (std::size_t r = 0; r < len; ++r) {
      double lo = 1e300, hi = -1e300, sum = 0.0;
      for (const auto& s : series) {
        const double v = s.empty() ? 0.0 : static_cast<double>(r < s.size() ? s[r] : s.back());
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      mins[r] = lo;
      maxs[r] = hi;
      mean_pts.emplace_back(sx(static_cast<double>(r)), ypix(sum / series.size()));
    }
    for (std::size_t r = 0; r < len; ++r) band.emplace_back(sx(static_cast<double>(r)), ypix(maxs[r]));
    for (std::size_t r = len; r-- > 0;) band.emplace_back(sx(static_cast<double>(r)), ypix(mins[r]));
    canvas.polygon(band, "#2e7d32");
    canvas.polyline(mean_pts, "#2e7d32");
  }
  canvas.text(320, 18, "SHD vs structural rounds", 13, "middle");
  canvas.save(out_path);
}

inline void plot_selection_histogram(const std::string& csv_path, const std::string& out_path) {
  std::vector<long> counts;
  if (std::filesystem::exists(csv_path)) {
    CsvTable t = read_csv(csv_path);
    const int node_col = t.require_column("node", csv_path);
    const int count_col = t.require_column("count", csv_path);
    counts.resize(t.rows.size(), 0);
    for (const auto& row : t.rows) counts[std::stoul(row[node_col])] = std::stol(row[count_col]);
  }
  svg::Canvas canvas(640, 420);
  long max_count = 1;
  for (long c : counts) max_count = std::max(max_count, c);
  detail::draw_axes(canvas, svg::Scale{0.0, static_cast<double>(std::max<std::size_t>(counts.size(), 1)), 60, 610},
                    svg::Scale{0.0, static_cast<double>(max_count), 30, 380}, "node", "selections");
  const double plot_w = 550.0;
  const double bar_w = counts.empty() ? plot_w : plot_w / counts.size();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double h = 350.0 * static_cast<double>(counts[i]) / static_cast<double>(max_count);
    canvas.rect(60 + i * bar_w + 0.12 * bar_w, 380 - h, 0.76 * bar_w, h, "#1565c0");
    canvas.text(60 + (i + 0.5) * bar_w, 396, std::to_string(i), 10, "middle");
  }
  canvas.text(320, 18, "intervention target selections", 13, "middle");
  canvas.save(out_path);
}

// Edge-belief heatmap over rounds (first seed), rows = directed edges.
inline void plot_edge_dynamics(const std::string& result_dir, const std::string& out_path) {
  const auto dirs = detail::seed_dirs(result_dir);
  std::optional<CsvTable> table;
  std::string file;
  for (const auto& dir : dirs) {
    file = (dir / "edge_dynamics.csv").string();
    if (std::filesystem::exists(file)) {
      table = read_csv(file);
      break;
    }
  }
  svg::Canvas canvas(720, 480);
  if (table && !table->rows.empty() && table->header.size() > 1) {
    const std::size_t edges = table->header.size() - 1;
    const std::size_t rounds = table->rows.size();
    const std::size_t stride = std::max<std::size_t>(1, rounds / 400);
    const std::size_t shown = (rounds + stride - 1) / stride;
    const double x0 = 90, y0 = 30, w = 600, h = 400;
    const double cw = w / static_cast<double>(shown);
    const double ch = h / static_cast<double>(edges);
    for (std::size_t e = 0; e < edges; ++e) {
      for (std::size_t rr = 0, col = 0; rr < rounds; rr += stride, ++col) {
        const double v = std::stod(table->rows[rr][e + 1]);
        canvas.rect(x0 + col * cw, y0 + e * ch, cw + 0.5, ch + 0.5, svg::heat_color(v));
      }
      if (edges <= 40)
        canvas.text(x0 - 4, y0 + (e + 0.8) * ch, table->header[e + 1], 8, "end");
    }
    canvas.text(360, 18, "edge belief dynamics (seed " + dirs.front().filename().string().substr(4) + ")",
                13, "middle");
    canvas.text(360, 452, "structural round", 12, "middle");
  } else {
    canvas.text(360, 240, "no edge dynamics recorded", 13, "middle");
  }
  canvas.save(out_path);
}

inline void plot_probe_histogram(const std::string& csv_path, const std::string& out_path) {
  CsvTable t = read_csv(csv_path);
  const int target_col = t.require_column("target", csv_path);
  const int top_col = t.require_column("top_count", csv_path);
  svg::Canvas canvas(640, 420);
  long max_count = 1;
  for (const auto& row : t.rows) max_count = std::max(max_count, std::stol(row[top_col]));
  detail::draw_axes(canvas, svg::Scale{0.0, static_cast<double>(t.rows.size()), 60, 610},
                    svg::Scale{0.0, static_cast<double>(max_count), 30, 380}, "target",
                    "times ranked first");
  const double bar_w = t.rows.empty() ? 550.0 : 550.0 / t.rows.size();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double h = 350.0 * std::stol(t.rows[i][top_col]) / static_cast<double>(max_count);
    canvas.rect(60 + i * bar_w + 0.12 * bar_w, 380 - h, 0.76 * bar_w, h, "#6a1b9a");
    canvas.text(60 + (i + 0.5) * bar_w, 396, t.rows[i][target_col], 10, "middle");
  }
  canvas.text(320, 18, "probe: top-scoring targets", 13, "middle");
  canvas.save(out_path);
}

// Renders every plot the directory's artifacts support; returns the files
// written.
inline std::vector<std::string> emit_plots(const std::string& result_dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  const fs::path dir(result_dir);
  {
    const std::string out = (dir / "shd_curve.svg").string();
    plot_shd_curve(result_dir, out);
    written.push_back(out);
  }
  {
    const std::string out = (dir / "selection_histogram.svg").string();
    plot_selection_histogram((dir / "selection_histogram.csv").string(), out);
    written.push_back(out);
  }
  {
    const std::string out = (dir / "edge_dynamics.svg").string();
    plot_edge_dynamics(result_dir, out);
    written.push_back(out);
  }
  if (fs::exists(dir / "probe.csv")) {
    const std::string out = (dir / "probe_histogram.svg").string();
    plot_probe_histogram((dir / "probe.csv").string(), out);
    written.push_back(out);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Aggregate verification: recompute every aggregate statistic from the raw
// per-seed CSVs and diff against aggregate.csv.
// ---------------------------------------------------------------------------

struct VerifyReport {
  std::vector<std::string> mismatches;
  bool ok() const { return mismatches.empty(); }
};

inline VerifyReport verify_aggregates(const std::string& result_dir) {
  namespace fs = std::filesystem;
  VerifyReport report;
  const fs::path dir(result_dir);

  const std::string per_seed_path = (dir / "per_seed.csv").string();
  CsvTable per_seed = read_csv(per_seed_path);
  const int c_status = per_seed.require_column("status", per_seed_path);
  const int c_shd = per_seed.require_column("final_shd", per_seed_path);
  const int c_rounds0 = per_seed.require_column("rounds_to_zero", per_seed_path);
  const int c_corr_out = per_seed.require_column("corr_out_degree", per_seed_path);
  const int c_corr_desc = per_seed.require_column("corr_descendants", per_seed_path);

  int budget = 0;
  for (const auto& [k, v] : load_config_map((dir / "config_echo.cfg").string()))
    if (k == "budget") budget = std::stoi(v);

  double sum = 0, sum2 = 0, corr_out_sum = 0, corr_desc_sum = 0;
  int ok_count = 0, corr_out_n = 0, corr_desc_n = 0;
  bool partial = false;
  std::vector<double> rounds;
  for (const auto& row : per_seed.rows) {
    if (row[c_status] != "ok") {
      partial = true;
      continue;
    }
    ++ok_count;
    const double shd_v = std::stod(row[c_shd]);
    sum += shd_v;
    sum2 += shd_v * shd_v;
    const long r0 = std::stol(row[c_rounds0]);
    rounds.push_back(r0 >= 0 ? static_cast<double>(r0) : static_cast<double>(budget + 1));
    if (!row[c_corr_out].empty()) {
      corr_out_sum += std::stod(row[c_corr_out]);
      ++corr_out_n;
    }
    if (!row[c_corr_desc].empty()) {
      corr_desc_sum += std::stod(row[c_corr_desc]);
      ++corr_desc_n;
    }
  }
  std::sort(rounds.begin(), rounds.end());

  std::map<std::string, std::string> expected;
  expected["seeds"] = std::to_string(per_seed.rows.size());
  expected["partial"] = partial ? "1" : "0";
  if (ok_count > 0) {
    const double mean = sum / ok_count;
    expected["mean_final_shd"] = csv_double(mean);
    expected["std_final_shd"] = csv_double(std::sqrt(std::max(0.0, sum2 / ok_count - mean * mean)));
    expected["rounds_to_zero_q0"] = csv_double(detail::quantile_sorted(rounds, 0.0));
    expected["rounds_to_zero_q50"] = csv_double(detail::quantile_sorted(rounds, 0.5));
    expected["rounds_to_zero_q100"] = csv_double(detail::quantile_sorted(rounds, 1.0));
  }
  expected["mean_corr_out_degree"] = corr_out_n > 0 ? csv_double(corr_out_sum / corr_out_n) : "";
  expected["mean_corr_descendants"] = corr_desc_n > 0 ? csv_double(corr_desc_sum / corr_desc_n) : "";

  const std::string agg_path = (dir / "aggregate.csv").string();
  CsvTable agg = read_csv(agg_path);
  const int c_field = agg.require_column("field", agg_path);
  const int c_value = agg.require_column("value", agg_path);
  for (const auto& row : agg.rows) {
    auto it = expected.find(row[c_field]);
    if (it == expected.end()) continue;
    const std::string& want = it->second;
    const std::string& got = row[c_value];
    bool match;
    if (want.empty() || got.empty()) {
      match = want == got;
    } else {
      const double w = std::stod(want), g = std::stod(got);
      match = std::abs(w - g) <= 1e-9 * std::max({1.0, std::abs(w), std::abs(g)});
    }
    if (!match)
      report.mismatches.push_back(row[c_field] + ": aggregate has " + got + ", recomputed " + want);
    expected.erase(it);
  }
  for (const auto& [field, value] : expected)
    report.mismatches.push_back(field + ": missing from aggregate.csv (recomputed " + value + ")");
  return report;
}

}  // namespace causal
