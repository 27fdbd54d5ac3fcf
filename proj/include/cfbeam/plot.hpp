// SPDX-License-Identifier: Apache-2.0
//
// cfbeam: probing-beam beam alignment workbench for mmWave cell-free MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Deterministic SVG curve rendering of result and trace CSVs.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfbeam {

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
    int require_column(const std::string& name, const std::string& origin) const {
        const int c = column(name);
        if (c < 0) throw std::runtime_error(origin + ": missing column '" + name + "'");
        return c;
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: " + path + ": empty file");
    std::stringstream hs(line);
    std::string tok;
    while (std::getline(hs, tok, ',')) t.columns.push_back(tok);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::stringstream rs(line);
        while (std::getline(rs, tok, ',')) row.push_back(tok);
        row.resize(t.columns.size());
        t.rows.push_back(std::move(row));
    }
    return t;
}

enum class PlotKind { size, power, rounds, speed };

inline PlotKind plot_kind_from_string(const std::string& s) {
    if (s == "size") return PlotKind::size;
    if (s == "power") return PlotKind::power;
    if (s == "rounds") return PlotKind::rounds;
    if (s == "speed") return PlotKind::speed;
    throw std::invalid_argument("plot kind must be one of size, power, rounds, speed");
}

namespace detail {

struct Curve {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// Fixed palette; curves are assigned colors in label order.
inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return colors[i % 8];
}

inline void render_svg(const std::vector<Curve>& curves, const std::string& x_label,
                       const std::string& y_label, const std::string& path) {
    if (curves.empty()) throw std::runtime_error("plot: no curves to draw");
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& c : curves)
        for (const auto& [x, y] : c.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x1 >= x0)) throw std::runtime_error("plot: no data points");
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double pad_y = 0.08 * (y1 - y0);
    y0 -= pad_y;
    y1 += pad_y;

    const int W = 720, H = 480, ml = 70, mr = 160, mt = 30, mb = 55;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' viewBox='0 0 " << W << " " << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n";
    // axes + ticks
    svg << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = x0 + (x1 - x0) * i / 5.0;
        const double yv = y0 + (y1 - y0) * i / 5.0;
        svg << "<line x1='" << fmt(px(xv)) << "' y1='" << H - mb << "' x2='" << fmt(px(xv))
            << "' y2='" << H - mb + 5 << "' stroke='black'/>\n";
        svg << "<text x='" << fmt(px(xv)) << "' y='" << H - mb + 20
            << "' font-size='12' text-anchor='middle'>" << fmt(xv) << "</text>\n";
        svg << "<line x1='" << ml - 5 << "' y1='" << fmt(py(yv)) << "' x2='" << ml << "' y2='"
            << fmt(py(yv)) << "' stroke='black'/>\n";
        svg << "<text x='" << ml - 8 << "' y='" << fmt(py(yv) + 4)
            << "' font-size='12' text-anchor='end'>" << fmt(yv) << "</text>\n";
    }
    svg << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 12
        << "' font-size='14' text-anchor='middle'>" << x_label << "</text>\n";
    svg << "<text x='18' y='" << (mt + H - mb) / 2
        << "' font-size='14' text-anchor='middle' transform='rotate(-90 18 "
        << (mt + H - mb) / 2 << ")'>" << y_label << "</text>\n";

    for (std::size_t c = 0; c < curves.size(); ++c) {
        const char* color = palette(c);
        svg << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
        for (const auto& [x, y] : curves[c].points) svg << fmt(px(x)) << "," << fmt(py(y)) << " ";
        svg << "'/>\n";
        for (const auto& [x, y] : curves[c].points)
            svg << "<circle cx='" << fmt(px(x)) << "' cy='" << fmt(py(y)) << "' r='3' fill='"
                << color << "'/>\n";
        const double ly = mt + 18.0 * (c + 1);
        svg << "<line x1='" << W - mr + 10 << "' y1='" << fmt(ly - 4) << "' x2='" << W - mr + 34
            << "' y2='" << fmt(ly - 4) << "' stroke='" << color << "' stroke-width='2'/>\n";
        svg << "<text x='" << W - mr + 40 << "' y='" << fmt(ly)
            << "' font-size='12'>" << curves[c].label << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw std::runtime_error("plot: cannot open " + path);
    out << svg.str();
}

}  // namespace detail

/// Render a results (or round-trace) CSV as an SVG with one curve per scheme
/// (per user for kind=rounds). Repetitions at the same x average.
inline void plot_csv(const std::string& csv_path, PlotKind kind, const std::string& out_path) {
    const CsvTable t = read_csv(csv_path);
    if (t.rows.empty()) throw std::runtime_error("plot: " + csv_path + " has no data rows");

    std::string x_label, y_label;
    std::map<std::string, std::map<double, std::pair<double, int>>> series;  // label -> x -> (sum,count)
    if (kind == PlotKind::rounds && t.column("round") >= 0 && t.column("user") >= 0) {
        const int cr = t.require_column("round", csv_path);
        const int cu = t.require_column("user", csv_path);
        const int cy = t.require_column("primal_residual", csv_path);
        x_label = "consensus round";
        y_label = "primal residual";
        for (const auto& row : t.rows)
            series["user " + row[cu]][std::stod(row[cr])] = {std::stod(row[cy]), 1};
    } else {
        const int cs = t.require_column("scheme", csv_path);
        const int cy = t.require_column("se_ave_eff", csv_path);
        int cx;
        if (kind == PlotKind::size) {
            cx = t.require_column("n_train", csv_path);
            x_label = "training samples";
        } else {
            cx = t.require_column("sweep_value", csv_path);
            const int cp = t.require_column("sweep_param", csv_path);
            const std::string want = (kind == PlotKind::power)  ? "p_ul_dbm"
                                     : (kind == PlotKind::speed) ? "T_ms"
                                                                 : "t_max";
            for (const auto& row : t.rows)
                if (row[cp] != want)
                    throw std::runtime_error("plot: " + csv_path + " sweeps '" + row[cp] +
                                             "', expected '" + want + "' for this kind");
            x_label = (kind == PlotKind::power)  ? "uplink training power (dBm)"
                      : (kind == PlotKind::speed) ? "tracking period T (ms)"
                                                  : "iterations t_max";
        }
        y_label = "SE_ave_eff (bps/Hz)";
        for (const auto& row : t.rows) {
            auto& cell = series[row[cs]][std::stod(row[cx])];
            cell.first += std::stod(row[cy]);
            cell.second += 1;
        }
    }

    std::vector<detail::Curve> curves;
    for (const auto& [label, pts] : series) {
        detail::Curve c;
        c.label = label;
        for (const auto& [x, sc] : pts) c.points.push_back({x, sc.first / sc.second});
        curves.push_back(std::move(c));
    }
    detail::render_svg(curves, x_label, y_label, out_path);
}

}  // namespace cfbeam
