#include "nesycl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "nesycl/errors.hpp"

namespace nesycl {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    y0 = std::min(y0, 0.0);
    y1 = std::max(y1, 100.0);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return kTop + ph - (y - y0) / (y1 - y0) * ph; };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                      "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
    svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
        svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(sy(yv) + 4) + "\" text-anchor=\"end\">" + num(yv) + "</text>\n";
        svg += "<text x=\"" + num(sx(xv)) + "\" y=\"" + num(kTop + ph + 16) + "\" text-anchor=\"middle\">" + num(xv) + "</text>\n";
    }
    svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) + "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
    svg += "<text x=\"15\" y=\"" + num(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " + num(kTop + ph / 2) +
           ")\">" + escape(y_label) + "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const std::string color = kColors[i % std::size(kColors)];
        std::string pts;
        for (auto [x, y] : s.points) pts += (pts.empty() ? "" : " ") + num(sx(x)) + "," + num(sy(y));
        svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
        for (auto [x, y] : s.points) svg += "<circle cx=\"" + num(sx(x)) + "\" cy=\"" + num(sy(y)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
        svg += "<line x1=\"" + num(kWidth - kRight + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(kWidth - kRight + 30) + "\" y2=\"" +
               num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(kWidth - kRight + 35) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.name) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<LearningCurves> learning_curves(const std::vector<nlohmann::json>& results) {
    if (results.empty()) throw Error("no results to plot");
    struct Acc {
        std::vector<double> all, last;
        std::vector<int> count;
    };
    std::map<std::pair<std::string, std::string>, Acc> groups;
    for (const auto& r : results) {
        if (!r.contains("matrix") || !r.contains("method")) throw Error("ill-formed result: missing matrix or method");
        const auto& m = r.at("matrix");
        const auto t = m.size();
        auto& acc = groups[{r.at("method").get<std::string>(), r.value("config_hash", "")}];
        if (acc.all.empty()) {
            acc.all.assign(t, 0.0);
            acc.last.assign(t, 0.0);
            acc.count.assign(t, 0);
        }
        if (acc.all.size() != t) throw Error("ill-formed results: matrices of different size in one group");
        for (std::size_t j = 0; j < t; ++j) {
            double s = 0;
            bool ok = true;
            for (std::size_t i = 0; i <= j; ++i) {
                if (m[i][j].is_null()) ok = false;
                else s += m[i][j].get<double>();
            }
            if (!ok) continue;
            acc.all[j] += 100.0 * s / static_cast<double>(j + 1);
            acc.last[j] += 100.0 * m[j][j].get<double>();
            ++acc.count[j];
        }
    }
    std::vector<LearningCurves> out;
    for (const auto& [key, acc] : groups) {
        LearningCurves c;
        const std::string name = key.second.empty() ? key.first : key.first + " " + key.second.substr(0, 6);
        c.all_tasks.name = c.last_task.name = name;
        for (std::size_t j = 0; j < acc.all.size(); ++j) {
            if (acc.count[j] == 0) continue;
            c.all_tasks.points.emplace_back(static_cast<double>(j + 1), acc.all[j] / acc.count[j]);
            c.last_task.points.emplace_back(static_cast<double>(j + 1), acc.last[j] / acc.count[j]);
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace nesycl
