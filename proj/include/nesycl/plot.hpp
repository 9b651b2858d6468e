#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace nesycl {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Self-contained SVG line chart; output depends only on the arguments.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series);

struct LearningCurves {
    Series all_tasks;  // 100 * mean_{i<=j} R[i][j] after task j
    Series last_task;  // 100 * R[j][j]
};

/// Seed-averaged curves per (method, config hash), sorted by method name.
/// Throws Error when `results` is empty.
std::vector<LearningCurves> learning_curves(const std::vector<nlohmann::json>& results);

}  // namespace nesycl
