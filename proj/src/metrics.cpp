#include "nesycl/metrics.hpp"

#include <cmath>
#include <numeric>

#include "nesycl/errors.hpp"

namespace nesycl {

AccuracyMatrix::AccuracyMatrix(int num_tasks)
    : n_(num_tasks), values_(static_cast<std::size_t>(num_tasks * num_tasks), 0.0), set_(values_.size(), false) {}

void AccuracyMatrix::set(int task, int after_task, double accuracy) {
    if (task < 0 || after_task < task || after_task >= n_) throw Error("AccuracyMatrix::set: index outside lower triangle");
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw Error("AccuracyMatrix::set: accuracy outside [0, 1]");
    const auto k = static_cast<std::size_t>(task * n_ + after_task);
    values_[k] = accuracy;
    set_[k] = true;
}

double AccuracyMatrix::at(int task, int after_task) const {
    if (!has(task, after_task)) throw IncompleteMatrix("AccuracyMatrix::at: entry not set");
    return values_[static_cast<std::size_t>(task * n_ + after_task)];
}

bool AccuracyMatrix::has(int task, int after_task) const {
    if (task < 0 || after_task < task || after_task >= n_) return false;
    return set_[static_cast<std::size_t>(task * n_ + after_task)];
}

bool AccuracyMatrix::complete() const {
    for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j)
            if (!has(i, j)) return false;
    return n_ > 0;
}

EpisodeMetrics metrics(const AccuracyMatrix& r, bool has_last) {
    if (!r.complete()) throw IncompleteMatrix("metrics: accuracy matrix is incomplete");
    const int t = r.num_tasks();
    double all = 0, last = 0;
    for (int i = 0; i < t; ++i) {
        all += r.at(i, t - 1);
        last += r.at(i, i);
    }
    EpisodeMetrics m;
    m.a_all = 100.0 * all / t;
    if (has_last) m.a_last = 100.0 * last / t;
    return m;
}

double old_task_final_accuracy(const AccuracyMatrix& r) {
    const int t = r.num_tasks();
    if (t < 2) return 0.0;
    double s = 0;
    for (int i = 0; i + 1 < t; ++i) s += r.at(i, t - 1);
    return s / (t - 1);
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

}  // namespace nesycl
