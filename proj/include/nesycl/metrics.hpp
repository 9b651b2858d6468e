#pragma once

#include <optional>
#include <string>
#include <vector>

namespace nesycl {

/// R[i][j]: accuracy on task i's test set after learning task j, for i <= j.
class AccuracyMatrix {
public:
    AccuracyMatrix() = default;
    explicit AccuracyMatrix(int num_tasks);

    int num_tasks() const { return n_; }
    void set(int task, int after_task, double accuracy);
    double at(int task, int after_task) const;
    bool has(int task, int after_task) const;
    /// True when every entry with i <= j is set.
    bool complete() const;

    friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

private:
    int n_ = 0;
    std::vector<double> values_;
    std::vector<bool> set_;
};

struct EpisodeMetrics {
    double a_all = 0;                 // percent
    std::optional<double> a_last;     // percent; absent for joint training
};

/// A_all = 100 * mean_i R[i][T-1]; A_last = 100 * mean_i R[i][i].
/// Throws IncompleteMatrix if an entry is missing.
EpisodeMetrics metrics(const AccuracyMatrix& r, bool has_last = true);

/// Mean of R[i][T-1] over i < T-1 (old tasks at the end), as a fraction.
double old_task_final_accuracy(const AccuracyMatrix& r);

struct MeanStd {
    double mean = 0;
    double std = 0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_std(const std::vector<double>& values);

}  // namespace nesycl
