#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nesycl/metrics.hpp"
#include "nesycl/mlp.hpp"
#include "nesycl/neural.hpp"

namespace nesycl {

/// Extracted features of one task. Labels are local class indices 0..K-1;
/// in the growing head the task owns rows [first_row, first_row + K).
struct TaskFeatures {
    int task_id = 0;
    int first_row = 0;
    int num_classes = 0;
    Eigen::MatrixXf train_x;  // d x n
    std::vector<int> train_y;
    Eigen::MatrixXf test_x;
    std::vector<int> test_y;
};

enum class Baseline { Finetune, Multitask, Er, Ewc, Si, Lwf, Gem };

std::string to_string(Baseline b);

struct BaselineConfig {
    TrainConfig train;  // lambda is ignored: baselines never use the integration head
    int buffer_per_class = 5;
    double ewc_lambda = 100.0;
    double si_c = 0.1;
    double si_xi = 1e-3;
    double lwf_lambda = 1.0;
    double lwf_temperature = 2.0;
    int gem_mem_per_task = 25;
    double gem_tolerance = 1e-6;
    int gem_max_iterations = 500;

    void validate() const;
};

struct BaselineResult {
    AccuracyMatrix r;
    double train_seconds = 0;
    double inference_seconds = 0;
    long inference_samples = 0;
    long replay_buffer_size = 0;  // ER only
};

/// Trains `method` over the tasks in order and evaluates every seen task
/// with task-masked logits after each one. Multitask trains once on the
/// union of all tasks and fills every column with that single model.
BaselineResult run_baseline(Baseline method, std::span<const TaskFeatures> tasks, const BaselineConfig& config);

/// Seeds shared by every baseline of one run.
inline std::uint64_t baseline_init_seed(std::uint64_t seed) { return derive_seed(seed, 0xba5eULL); }

// ---- regularizers -------------------------------------------------------

/// scale * sum_i w_i (theta_i - anchor_i)^2 over the first anchor.size()
/// parameters; parameters beyond the anchor (newer head rows) are free.
template <class S>
S quadratic_penalty(const Vec<S>& theta, const Vec<S>& weight, const Vec<S>& anchor, S scale) {
    const auto n = anchor.size();
    return scale * (weight.array() * (theta.head(n) - anchor).array().square()).sum();
}

/// Adds the gradient of quadratic_penalty to `grad`.
template <class S>
void add_quadratic_penalty_grad(const Vec<S>& theta, const Vec<S>& weight, const Vec<S>& anchor, S scale, Vec<S>& grad) {
    const auto n = anchor.size();
    grad.head(n).array() += S(2) * scale * weight.array() * (theta.head(n) - anchor).array();
}

/// EWC: (lambda / 2) * sum over consolidated tasks of F_k (theta - theta*_k)^2.
template <class S>
struct EwcState {
    std::vector<Vec<S>> fisher;
    std::vector<Vec<S>> anchors;

    S penalty(const Vec<S>& theta, S lambda) const {
        S total = 0;
        for (std::size_t k = 0; k < fisher.size(); ++k) total += quadratic_penalty(theta, fisher[k], anchors[k], lambda / S(2));
        return total;
    }
    void add_grad(const Vec<S>& theta, S lambda, Vec<S>& grad) const {
        for (std::size_t k = 0; k < fisher.size(); ++k) add_quadratic_penalty_grad(theta, fisher[k], anchors[k], lambda / S(2), grad);
    }
};

/// Diagonal empirical Fisher: mean over samples of the squared gradient of
/// the per-sample log-likelihood. Targets carry their softmax windows.
template <class S>
Vec<S> diagonal_fisher(const Mlp<S>& net, const Mat<S>& x, const std::vector<ClassTarget>& targets) {
    Vec<S> fisher = Vec<S>::Zero(net.params().size());
    Vec<S> g;
    Mat<S> col;
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
        col = x.col(n);
        BatchObjective<S> obj;
        obj.targets = {targets[static_cast<std::size_t>(n)]};
        net.loss_and_grad(col, obj, g);
        fisher.array() += g.array().square();
    }
    if (x.cols() > 0) fisher /= static_cast<S>(x.cols());
    return fisher;
}

/// Synaptic intelligence bookkeeping. omega accumulates -g * delta per step;
/// consolidate() folds max(omega, 0) / (drift^2 + xi) into Omega.
template <class S>
struct SiState {
    Vec<S> omega;         // running path integral for the current task
    Vec<S> importance;    // Omega, consolidated
    Vec<S> anchor;        // theta* at the last consolidation
    Vec<S> task_start;    // theta at the start of the current task

    void begin_task(const Vec<S>& theta) {
        task_start = theta;
        omega = Vec<S>::Zero(theta.size());
    }
    void accumulate(const Vec<S>& grad, const Vec<S>& before, const Vec<S>& after) {
        omega.array() -= grad.array() * (after - before).array();
    }
    void consolidate(const Vec<S>& theta, S xi) {
        const auto n = theta.size();
        const auto old = importance.size();
        importance.conservativeResize(n);
        importance.tail(n - old).setZero();
        const Vec<S> drift = theta - task_start;
        importance.array() += omega.array().max(S(0)) / (drift.array().square() + xi);
        anchor = theta;
    }
    S penalty(const Vec<S>& theta, S c) const {
        if (anchor.size() == 0) return 0;
        return quadratic_penalty(theta, importance, anchor, c);
    }
    void add_grad(const Vec<S>& theta, S c, Vec<S>& grad) const {
        if (anchor.size() > 0) add_quadratic_penalty_grad(theta, importance, anchor, c, grad);
    }
};

/// GEM projection: the L2-closest g~ with <g~, g_k> >= 0 for every column
/// g_k of `refs`. Solves the dual  min_{v >= 0} 1/2 v'Qv + (G g)'v  with
/// Q = G G' by projected gradient (step 1/L, L a Gershgorin bound on Q),
/// stopping when the update falls below `tolerance`; g~ = g + G' v.
Eigen::VectorXd gem_project(const Eigen::VectorXd& g, const Eigen::MatrixXd& refs, double tolerance = 1e-6,
                            int max_iterations = 500);

/// Closed form for one constraint: g - (<g,r>/<r,r>) r when <g,r> < 0.
Eigen::VectorXd gem_project_single(const Eigen::VectorXd& g, const Eigen::VectorXd& ref);

}  // namespace nesycl
