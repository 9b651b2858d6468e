#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nesycl/baselines.hpp"
#include "nesycl/graph.hpp"
#include "nesycl/rng.hpp"

namespace testsupport {

using namespace nesycl;

// Random canonical graph with 1..max_nodes nodes at random positions.
inline ConceptGraph random_graph(Rng& rng, int max_nodes, int min_nodes = 1) {
    const int n = min_nodes + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_nodes - min_nodes + 1)));
    std::vector<ConceptNode> nodes;
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) {
        // small attribute alphabet so substitutions and ties are common
        nodes.push_back({static_cast<ShapeKind>(uniform_index(rng, 3)), static_cast<ColorKind>(uniform_index(rng, 3))});
        pts.push_back({uniform(rng, 0, 64), uniform(rng, 0, 64)});
    }
    return make_canonical(nodes, pts);
}

// Exhaustive GED: pad both sides with epsilon nodes to |g1| + |g2| and try
// every bijection. Shares nothing with the production search.
inline double brute_force_ged(const ConceptGraph& a, const ConceptGraph& b) {
    const int n1 = static_cast<int>(a.size()), n2 = static_cast<int>(b.size());
    const int n = n1 + n2;
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    auto bin = [](const ConceptGraph& g, int i, int j) -> std::optional<int> {
        if (i >= static_cast<int>(g.size()) || j >= static_cast<int>(g.size())) return std::nullopt;
        return g.direction(i, j);
    };
    do {
        double cost = 0;
        for (int i = 0; i < n; ++i) {
            const int j = perm[static_cast<std::size_t>(i)];
            const bool ri = i < n1, rj = j < n2;
            if (ri && rj) {
                cost += (a.nodes[i].shape != b.nodes[j].shape) + (a.nodes[i].color != b.nodes[j].color);
            } else if (ri != rj) {
                cost += 2;
            }
        }
        for (int i = 0; i < n; ++i)
            for (int k = i + 1; k < n; ++k) {
                const auto e1 = bin(a, i, k);
                const auto e2 = bin(b, perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(k)]);
                if (e1 && e2) cost += (*e1 != *e2);
                else if (e1.has_value() != e2.has_value()) cost += 1;
            }
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Linearly separable Gaussian clusters, one TaskFeatures per task.
inline std::vector<TaskFeatures> synthetic_tasks(int num_tasks, int classes, int train_per_class, int test_per_class,
                                                 int dim, std::uint64_t seed, double spread = 0.3) {
    Rng rng(seed);
    std::vector<TaskFeatures> tasks;
    int row = 0;
    for (int t = 0; t < num_tasks; ++t) {
        TaskFeatures tf;
        tf.task_id = t;
        tf.first_row = row;
        tf.num_classes = classes;
        row += classes;
        std::vector<Eigen::VectorXf> centers;
        for (int c = 0; c < classes; ++c) {
            Eigen::VectorXf m(dim);
            for (int k = 0; k < dim; ++k) m[k] = static_cast<float>(normal(rng));
            centers.push_back(m);
        }
        auto fill = [&](int per_class, Eigen::MatrixXf& x, std::vector<int>& y) {
            x.resize(dim, classes * per_class);
            int col = 0;
            for (int c = 0; c < classes; ++c)
                for (int i = 0; i < per_class; ++i, ++col) {
                    for (int k = 0; k < dim; ++k) x(k, col) = centers[c][k] + static_cast<float>(spread * normal(rng));
                    y.push_back(c);
                }
        };
        fill(train_per_class, tf.train_x, tf.train_y);
        fill(test_per_class, tf.test_x, tf.test_y);
        tasks.push_back(std::move(tf));
    }
    return tasks;
}

// Max relative error between two gradients, scaled by the larger norm.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-12});
    return (a - b).norm() / scale;
}

template <class F>
Eigen::VectorXd central_difference(const Eigen::VectorXd& x, F&& f, double h = 1e-6) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        p[i] = x[i] + h;
        const double up = f(p);
        p[i] = x[i] - h;
        const double down = f(p);
        p[i] = x[i];
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

}  // namespace testsupport
