#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nesycl/graph.hpp"
#include "nesycl/mlp.hpp"

namespace nesycl {

inline constexpr int kAttrDim = kNumShapes + kNumColors;

struct AttributeSummary {
    std::array<int, kNumShapes> shape_counts{};
    std::array<int, kNumColors> color_counts{};

    /// Concatenated [shape counts, color counts] as real-valued targets.
    Eigen::VectorXf as_vector() const;
    friend bool operator==(const AttributeSummary&, const AttributeSummary&) = default;
};

/// Sum of one-hot shape and color encodings over the nodes of `graph`.
AttributeSummary summarize_attributes(const ConceptGraph& graph);

/// attr_dim x n matrix of summaries.
Eigen::MatrixXf attribute_targets(std::span<const ConceptGraph> graphs);

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 32;
    double lambda = 1.5;
    int hidden_dim = 256;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> epoch_loss;
};

/// Network for one task with the integration head enabled (attr_dim = 11) or not.
Mlp<float> make_reasoner(int feature_dim, int hidden_dim, int num_classes, bool integration_head = true);

/// Re-initializes theta_n, W, b and theta_i in that order; the feature
/// extractor is not part of the parameters and is never touched. The head is
/// resized to `num_classes`.
void reset_heads(Mlp<float>& params, int num_classes, Rng& rng);

/// Adam on cross-entropy + lambda * MSE(attribute head, summaries) for
/// epochs * ceil(n / batch) steps, shuffling once per epoch. `labels` index
/// rows of the head. `attr_targets` may be empty when lambda is 0.
TrainTrace train_task(Mlp<float>& params, const Eigen::MatrixXf& features, std::span<const int> labels,
                      const Eigen::MatrixXf& attr_targets, const TrainConfig& config);

/// Row-wise argmax of the logits restricted to head rows [lo, hi).
std::vector<int> predict(const Mlp<float>& params, const Eigen::MatrixXf& features, int lo, int hi);

}  // namespace nesycl
