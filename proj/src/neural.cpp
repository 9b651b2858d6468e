#include "nesycl/neural.hpp"

#include <numeric>

#include "nesycl/errors.hpp"
#include "nesycl/fpenv.hpp"

namespace nesycl {

Eigen::VectorXf AttributeSummary::as_vector() const {
    Eigen::VectorXf v(kAttrDim);
    for (int k = 0; k < kNumShapes; ++k) v[k] = static_cast<float>(shape_counts[static_cast<std::size_t>(k)]);
    for (int k = 0; k < kNumColors; ++k) v[kNumShapes + k] = static_cast<float>(color_counts[static_cast<std::size_t>(k)]);
    return v;
}

AttributeSummary summarize_attributes(const ConceptGraph& graph) {
    AttributeSummary s;
    for (const auto& n : graph.nodes) {
        ++s.shape_counts[static_cast<std::size_t>(n.shape)];
        ++s.color_counts[static_cast<std::size_t>(n.color)];
    }
    return s;
}

Eigen::MatrixXf attribute_targets(std::span<const ConceptGraph> graphs) {
    Eigen::MatrixXf out(kAttrDim, static_cast<Eigen::Index>(graphs.size()));
    for (std::size_t i = 0; i < graphs.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = summarize_attributes(graphs[i]).as_vector();
    return out;
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

Mlp<float> make_reasoner(int feature_dim, int hidden_dim, int num_classes, bool integration_head) {
    return Mlp<float>(MlpShape{feature_dim, hidden_dim, integration_head ? kAttrDim : 0, num_classes});
}

void reset_heads(Mlp<float>& params, int num_classes, Rng& rng) {
    MlpShape shape = params.shape();
    shape.num_outputs = num_classes;
    params = Mlp<float>(shape);
    params.reset_trunk(rng);
    params.reset_class_head(rng);
    params.reset_attr_head(rng);
}

TrainTrace train_task(Mlp<float>& params, const Eigen::MatrixXf& features, std::span<const int> labels,
                      const Eigen::MatrixXf& attr_targets, const TrainConfig& config) {
    config.validate();
    const ScopedFlushDenormals ftz;
    const auto n = features.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeMismatch("train_task: label count mismatch");
    const bool integrate = config.lambda > 0.0 && params.shape().attr_dim > 0;
    if (integrate && attr_targets.cols() != n) throw ShapeMismatch("train_task: attribute target count mismatch");

    TrainTrace trace;
    Rng rng(derive_seed(config.seed, 0x7a1eULL));
    Adam<float> adam({config.learning_rate});
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const int outputs = params.shape().num_outputs;
    Vec<float> grad;
    Eigen::MatrixXf xb, ab;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        double total = 0;
        int batches = 0;
        for (Eigen::Index start = 0; start < n; start += config.batch_size) {
            const Eigen::Index stop = std::min<Eigen::Index>(n, start + config.batch_size);
            const Eigen::Index b = stop - start;
            xb.resize(features.rows(), b);
            if (integrate) ab.resize(kAttrDim, b);
            BatchObjective<float> obj;
            obj.targets.reserve(static_cast<std::size_t>(b));
            for (Eigen::Index k = 0; k < b; ++k) {
                const Eigen::Index i = order[static_cast<std::size_t>(start + k)];
                xb.col(k) = features.col(i);
                if (integrate) ab.col(k) = attr_targets.col(i);
                obj.targets.push_back({labels[static_cast<std::size_t>(i)], 0, outputs});
            }
            if (integrate) {
                obj.attr_targets = &ab;
                obj.lambda = static_cast<float>(config.lambda);
            }
            total += params.loss_and_grad(xb, obj, grad).total;
            ++batches;
            adam.step(params.params(), grad);
        }
        trace.epoch_loss.push_back(total / batches);
    }
    return trace;
}

std::vector<int> predict(const Mlp<float>& params, const Eigen::MatrixXf& features, int lo, int hi) {
    std::vector<int> out;
    if (features.cols() == 0) return out;
    const auto f = params.forward(features);
    out.reserve(static_cast<std::size_t>(features.cols()));
    for (Eigen::Index n = 0; n < features.cols(); ++n) {
        Eigen::Index best = 0;
        f.logits.col(n).segment(lo, hi - lo).maxCoeff(&best);
        out.push_back(lo + static_cast<int>(best));
    }
    return out;
}

}  // namespace nesycl
