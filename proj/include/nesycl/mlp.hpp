#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nesycl/errors.hpp"
#include "nesycl/rng.hpp"

namespace nesycl {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Dimensions of the reasoner network and the layout of its flat parameter
/// vector: [W1 (p x d) | b1 (p) | Wi (a x p) | bi (a) | head rows (p weights + bias) ...].
/// Head rows come last so that growing the head keeps every existing index.
struct MlpShape {
    int input_dim = 0;   // d
    int hidden_dim = 0;  // p
    int attr_dim = 0;    // 0 disables the integration head
    int num_outputs = 0;

    std::size_t w1_offset() const { return 0; }
    std::size_t b1_offset() const { return static_cast<std::size_t>(hidden_dim) * input_dim; }
    std::size_t wi_offset() const { return b1_offset() + hidden_dim; }
    std::size_t bi_offset() const { return wi_offset() + static_cast<std::size_t>(attr_dim) * hidden_dim; }
    std::size_t head_offset() const { return bi_offset() + attr_dim; }
    std::size_t head_row_size() const { return static_cast<std::size_t>(hidden_dim) + 1; }
    std::size_t size() const { return head_offset() + num_outputs * head_row_size(); }
    friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

template <class S>
struct MlpForward {
    Mat<S> pre;     // W1 x + b1
    Mat<S> hidden;  // relu(pre)
    Mat<S> logits;  // num_outputs x batch
    Mat<S> attr;    // attr_dim x batch
};

/// Per-sample classification target: softmax over head rows [lo, hi).
struct ClassTarget {
    int row;
    int lo;
    int hi;
};

/// Knowledge-distillation term: KL(softmax(teacher/T) || softmax(student/T))
/// over head rows [lo, hi), averaged over the batch.
template <class S>
struct DistillTerm {
    const Mat<S>* teacher_logits = nullptr;  // rows [lo, hi) x batch
    int lo = 0;
    int hi = 0;
    S temperature = 2;
    S weight = 1;
};

template <class S>
struct BatchObjective {
    std::vector<ClassTarget> targets;
    const Mat<S>* attr_targets = nullptr;  // attr_dim x batch
    S lambda = 0;
    std::optional<DistillTerm<S>> distill;
};

struct LossParts {
    double total = 0;
    double cross_entropy = 0;
    double integration = 0;
    double distill = 0;
};

template <class S>
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(MlpShape shape) : shape_(shape), theta_(Vec<S>::Zero(static_cast<Eigen::Index>(shape.size()))) {}

    const MlpShape& shape() const { return shape_; }
    Vec<S>& params() { return theta_; }
    const Vec<S>& params() const { return theta_; }

    auto w1() { return Eigen::Map<Mat<S>>(theta_.data() + shape_.w1_offset(), shape_.hidden_dim, shape_.input_dim); }
    auto w1() const { return Eigen::Map<const Mat<S>>(theta_.data() + shape_.w1_offset(), shape_.hidden_dim, shape_.input_dim); }
    auto b1() { return Eigen::Map<Vec<S>>(theta_.data() + shape_.b1_offset(), shape_.hidden_dim); }
    auto b1() const { return Eigen::Map<const Vec<S>>(theta_.data() + shape_.b1_offset(), shape_.hidden_dim); }
    auto wi() { return Eigen::Map<Mat<S>>(theta_.data() + shape_.wi_offset(), shape_.attr_dim, shape_.hidden_dim); }
    auto wi() const { return Eigen::Map<const Mat<S>>(theta_.data() + shape_.wi_offset(), shape_.attr_dim, shape_.hidden_dim); }
    auto bi() { return Eigen::Map<Vec<S>>(theta_.data() + shape_.bi_offset(), shape_.attr_dim); }
    auto bi() const { return Eigen::Map<const Vec<S>>(theta_.data() + shape_.bi_offset(), shape_.attr_dim); }
    /// Head as rows of [weights..., bias].
    auto head() {
        return Eigen::Map<RowMat<S>>(theta_.data() + shape_.head_offset(), shape_.num_outputs,
                                     static_cast<Eigen::Index>(shape_.head_row_size()));
    }
    auto head() const {
        return Eigen::Map<const RowMat<S>>(theta_.data() + shape_.head_offset(), shape_.num_outputs,
                                           static_cast<Eigen::Index>(shape_.head_row_size()));
    }

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
    void reset_trunk(Rng& rng) {
        fill_uniform(shape_.w1_offset(), shape_.b1_offset() + shape_.hidden_dim, shape_.input_dim, rng);
    }
    void reset_attr_head(Rng& rng) { fill_uniform(shape_.wi_offset(), shape_.head_offset(), shape_.hidden_dim, rng); }
    void reset_class_head(Rng& rng) { fill_uniform(shape_.head_offset(), shape_.size(), shape_.hidden_dim, rng); }

    /// Appends `extra` head rows initialized like the rest of the head.
    void grow_outputs(int extra, Rng& rng) {
        const std::size_t old = shape_.size();
        shape_.num_outputs += extra;
        theta_.conservativeResize(static_cast<Eigen::Index>(shape_.size()));
        fill_uniform(old, shape_.size(), shape_.hidden_dim, rng);
    }

    MlpForward<S> forward(const Mat<S>& x) const {
        if (x.rows() != shape_.input_dim) throw ShapeMismatch("Mlp::forward: feature dimension mismatch");
        MlpForward<S> f;
        f.pre.noalias() = w1() * x;
        f.pre.colwise() += b1();
        f.hidden = f.pre.cwiseMax(S(0));
        const auto h = head();
        f.logits.noalias() = h.leftCols(shape_.hidden_dim) * f.hidden;
        f.logits.colwise() += h.col(shape_.hidden_dim);
        if (shape_.attr_dim > 0) {
            f.attr.noalias() = wi() * f.hidden;
            f.attr.colwise() += bi();
        }
        return f;
    }

    /// Objective value and its gradient with respect to params().
    LossParts loss_and_grad(const Mat<S>& x, const BatchObjective<S>& obj, Vec<S>& grad) const {
        const auto batch = x.cols();
        if (batch == 0) throw ShapeMismatch("Mlp::loss_and_grad: empty batch");
        if (static_cast<Eigen::Index>(obj.targets.size()) != batch) throw ShapeMismatch("Mlp::loss_and_grad: target count");
        const MlpForward<S> f = forward(x);
        const S inv_b = S(1) / static_cast<S>(batch);
        LossParts parts;

        Mat<S> dlogits = Mat<S>::Zero(f.logits.rows(), batch);
        double ce = 0;
        for (Eigen::Index n = 0; n < batch; ++n) {
            const auto& t = obj.targets[static_cast<std::size_t>(n)];
            const auto z = f.logits.col(n).segment(t.lo, t.hi - t.lo);
            const S mx = z.maxCoeff();
            const Vec<S> e = (z.array() - mx).exp().matrix();
            const S sum = e.sum();
            ce += static_cast<double>(std::log(sum) + mx - f.logits(t.row, n));
            dlogits.col(n).segment(t.lo, t.hi - t.lo) = e / sum * inv_b;
            dlogits(t.row, n) -= inv_b;
        }
        parts.cross_entropy = ce / static_cast<double>(batch);

        Mat<S> dattr;
        if (shape_.attr_dim > 0) {
            dattr = Mat<S>::Zero(shape_.attr_dim, batch);
            if (obj.lambda != S(0) && obj.attr_targets) {
                const Mat<S> diff = f.attr - *obj.attr_targets;
                const S denom = static_cast<S>(batch * shape_.attr_dim);
                parts.integration = static_cast<double>(diff.squaredNorm() / denom);
                dattr = diff * (S(2) * obj.lambda / denom);
            }
        }

        if (obj.distill) {
            const auto& d = *obj.distill;
            const int width = d.hi - d.lo;
            double kl = 0;
            for (Eigen::Index n = 0; n < batch; ++n) {
                const Vec<S> zt = d.teacher_logits->col(n) / d.temperature;
                const Vec<S> zs = f.logits.col(n).segment(d.lo, width) / d.temperature;
                const Vec<S> q = softmax(zt);
                const Vec<S> p = softmax(zs);
                const Vec<S> log_q = log_softmax(zt);
                const Vec<S> log_p = log_softmax(zs);
                kl += static_cast<double>((q.array() * (log_q - log_p).array()).sum());
                dlogits.col(n).segment(d.lo, width) += (p - q) * (d.weight * inv_b / d.temperature);
            }
            parts.distill = kl / static_cast<double>(batch);
        }

        grad.setZero(theta_.size());
        auto g_head = Eigen::Map<RowMat<S>>(grad.data() + shape_.head_offset(), shape_.num_outputs,
                                            static_cast<Eigen::Index>(shape_.head_row_size()));
        g_head.leftCols(shape_.hidden_dim).noalias() = dlogits * f.hidden.transpose();
        g_head.col(shape_.hidden_dim) = dlogits.rowwise().sum();

        Mat<S> dhidden = head().leftCols(shape_.hidden_dim).transpose() * dlogits;
        if (shape_.attr_dim > 0) {
            Eigen::Map<Mat<S>>(grad.data() + shape_.wi_offset(), shape_.attr_dim, shape_.hidden_dim).noalias() =
                dattr * f.hidden.transpose();
            Eigen::Map<Vec<S>>(grad.data() + shape_.bi_offset(), shape_.attr_dim) = dattr.rowwise().sum();
            dhidden.noalias() += wi().transpose() * dattr;
        }
        const Mat<S> dpre = dhidden.cwiseProduct((f.pre.array() > S(0)).matrix().template cast<S>());
        Eigen::Map<Mat<S>>(grad.data() + shape_.w1_offset(), shape_.hidden_dim, shape_.input_dim).noalias() = dpre * x.transpose();
        Eigen::Map<Vec<S>>(grad.data() + shape_.b1_offset(), shape_.hidden_dim) = dpre.rowwise().sum();

        parts.total = parts.cross_entropy + static_cast<double>(obj.lambda) * parts.integration;
        if (obj.distill) parts.total += static_cast<double>(obj.distill->weight) * parts.distill;
        if (!std::isfinite(parts.total) || !grad.allFinite()) throw NonFiniteLoss("non-finite loss or gradient");
        return parts;
    }

    /// Objective value only (used by finite-difference checks).
    LossParts loss(const Mat<S>& x, const BatchObjective<S>& obj) const {
        Vec<S> g;
        return loss_and_grad(x, obj, g);
    }

    template <class T>
    Mlp<T> cast() const {
        Mlp<T> out(shape_);
        out.params() = theta_.template cast<T>();
        return out;
    }

    static Vec<S> softmax(const Vec<S>& z) {
        const Vec<S> e = (z.array() - z.maxCoeff()).exp().matrix();
        return e / e.sum();
    }
    static Vec<S> log_softmax(const Vec<S>& z) {
        const S mx = z.maxCoeff();
        const S lse = std::log((z.array() - mx).exp().sum()) + mx;
        return (z.array() - lse).matrix();
    }

private:
    void fill_uniform(std::size_t begin, std::size_t end, int fan_in, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = begin; i < end; ++i) theta_[static_cast<Eigen::Index>(i)] = static_cast<S>(uniform(rng, -bound, bound));
    }

    MlpShape shape_;
    Vec<S> theta_;
};

/// Adam over a flat parameter vector; state grows with the parameters.
template <class S>
class Adam {
public:
    struct Options {
        double learning_rate = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    explicit Adam(Options o = {}) : opt_(o) {}

    void step(Vec<S>& params, const Vec<S>& grad) {
        if (m_.size() != params.size()) {
            const auto old = m_.size();
            m_.conservativeResize(params.size());
            v_.conservativeResize(params.size());
            m_.tail(params.size() - old).setZero();
            v_.tail(params.size() - old).setZero();
        }
        ++t_;
        const S b1 = static_cast<S>(opt_.beta1), b2 = static_cast<S>(opt_.beta2);
        const S c1 = static_cast<S>(1.0 / (1.0 - std::pow(opt_.beta1, t_)));
        const S c2 = static_cast<S>(1.0 / (1.0 - std::pow(opt_.beta2, t_)));
        const S lr = static_cast<S>(opt_.learning_rate), eps = static_cast<S>(opt_.epsilon);
        S* p = params.data();
        S* m = m_.data();
        S* v = v_.data();
        const S* g = grad.data();
        const auto n = params.size();
        for (Eigen::Index i = 0; i < n; ++i) {
            m[i] = b1 * m[i] + (S(1) - b1) * g[i];
            v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
            p[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
        }
    }

    void reset() {
        m_.resize(0);
        v_.resize(0);
        t_ = 0;
    }

private:
    Options opt_;
    Vec<S> m_, v_;
    long t_ = 0;
};

}  // namespace nesycl
