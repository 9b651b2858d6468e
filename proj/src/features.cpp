#include "nesycl/features.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "nesycl/errors.hpp"
#include "nesycl/fpenv.hpp"
#include "nesycl/mlp.hpp"

namespace nesycl {

namespace {

constexpr int kK = ConvStage::kKernel;
constexpr int kP = ConvStage::kPad;

/// (C*25) x (H*W) patch matrix of a CHW image with zero padding.
void im2col(const float* in, int channels, int size, Eigen::MatrixXf& cols) {
    cols.setZero(channels * kK * kK, size * size);
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < kK; ++ky)
            for (int kx = 0; kx < kK; ++kx) {
                const int row = (c * kK + ky) * kK + kx;
                for (int y = 0; y < size; ++y) {
                    const int sy = y + ky - kP;
                    if (sy < 0 || sy >= size) continue;
                    for (int x = 0; x < size; ++x) {
                        const int sx = x + kx - kP;
                        if (sx < 0 || sx >= size) continue;
                        cols(row, y * size + x) = in[(c * size + sy) * size + sx];
                    }
                }
            }
}

void col2im(const Eigen::MatrixXf& cols, int channels, int size, float* out) {
    std::fill(out, out + channels * size * size, 0.0f);
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < kK; ++ky)
            for (int kx = 0; kx < kK; ++kx) {
                const int row = (c * kK + ky) * kK + kx;
                for (int y = 0; y < size; ++y) {
                    const int sy = y + ky - kP;
                    if (sy < 0 || sy >= size) continue;
                    for (int x = 0; x < size; ++x) {
                        const int sx = x + kx - kP;
                        if (sx < 0 || sx >= size) continue;
                        out[(c * size + sy) * size + sx] += cols(row, y * size + x);
                    }
                }
            }
}

struct StageCache {
    Eigen::MatrixXf cols;
    Eigen::MatrixXf act;             // relu(conv), out_channels x (size*size)
    std::vector<int> argmax;         // pooled index -> flat index into act
};

Eigen::VectorXf stage_forward(const ConvStage& s, const float* in, StageCache* cache) {
    Eigen::MatrixXf local_cols;
    Eigen::MatrixXf& cols = cache ? cache->cols : local_cols;
    im2col(in, s.in_channels, s.in_size, cols);
    Eigen::MatrixXf act = s.weight * cols;
    act.colwise() += s.bias;
    act = act.cwiseMax(0.0f);
    const int n = s.in_size, m = s.out_size();
    Eigen::VectorXf out(s.out_channels * m * m);
    if (cache) cache->argmax.assign(static_cast<std::size_t>(out.size()), 0);
    for (int c = 0; c < s.out_channels; ++c)
        for (int y = 0; y < m; ++y)
            for (int x = 0; x < m; ++x) {
                float best = -1.0f;
                int best_idx = 0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = (2 * y + dy) * n + 2 * x + dx;
                        if (act(c, idx) > best) {
                            best = act(c, idx);
                            best_idx = idx;
                        }
                    }
                const int o = (c * m + y) * m + x;
                out[o] = best;
                if (cache) cache->argmax[static_cast<std::size_t>(o)] = c * n * n + best_idx;
            }
    if (cache) cache->act = std::move(act);
    return out;
}

/// Accumulates weight/bias gradients; returns the input gradient if requested.
void stage_backward(const ConvStage& s, const StageCache& cache, const Eigen::VectorXf& dout, Eigen::MatrixXf& dweight,
                    Eigen::VectorXf& dbias, float* din) {
    const int n = s.in_size;
    Eigen::MatrixXf dact = Eigen::MatrixXf::Zero(s.out_channels, n * n);
    for (Eigen::Index o = 0; o < dout.size(); ++o) {
        const int flat = cache.argmax[static_cast<std::size_t>(o)];
        const int c = flat / (n * n), idx = flat % (n * n);
        if (cache.act(c, idx) > 0.0f) dact(c, idx) += dout[o];
    }
    dweight.noalias() += dact * cache.cols.transpose();
    dbias += dact.rowwise().sum();
    if (din) {
        const Eigen::MatrixXf dcols = s.weight.transpose() * dact;
        col2im(dcols, s.in_channels, n, din);
    }
}

void init_stage(ConvStage& s, Rng& rng) {
    const int fan_in = s.in_channels * kK * kK;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    s.weight.resize(s.out_channels, fan_in);
    s.bias.resize(s.out_channels);
    for (Eigen::Index i = 0; i < s.weight.size(); ++i) s.weight.data()[i] = static_cast<float>(uniform(rng, -bound, bound));
    for (Eigen::Index i = 0; i < s.bias.size(); ++i) s.bias[i] = static_cast<float>(uniform(rng, -bound, bound));
}

}  // namespace

Eigen::VectorXf raster_to_input(const Raster& raster) {
    const int hw = raster.width * raster.height;
    Eigen::VectorXf v(3 * hw);
    for (int i = 0; i < hw; ++i)
        for (int c = 0; c < 3; ++c) v[c * hw + i] = raster.pixels[static_cast<std::size_t>(3 * i + c)] / 255.0f;
    return v;
}

FeatureExtractor::FeatureExtractor(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xfea7ULL));
    stages_[0].in_channels = 3;
    stages_[0].out_channels = 8;
    stages_[0].in_size = kCanvasWidth;
    stages_[1].in_channels = 8;
    stages_[1].out_channels = 16;
    stages_[1].in_size = kCanvasWidth / 2;
    for (auto& s : stages_) init_stage(s, rng);
}

Eigen::VectorXf FeatureExtractor::extract(const Raster& raster) const {
    if (raster.width != kCanvasWidth || raster.height != kCanvasHeight)
        throw ShapeMismatch("extract_features: raster must be 64x64");
    const Eigen::VectorXf in = raster_to_input(raster);
    const Eigen::VectorXf h1 = stage_forward(stages_[0], in.data(), nullptr);
    return stage_forward(stages_[1], h1.data(), nullptr);
}

Eigen::MatrixXf FeatureExtractor::extract_batch(std::span<const Raster> rasters) const {
    Eigen::MatrixXf out(feature_dim(), static_cast<Eigen::Index>(rasters.size()));
    for (std::size_t i = 0; i < rasters.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = extract(rasters[i]);
    return out;
}

std::vector<double> FeatureExtractor::pretrain(std::span<const Raster> rasters, std::span<const int> labels,
                                               const PretrainOptions& opt) {
    if (rasters.size() != labels.size()) throw ShapeMismatch("pretrain: raster/label count mismatch");
    std::vector<double> trace;
    mode_ = Mode::Pretrained;
    if (rasters.empty() || opt.epochs <= 0) return trace;

    // Dense label ids.
    std::vector<int> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::vector<int> dense(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        dense[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());

    const ScopedFlushDenormals ftz;
    Rng rng(derive_seed(opt.seed, 0x9e7aULL));
    MlpShape shape{feature_dim(), opt.hidden_dim, 0, static_cast<int>(classes.size())};
    Mlp<float> head(shape);
    head.reset_trunk(rng);
    head.reset_class_head(rng);

    // Conv parameters are packed into one flat vector for their own Adam instance.
    auto pack = [&](Eigen::VectorXf& v) {
        std::size_t n = 0;
        for (auto& s : stages_) n += static_cast<std::size_t>(s.weight.size() + s.bias.size());
        v.resize(static_cast<Eigen::Index>(n));
        Eigen::Index o = 0;
        for (auto& s : stages_) {
            std::memcpy(v.data() + o, s.weight.data(), sizeof(float) * static_cast<std::size_t>(s.weight.size()));
            o += s.weight.size();
            std::memcpy(v.data() + o, s.bias.data(), sizeof(float) * static_cast<std::size_t>(s.bias.size()));
            o += s.bias.size();
        }
    };
    auto unpack = [&](const Eigen::VectorXf& v) {
        Eigen::Index o = 0;
        for (auto& s : stages_) {
            std::memcpy(s.weight.data(), v.data() + o, sizeof(float) * static_cast<std::size_t>(s.weight.size()));
            o += s.weight.size();
            std::memcpy(s.bias.data(), v.data() + o, sizeof(float) * static_cast<std::size_t>(s.bias.size()));
            o += s.bias.size();
        }
    };
    Eigen::VectorXf conv_params;
    pack(conv_params);
    Adam<float> conv_opt({opt.learning_rate});
    Adam<float> head_opt({opt.learning_rate});

    std::vector<Eigen::VectorXf> inputs;
    inputs.reserve(rasters.size());
    for (const auto& r : rasters) inputs.push_back(raster_to_input(r));

    std::vector<std::size_t> order(rasters.size());
    std::iota(order.begin(), order.end(), 0);
    Vec<float> head_grad;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(opt.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
            const auto bsz = static_cast<Eigen::Index>(stop - start);
            std::vector<StageCache> c1(static_cast<std::size_t>(bsz)), c2(static_cast<std::size_t>(bsz));
            std::vector<Eigen::VectorXf> h1(static_cast<std::size_t>(bsz));
            Eigen::MatrixXf feats(feature_dim(), bsz);
            BatchObjective<float> obj;
            for (Eigen::Index b = 0; b < bsz; ++b) {
                const std::size_t i = order[start + static_cast<std::size_t>(b)];
                h1[static_cast<std::size_t>(b)] = stage_forward(stages_[0], inputs[i].data(), &c1[static_cast<std::size_t>(b)]);
                feats.col(b) = stage_forward(stages_[1], h1[static_cast<std::size_t>(b)].data(), &c2[static_cast<std::size_t>(b)]);
                obj.targets.push_back({dense[i], 0, shape.num_outputs});
            }
            const LossParts parts = head.loss_and_grad(feats, obj, head_grad);
            epoch_loss += parts.total;
            ++batches;

            // Gradient w.r.t. features: recompute through the first dense layer.
            const MlpForward<float> f = head.forward(feats);
            Eigen::MatrixXf dlogits = Eigen::MatrixXf::Zero(f.logits.rows(), bsz);
            for (Eigen::Index n = 0; n < bsz; ++n) {
                const Eigen::VectorXf p = Mlp<float>::softmax(f.logits.col(n));
                dlogits.col(n) = p / static_cast<float>(bsz);
                dlogits(obj.targets[static_cast<std::size_t>(n)].row, n) -= 1.0f / static_cast<float>(bsz);
            }
            Eigen::MatrixXf dhidden = head.head().leftCols(shape.hidden_dim).transpose() * dlogits;
            dhidden = dhidden.cwiseProduct((f.pre.array() > 0.0f).matrix().cast<float>());
            const Eigen::MatrixXf dfeats = head.w1().transpose() * dhidden;

            std::array<Eigen::MatrixXf, 2> dw{Eigen::MatrixXf::Zero(stages_[0].weight.rows(), stages_[0].weight.cols()),
                                              Eigen::MatrixXf::Zero(stages_[1].weight.rows(), stages_[1].weight.cols())};
            std::array<Eigen::VectorXf, 2> db{Eigen::VectorXf::Zero(stages_[0].out_channels),
                                              Eigen::VectorXf::Zero(stages_[1].out_channels)};
            Eigen::VectorXf dh1(stages_[1].input_len());
            for (Eigen::Index b = 0; b < bsz; ++b) {
                stage_backward(stages_[1], c2[static_cast<std::size_t>(b)], dfeats.col(b), dw[1], db[1], dh1.data());
                stage_backward(stages_[0], c1[static_cast<std::size_t>(b)], dh1, dw[0], db[0], nullptr);
            }
            Eigen::VectorXf conv_grad(conv_params.size());
            Eigen::Index o = 0;
            for (int k = 0; k < 2; ++k) {
                conv_grad.segment(o, dw[k].size()) = Eigen::Map<Eigen::VectorXf>(dw[k].data(), dw[k].size());
                o += dw[k].size();
                conv_grad.segment(o, db[k].size()) = db[k];
                o += db[k].size();
            }
            head_opt.step(head.params(), head_grad);
            conv_opt.step(conv_params, conv_grad);
            unpack(conv_params);
        }
        trace.push_back(epoch_loss / static_cast<double>(batches));
    }
    return trace;
}

std::uint64_t FeatureExtractor::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&](const float* p, Eigen::Index n) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(float); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& s : stages_) {
        feed(s.weight.data(), s.weight.size());
        feed(s.bias.data(), s.bias.size());
    }
    return h;
}

}  // namespace nesycl
