#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nesycl/rng.hpp"
#include "nesycl/scene.hpp"

namespace nesycl {

/// One 5x5 "same" convolution + ReLU + 2x2 max-pool stage over CHW images.
struct ConvStage {
    int in_channels = 0;
    int out_channels = 0;
    int in_size = 0;  // square input side
    Eigen::MatrixXf weight;  // out_channels x (in_channels * 25)
    Eigen::VectorXf bias;

    static constexpr int kKernel = 5;
    static constexpr int kPad = 2;

    int out_size() const { return in_size / 2; }
    int input_len() const { return in_channels * in_size * in_size; }
    int output_len() const { return out_channels * out_size() * out_size(); }
};

/// Frozen convolutional feature extractor f: 64x64x3 -> R^4096.
class FeatureExtractor {
public:
    enum class Mode { RandomFrozen, Pretrained };

    /// Random fan-in scaled initialization from `seed`.
    explicit FeatureExtractor(std::uint64_t seed);

    Mode mode() const { return mode_; }
    int feature_dim() const { return stages_[1].output_len(); }

    /// Throws ShapeMismatch unless the raster is 64x64.
    Eigen::VectorXf extract(const Raster& raster) const;
    /// Column per raster.
    Eigen::MatrixXf extract_batch(std::span<const Raster> rasters) const;

    struct PretrainOptions {
        int epochs = 50;
        int batch_size = 32;
        int hidden_dim = 256;
        double learning_rate = 1e-3;
        std::uint64_t seed = 0;
    };

    /// Trains conv stages jointly with a throwaway MLP classifier on the
    /// pretrain split (plain cross-entropy), then freezes them. Returns the
    /// per-epoch mean loss.
    std::vector<double> pretrain(std::span<const Raster> rasters, std::span<const int> labels, const PretrainOptions& opt);

    /// FNV-1a over the weight bytes.
    std::uint64_t hash() const;

    const ConvStage& stage(int k) const { return stages_[static_cast<std::size_t>(k)]; }
    ConvStage& stage(int k) { return stages_[static_cast<std::size_t>(k)]; }
    void set_mode(Mode m) { mode_ = m; }

    friend bool operator==(const FeatureExtractor& a, const FeatureExtractor& b) { return a.hash() == b.hash(); }

private:
    std::array<ConvStage, 2> stages_;
    Mode mode_ = Mode::RandomFrozen;
};

/// Raster to CHW floats in [0, 1].
Eigen::VectorXf raster_to_input(const Raster& raster);

}  // namespace nesycl
