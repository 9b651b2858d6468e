#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nesycl/features.hpp"
#include "nesycl/mlp.hpp"

namespace nesycl {

/// Named float tensor for the checkpoint archive.
struct NamedTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

/// Writes `<dir>/tensors.bin` (little-endian float32, concatenated in order)
/// and `<dir>/manifest.json` (name, shape, dtype, byte offset per tensor).
void save_checkpoint(const std::filesystem::path& dir, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& dir);

std::vector<NamedTensor> to_tensors(const Mlp<float>& net);
Mlp<float> mlp_from_tensors(const std::vector<NamedTensor>& tensors);

std::vector<NamedTensor> to_tensors(const FeatureExtractor& f);
FeatureExtractor extractor_from_tensors(const std::vector<NamedTensor>& tensors);

}  // namespace nesycl
