#include "nesycl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "nesycl/errors.hpp"

namespace nesycl {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

std::size_t element_count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

const NamedTensor& find(const std::vector<NamedTensor>& tensors, const std::string& name) {
    for (const auto& t : tensors)
        if (t.name == name) return t;
    throw Error("checkpoint: missing tensor '" + name + "'");
}

template <class Derived>
NamedTensor pack(std::string name, std::vector<int> shape, const Eigen::DenseBase<Derived>& m) {
    // Row-major element order regardless of the source storage.
    NamedTensor t{std::move(name), std::move(shape), {}};
    t.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(static_cast<float>(m(r, c)));
    return t;
}

template <class Derived>
void unpack(const NamedTensor& t, Eigen::DenseBase<Derived>&& m) {
    if (t.data.size() != static_cast<std::size_t>(m.size())) throw ShapeMismatch("checkpoint: tensor '" + t.name + "' size mismatch");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.data[k++];
}

template <class Derived>
void unpack(const NamedTensor& t, Eigen::DenseBase<Derived>& m) {
    unpack(t, std::move(m));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const std::vector<NamedTensor>& tensors) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = {{"format_version", 1}, {"dtype", "float32-le"}, {"tensors", nlohmann::json::array()}};
    std::ofstream bin(dir / "tensors.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw Error("checkpoint: cannot write " + (dir / "tensors.bin").string());
    std::size_t offset = 0;
    for (const auto& t : tensors) {
        if (element_count(t.shape) != t.data.size()) throw ShapeMismatch("checkpoint: tensor '" + t.name + "' shape/data mismatch");
        const std::size_t bytes = t.data.size() * sizeof(float);
        bin.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(bytes));
        manifest["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "float32"}, {"offset", offset}, {"bytes", bytes}});
        offset += bytes;
    }
    if (!bin) throw Error("checkpoint: write failed");
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw Error("checkpoint: missing manifest in " + dir.string());
    const auto manifest = nlohmann::json::parse(mf);
    std::ifstream bin(dir / "tensors.bin", std::ios::binary);
    if (!bin) throw Error("checkpoint: missing tensors.bin in " + dir.string());
    std::vector<NamedTensor> out;
    for (const auto& e : manifest.at("tensors")) {
        NamedTensor t;
        t.name = e.at("name").get<std::string>();
        t.shape = e.at("shape").get<std::vector<int>>();
        if (e.at("dtype").get<std::string>() != "float32") throw Error("checkpoint: unsupported dtype for '" + t.name + "'");
        t.data.resize(element_count(t.shape));
        bin.seekg(static_cast<std::streamoff>(e.at("offset").get<std::size_t>()));
        bin.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!bin) throw Error("checkpoint: truncated tensors.bin");
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<NamedTensor> to_tensors(const Mlp<float>& net) {
    const auto& s = net.shape();
    return {pack("w1", {s.hidden_dim, s.input_dim}, net.w1()), pack("b1", {s.hidden_dim}, net.b1()),
            pack("wi", {s.attr_dim, s.hidden_dim}, net.wi()), pack("bi", {s.attr_dim}, net.bi()),
            pack("head", {s.num_outputs, s.hidden_dim + 1}, net.head())};
}

Mlp<float> mlp_from_tensors(const std::vector<NamedTensor>& tensors) {
    const auto& w1 = find(tensors, "w1");
    const auto& wi = find(tensors, "wi");
    const auto& head = find(tensors, "head");
    if (w1.shape.size() != 2 || wi.shape.size() != 2 || head.shape.size() != 2) throw ShapeMismatch("checkpoint: bad MLP tensor rank");
    Mlp<float> net(MlpShape{w1.shape[1], w1.shape[0], wi.shape[0], head.shape[0]});
    unpack(w1, net.w1());
    unpack(find(tensors, "b1"), net.b1());
    unpack(wi, net.wi());
    unpack(find(tensors, "bi"), net.bi());
    unpack(head, net.head());
    return net;
}

std::vector<NamedTensor> to_tensors(const FeatureExtractor& f) {
    std::vector<NamedTensor> out;
    for (int k = 0; k < 2; ++k) {
        const auto& st = f.stage(k);
        const std::string p = "conv" + std::to_string(k);
        out.push_back(pack(p + ".weight", {st.out_channels, st.in_channels * 25}, st.weight));
        out.push_back(pack(p + ".bias", {st.out_channels}, st.bias));
    }
    Eigen::Matrix<float, 1, 1> mode;
    mode(0, 0) = f.mode() == FeatureExtractor::Mode::Pretrained ? 1.0f : 0.0f;
    out.push_back(pack("mode", {1}, mode));
    return out;
}

FeatureExtractor extractor_from_tensors(const std::vector<NamedTensor>& tensors) {
    FeatureExtractor f(0);
    for (int k = 0; k < 2; ++k) {
        auto& st = f.stage(k);
        const std::string p = "conv" + std::to_string(k);
        unpack(find(tensors, p + ".weight"), st.weight);
        unpack(find(tensors, p + ".bias"), st.bias);
    }
    const auto& mode = find(tensors, "mode");
    f.set_mode(!mode.data.empty() && mode.data[0] != 0.0f ? FeatureExtractor::Mode::Pretrained : FeatureExtractor::Mode::RandomFrozen);
    return f;
}

}  // namespace nesycl
