#include "nesycl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "nesycl/errors.hpp"

namespace nesycl {

int ConceptGraph::direction(int i, int j) const {
    const int n = static_cast<int>(nodes.size());
    const int a = std::min(i, j);
    const int b = std::max(i, j);
    // Edges are sorted by (from, to): offset of pair (a, b) in the upper triangle.
    const int offset = a * n - a * (a + 1) / 2 + (b - a - 1);
    const int bin = edges[static_cast<std::size_t>(offset)].direction_bin;
    return i < j ? bin : (bin + 4) % 8;
}

namespace {

// Pixel-level centroid error of the classical detector stays below this, so
// boundary ties at u = 0 are recovered from rasters too.
constexpr double kTieToleranceDeg = 3.0;

int half_plane_bin(double dx, double dy) {
    // Angle measured counter-clockwise with y pointing up.
    double deg = std::atan2(-dy, dx) * 180.0 / std::numbers::pi;
    if (deg < 0.0) deg += 360.0;
    // Angles within the tolerance of a boundary are ties and go to the lower bin.
    const int bin = static_cast<int>(std::ceil((deg - 22.5 - kTieToleranceDeg) / 45.0));
    return ((bin % 8) + 8) % 8;
}

}  // namespace

int direction_bin(double dx, double dy) {
    // Evaluate only one orientation of each line so that reversal is exactly +4.
    const bool canonical = dx > 0.0 || (dx == 0.0 && dy < 0.0);
    if (canonical || (dx == 0.0 && dy == 0.0)) return half_plane_bin(dx, dy);
    return (half_plane_bin(-dx, -dy) + 4) % 8;
}

ConceptGraph make_canonical(const std::vector<ConceptNode>& nodes, const std::vector<Point>& centroids) {
    const int n = static_cast<int>(nodes.size());
    if (centroids.size() != nodes.size()) throw ShapeMismatch("make_canonical: node/centroid count mismatch");

    // Raw pairwise bins in input order.
    std::vector<int> raw(static_cast<std::size_t>(n * n), 0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const int b = direction_bin(centroids[j].x - centroids[i].x, centroids[j].y - centroids[i].y);
            raw[i * n + j] = b;
            raw[j * n + i] = (b + 4) % 8;
        }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return nodes[a] < nodes[b]; });

    auto edge_sequence = [&](const std::vector<int>& perm) {
        std::vector<int> seq;
        seq.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) seq.push_back(raw[perm[i] * n + perm[j]]);
        return seq;
    };

    // Enumerate permutations within each run of identical attributes and keep
    // the smallest edge sequence.
    std::vector<std::pair<int, int>> runs;
    for (int i = 0; i < n;) {
        int j = i + 1;
        while (j < n && nodes[order[j]] == nodes[order[i]]) ++j;
        if (j - i > 1) runs.emplace_back(i, j);
        i = j;
    }
    std::vector<int> best = order;
    if (!runs.empty()) {
        std::vector<int> best_seq = edge_sequence(order);
        std::vector<int> perm = order;
        for (auto [lo, hi] : runs) std::sort(perm.begin() + lo, perm.begin() + hi);
        // Odometer over the per-run permutations.
        while (true) {
            auto seq = edge_sequence(perm);
            if (seq < best_seq) {
                best_seq = std::move(seq);
                best = perm;
            }
            std::size_t r = 0;
            for (; r < runs.size(); ++r) {
                auto [lo, hi] = runs[r];
                if (std::next_permutation(perm.begin() + lo, perm.begin() + hi)) break;
            }
            if (r == runs.size()) break;
        }
    }

    ConceptGraph g;
    g.nodes.reserve(nodes.size());
    for (int idx : best) g.nodes.push_back(nodes[idx]);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.edges.push_back({i, j, raw[best[i] * n + best[j]]});
    return g;
}

std::string canonical_string(const ConceptGraph& g) {
    std::ostringstream os;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (i) os << ',';
        os << static_cast<int>(g.nodes[i].shape) << static_cast<int>(g.nodes[i].color);
    }
    os << '|';
    for (const auto& e : g.edges) os << e.direction_bin;
    return os.str();
}

nlohmann::json to_json(const ConceptGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : g.nodes) nodes.push_back({{"shape", to_string(n.shape)}, {"color", to_string(n.color)}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges) edges.push_back({e.from_idx, e.to_idx, e.direction_bin});
    return {{"nodes", nodes}, {"edges", edges}};
}

ConceptGraph graph_from_json(const nlohmann::json& j) {
    ConceptGraph g;
    for (const auto& n : j.at("nodes")) {
        auto s = parse_shape(n.at("shape").get<std::string>());
        auto c = parse_color(n.at("color").get<std::string>());
        if (!s || !c) throw Error("graph_from_json: unknown shape or color");
        g.nodes.push_back({*s, *c});
    }
    for (const auto& e : j.at("edges")) g.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
    const auto n = g.nodes.size();
    if (g.edges.size() != n * (n - 1) / 2) throw Error("graph_from_json: graph is not complete");
    return g;
}

}  // namespace nesycl
