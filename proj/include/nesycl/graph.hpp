#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "nesycl/scene.hpp"

namespace nesycl {

struct ConceptNode {
    ShapeKind shape;
    ColorKind color;
    friend auto operator<=>(const ConceptNode&, const ConceptNode&) = default;
};

/// Direction of centroid(to) - centroid(from), quantized into 45-degree sectors.
struct RelationEdge {
    int from_idx;
    int to_idx;
    int direction_bin;  // 0..7, bin 0 centered on +x, counter-clockwise (image y points down)
    friend auto operator<=>(const RelationEdge&, const RelationEdge&) = default;
};

/// Complete graph over detected objects. Edges are stored once per unordered
/// pair with from_idx < to_idx, sorted by (from_idx, to_idx).
struct ConceptGraph {
    std::vector<ConceptNode> nodes;
    std::vector<RelationEdge> edges;

    std::size_t size() const { return nodes.size(); }
    /// Bin of the edge i -> j (either orientation).
    int direction(int i, int j) const;
    friend auto operator<=>(const ConceptGraph&, const ConceptGraph&) = default;
};

struct Point {
    double x, y;
};

/// Quantized direction of the vector (dx, dy) in image coordinates. Angles
/// within 3 degrees of a sector boundary are ties and round toward the lower
/// bin, and
/// direction_bin(-dx, -dy) == (direction_bin(dx, dy) + 4) % 8 always holds.
int direction_bin(double dx, double dy);

/// Canonicalizes nodes + pairwise bins: nodes sorted by (shape, color); nodes
/// with identical attributes are ordered to give the lexicographically smallest
/// edge-bin sequence, so isomorphic graphs have identical representations.
ConceptGraph make_canonical(const std::vector<ConceptNode>& nodes, const std::vector<Point>& centroids);

/// Compact canonical text form, e.g. "2:Circle/Blue,0:Square/Red|0-1:3". Used as
/// the tie-break key and as a hash key.
std::string canonical_string(const ConceptGraph& g);

nlohmann::json to_json(const ConceptGraph& g);
ConceptGraph graph_from_json(const nlohmann::json& j);

}  // namespace nesycl
