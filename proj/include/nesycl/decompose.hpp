#pragma once

#include <array>
#include <vector>

#include "nesycl/graph.hpp"
#include "nesycl/scene.hpp"

namespace nesycl {

struct BBox {
    double x0, y0, x1, y1;
    double area() const { return (x1 - x0) * (y1 - y0); }
};

double iou(const BBox& a, const BBox& b);

struct Detection {
    BBox bbox;
    ShapeKind shape;
    ColorKind color;
    Point centroid;
};

/// Axis-aligned bounds of the painted geometry of an instance.
BBox object_bbox(const ObjectInstance& o);

/// Rotation-invariant descriptors of a component's convex hull: relative
/// amplitudes of harmonics 3, 4, 5 of the centroid-to-boundary radius profile,
/// and the isoperimetric circularity 4*pi*A/P^2.
struct ShapeFeatures {
    std::array<double, 3> harmonic;
    double circularity;
};

ShapeFeatures shape_features(const std::vector<Point>& hull);
ShapeKind classify_shape(const ShapeFeatures& f);

/// Classical detector: palette segmentation, 8-connected components, and
/// shape rules on the convex hull of each component.
std::vector<Detection> detect_objects(const Raster& raster);

/// Exact detections read from scene metadata.
std::vector<Detection> oracle_detect(const Scene& scene);

ConceptGraph build_graph(const std::vector<Detection>& detections);

enum class DecompMode { Oracle, Classical };

/// G*(x) for one sample; the classical route renders the scene first.
ConceptGraph decompose(const Scene& scene, DecompMode mode);

struct DetectionQuality {
    int true_positives = 0;
    int predicted = 0;
    int ground_truth = 0;
    double precision() const { return predicted ? static_cast<double>(true_positives) / predicted : 1.0; }
    double recall() const { return ground_truth ? static_cast<double>(true_positives) / ground_truth : 1.0; }
    DetectionQuality& operator+=(const DetectionQuality& o) {
        true_positives += o.true_positives;
        predicted += o.predicted;
        ground_truth += o.ground_truth;
        return *this;
    }
};

/// Greedy one-to-one matching at the given IoU; a match also requires equal
/// shape and color labels.
DetectionQuality match_detections(const std::vector<Detection>& predicted, const std::vector<Detection>& truth,
                                  double iou_threshold = 0.5);

}  // namespace nesycl
