#include "nesycl/decompose.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "nesycl/scenegen.hpp"

namespace nesycl {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr int kMinComponentArea = 12;
constexpr double kBackgroundDistance = 48.0;
constexpr double kCircularityThreshold = 0.82;
constexpr double kPolygonScoreThreshold = 0.6;

int sides_of(ShapeKind s) {
    switch (s) {
        case ShapeKind::Triangle: return 3;
        case ShapeKind::Square: return 4;
        case ShapeKind::Pentagon: return 5;
        case ShapeKind::Circle: return 0;
    }
    return 0;
}

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](Point a, Point b) { return a.x == b.x && a.y == b.y; }), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

double polygon_area(const std::vector<Point>& p) {
    double a = 0;
    for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) a += p[j].x * p[i].y - p[i].x * p[j].y;
    return std::abs(a) / 2.0;
}

double polygon_perimeter(const std::vector<Point>& p) {
    double s = 0;
    for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) s += std::hypot(p[i].x - p[j].x, p[i].y - p[j].y);
    return s;
}

Point polygon_centroid(const std::vector<Point>& p) {
    double a = 0, cx = 0, cy = 0;
    for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) {
        const double f = p[j].x * p[i].y - p[i].x * p[j].y;
        a += f;
        cx += (p[j].x + p[i].x) * f;
        cy += (p[j].y + p[i].y) * f;
    }
    return {cx / (3.0 * a), cy / (3.0 * a)};
}

/// Distance from `c` to the hull boundary along direction `theta`.
double ray_to_hull(const std::vector<Point>& hull, Point c, double theta) {
    const double dx = std::cos(theta), dy = std::sin(theta);
    double best = 0.0;
    for (std::size_t i = 0, j = hull.size() - 1; i < hull.size(); j = i++) {
        const double ex = hull[i].x - hull[j].x, ey = hull[i].y - hull[j].y;
        const double den = dx * ey - dy * ex;
        if (std::abs(den) < 1e-12) continue;
        const double wx = hull[j].x - c.x, wy = hull[j].y - c.y;
        const double t = (wx * ey - wy * ex) / den;
        const double s = (wx * dy - wy * dx) / den;
        if (t > 0 && s >= -1e-9 && s <= 1 + 1e-9) best = best > 0 ? std::min(best, t) : t;
    }
    return best;
}

}  // namespace

ShapeFeatures shape_features(const std::vector<Point>& hull) {
    ShapeFeatures f{};
    if (hull.size() < 3) return f;
    const Point c = polygon_centroid(hull);
    constexpr int kRays = 360;
    std::array<double, kRays> radius{};
    double mean = 0;
    for (int k = 0; k < kRays; ++k) {
        radius[k] = ray_to_hull(hull, c, 2.0 * std::numbers::pi * k / kRays);
        mean += radius[k];
    }
    mean /= kRays;
    for (int h = 3; h <= 5; ++h) {
        double re = 0, im = 0;
        for (int k = 0; k < kRays; ++k) {
            const double a = 2.0 * std::numbers::pi * h * k / kRays;
            re += radius[k] * std::cos(a);
            im -= radius[k] * std::sin(a);
        }
        f.harmonic[h - 3] = std::hypot(re, im) / kRays / mean;
    }
    f.circularity = 4.0 * std::numbers::pi * polygon_area(hull) / std::pow(polygon_perimeter(hull), 2);
    return f;
}

ShapeKind classify_shape(const ShapeFeatures& f) {
    // Relative amplitude of harmonic n in the radial profile of a regular n-gon
    // rasterized at the generator's scales (median over renders).
    constexpr std::array<double, 3> kTypical{0.115, 0.052, 0.028};
    constexpr std::array<ShapeKind, 3> kPolygon{ShapeKind::Triangle, ShapeKind::Square, ShapeKind::Pentagon};
    int best = 0;
    double best_score = 0;
    for (int k = 0; k < 3; ++k) {
        const double score = f.harmonic[k] / kTypical[k];
        if (score > best_score) {
            best_score = score;
            best = k;
        }
    }
    if (best_score < kPolygonScoreThreshold && f.circularity > kCircularityThreshold) return ShapeKind::Circle;
    return kPolygon[best];
}

namespace {

int nearest_palette(Rgb c) {
    int best = -1;
    double best_d = kBackgroundDistance;
    for (int k = 0; k < kNumColors; ++k) {
        const Rgb p = kPalette[k];
        const double d = std::sqrt(std::pow(c.r - p.r, 2) + std::pow(c.g - p.g, 2) + std::pow(c.b - p.b, 2));
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
    const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

BBox object_bbox(const ObjectInstance& o) {
    const double r = object_radius(o);
    const int sides = sides_of(o.shape);
    if (sides == 0) return {o.cx - r, o.cy - r, o.cx + r, o.cy + r};
    BBox b{1e9, 1e9, -1e9, -1e9};
    for (int k = 0; k < sides; ++k) {
        const double a = (90.0 + o.rotation + 360.0 * k / sides) * kDeg;
        const double x = o.cx + r * std::cos(a), y = o.cy - r * std::sin(a);
        b = {std::min(b.x0, x), std::min(b.y0, y), std::max(b.x1, x), std::max(b.y1, y)};
    }
    return b;
}

std::vector<Detection> detect_objects(const Raster& raster) {
    const int w = raster.width, h = raster.height;
    std::vector<int> label(static_cast<std::size_t>(w * h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) label[y * w + x] = nearest_palette(raster.at(x, y));

    std::vector<int> component(label.size(), -1);
    std::vector<Detection> out;
    std::vector<int> stack;
    for (int start = 0; start < w * h; ++start) {
        if (label[start] < 0 || component[start] >= 0) continue;
        const int color = label[start];
        const int cid = start;
        std::vector<int> members;
        stack.push_back(start);
        component[start] = cid;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            members.push_back(p);
            const int px = p % w, py = p / w;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = px + dx, ny = py + dy;
                    if ((dx || dy) && nx >= 0 && ny >= 0 && nx < w && ny < h) {
                        const int q = ny * w + nx;
                        if (label[q] == color && component[q] < 0) {
                            component[q] = cid;
                            stack.push_back(q);
                        }
                    }
                }
        }
        if (static_cast<int>(members.size()) < kMinComponentArea) continue;

        std::vector<Point> corners;
        corners.reserve(members.size());
        int x0 = w, y0 = h, x1 = 0, y1 = 0;
        for (int p : members) {
            const int px = p % w, py = p / w;
            x0 = std::min(x0, px);
            y0 = std::min(y0, py);
            x1 = std::max(x1, px + 1);
            y1 = std::max(y1, py + 1);
            corners.push_back({px + 0.5, py + 0.5});
        }
        const auto hull = convex_hull(std::move(corners));
        Detection d;
        d.bbox = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1), static_cast<double>(y1)};
        d.color = static_cast<ColorKind>(color);
        d.shape = classify_shape(shape_features(hull));
        d.centroid = polygon_centroid(hull);
        out.push_back(d);
    }
    return out;
}

std::vector<Detection> oracle_detect(const Scene& scene) {
    std::vector<Detection> out;
    out.reserve(scene.objects.size());
    for (const auto& o : scene.objects) out.push_back({object_bbox(o), o.shape, o.color, {o.cx, o.cy}});
    return out;
}

ConceptGraph build_graph(const std::vector<Detection>& detections) {
    std::vector<ConceptNode> nodes;
    std::vector<Point> centroids;
    for (const auto& d : detections) {
        nodes.push_back({d.shape, d.color});
        centroids.push_back(d.centroid);
    }
    return make_canonical(nodes, centroids);
}

ConceptGraph decompose(const Scene& scene, DecompMode mode) {
    if (mode == DecompMode::Oracle) return build_graph(oracle_detect(scene));
    return build_graph(detect_objects(render(scene)));
}

DetectionQuality match_detections(const std::vector<Detection>& predicted, const std::vector<Detection>& truth,
                                  double iou_threshold) {
    DetectionQuality q;
    q.predicted = static_cast<int>(predicted.size());
    q.ground_truth = static_cast<int>(truth.size());
    std::vector<bool> used(truth.size(), false);
    for (const auto& p : predicted) {
        int best = -1;
        double best_iou = iou_threshold;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (used[t] || truth[t].shape != p.shape || truth[t].color != p.color) continue;
            const double v = iou(p.bbox, truth[t].bbox);
            if (v >= best_iou) {
                best_iou = v;
                best = static_cast<int>(t);
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            ++q.true_positives;
        }
    }
    return q;
}

}  // namespace nesycl
