#include "nesycl/scene.hpp"

#include <array>

namespace nesycl {

namespace {
constexpr std::array<std::string_view, kNumShapes> kShapeNames{"Square", "Triangle", "Circle", "Pentagon"};
constexpr std::array<std::string_view, kNumColors> kColorNames{"Blue", "Red", "Purple", "Green", "Yellow", "Orange", "White"};
}  // namespace

std::string_view to_string(ShapeKind s) { return kShapeNames[static_cast<int>(s)]; }
std::string_view to_string(ColorKind c) { return kColorNames[static_cast<int>(c)]; }

std::optional<ShapeKind> parse_shape(std::string_view s) {
    for (int i = 0; i < kNumShapes; ++i)
        if (kShapeNames[i] == s) return static_cast<ShapeKind>(i);
    return std::nullopt;
}

std::optional<ColorKind> parse_color(std::string_view s) {
    for (int i = 0; i < kNumColors; ++i)
        if (kColorNames[i] == s) return static_cast<ColorKind>(i);
    return std::nullopt;
}

Raster::Raster(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(3 * w * h)) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill.r;
        pixels[i + 1] = fill.g;
        pixels[i + 2] = fill.b;
    }
}

}  // namespace nesycl
