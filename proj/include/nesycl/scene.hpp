#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nesycl {

enum class ShapeKind : std::uint8_t { Square = 0, Triangle = 1, Circle = 2, Pentagon = 3 };
enum class ColorKind : std::uint8_t { Blue = 0, Red = 1, Purple = 2, Green = 3, Yellow = 4, Orange = 5, White = 6 };

inline constexpr int kNumShapes = 4;
inline constexpr int kNumColors = 7;

struct Rgb {
    std::uint8_t r, g, b;
    friend constexpr bool operator==(Rgb, Rgb) = default;
};

inline constexpr std::array<Rgb, kNumColors> kPalette{{
    {30, 60, 255},    // Blue
    {230, 20, 20},    // Red
    {150, 40, 190},   // Purple
    {20, 170, 40},    // Green
    {250, 240, 30},   // Yellow
    {255, 140, 0},    // Orange
    {255, 255, 255},  // White
}};

/// Not a palette color; far enough from all of them to be separated by thresholding.
inline constexpr Rgb kBackground{60, 60, 60};

constexpr Rgb rgb_of(ColorKind c) { return kPalette[static_cast<int>(c)]; }

std::string_view to_string(ShapeKind s);
std::string_view to_string(ColorKind c);
std::optional<ShapeKind> parse_shape(std::string_view s);
std::optional<ColorKind> parse_color(std::string_view s);

inline constexpr int kCanvasWidth = 64;
inline constexpr int kCanvasHeight = 64;
inline constexpr double kRingRadius = 20.0;
/// Circumradius of every shape at scale 1.
inline constexpr double kBaseObjectRadius = 5.5;
inline constexpr int kAngleBins = 8;

struct RingObject {
    ShapeKind shape;
    ColorKind color;
    int angle_degrees;  // multiple of 45
    friend bool operator==(const RingObject&, const RingObject&) = default;
};

struct ClassSchema {
    int class_id = 0;
    ShapeKind center_shape = ShapeKind::Square;
    ColorKind center_color = ColorKind::Blue;
    std::vector<RingObject> ring;  // 1..4 entries
    double ring_radius = kRingRadius;
    friend bool operator==(const ClassSchema&, const ClassSchema&) = default;
};

struct ObjectInstance {
    ShapeKind shape;
    ColorKind color;
    double cx, cy;
    double scale;
    double rotation;  // degrees
    bool filled;
    int stroke_width;
    friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

struct Scene {
    int class_id = 0;
    std::vector<ObjectInstance> objects;  // first entry is the schema center
    int width = kCanvasWidth;
    int height = kCanvasHeight;
    friend bool operator==(const Scene&, const Scene&) = default;
};

/// Interleaved 8-bit RGB raster, row-major.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(int w, int h, Rgb fill);
    Rgb at(int x, int y) const {
        const auto i = 3 * (static_cast<std::size_t>(y) * width + x);
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        const auto i = 3 * (static_cast<std::size_t>(y) * width + x);
        pixels[i] = c.r;
        pixels[i + 1] = c.g;
        pixels[i + 2] = c.b;
    }
    friend bool operator==(const Raster&, const Raster&) = default;
};

struct Sample {
    Scene scene;
    int label = 0;
    int task_id = 0;
    int index = 0;  // per-class sample index; train and test use disjoint ranges
};

}  // namespace nesycl
