#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "quickseg/geometry.hpp"
#include "quickseg/image.hpp"
#include "quickseg/mask.hpp"

namespace quickseg {

enum class ShapeKind { Rect, Disk, Polygon };

struct Point2 {
    double x = 0;
    double y = 0;
};

/// One synthetic object. Geometry lives in continuous image coordinates.
struct SceneShape {
    ShapeKind kind = ShapeKind::Rect;
    int id = 0;
    std::string label;
    std::array<std::uint8_t, 3> color{255, 255, 255};
    /// Detection confidence the mock backend reports for this shape.
    double score = 0.95;

    BoundingBox rect;            // Rect
    Point2 center;               // Disk
    double radius = 0;           // Disk
    std::vector<Point2> points;  // Polygon, either winding

    BoundingBox bounds() const;
    bool contains(double x, double y) const;
    /// Euclidean distance to the outline, positive inside.
    double signed_distance(double x, double y) const;
    /// Maps every coordinate through p -> p * scale + offset.
    SceneShape transformed(double scale, double dx, double dy) const;
};

struct SyntheticScene {
    int width = 0;
    int height = 0;
    std::vector<SceneShape> shapes;

    /// Throws InputError when a shape leaves the image or ids collide.
    void validate() const;
};

SyntheticScene scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SyntheticScene& s);
SyntheticScene load_scene(const std::string& path);

/// Pixel (x, y) is set iff its centre (x + 0.5, y + 0.5) lies inside the shape.
BinaryMask rasterize(const SceneShape& shape, int width, int height);
RgbImage render_scene(const SyntheticScene& scene);

struct SceneGenOptions {
    int width = 640;
    int height = 480;
    int min_shapes = 1;
    int max_shapes = 8;
    /// Probability that a new shape is placed nested inside, or partially over, an existing one.
    double overlap_probability = 0.35;
};

/// Deterministic random scene of rects, disks and convex polygons.
SyntheticScene generate_scene(std::uint64_t seed, const SceneGenOptions& opts = {});

/// rows x cols grid of equal squares, used for latency measurements.
SyntheticScene grid_scene(int image_size, int rows, int cols);

}  // namespace quickseg
