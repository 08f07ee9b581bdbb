#include "quickseg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "quickseg/errors.hpp"

namespace quickseg {

namespace {

double segment_distance(Point2 p, Point2 a, Point2 b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p.x - (a.x + t * vx);
    const double dy = p.y - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

bool polygon_contains(const std::vector<Point2>& pts, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
        const Point2& a = pts[i];
        const Point2& b = pts[j];
        if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) {
            inside = !inside;
        }
    }
    return inside;
}

std::array<std::uint8_t, 3> palette_color(int i) {
    // Golden-ratio hue walk at full saturation gives well separated colours.
    const double h = std::fmod(0.11 + i * 0.61803398875, 1.0) * 6.0;
    const double f = h - std::floor(h);
    const auto v = [](double c) { return static_cast<std::uint8_t>(std::lround(55 + 200 * c)); };
    switch (static_cast<int>(h)) {
        case 0: return {v(1), v(f), v(0)};
        case 1: return {v(1 - f), v(1), v(0)};
        case 2: return {v(0), v(1), v(f)};
        case 3: return {v(0), v(1 - f), v(1)};
        case 4: return {v(f), v(0), v(1)};
        default: return {v(1), v(0), v(1 - f)};
    }
}

const char* kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::Rect: return "rect";
        case ShapeKind::Disk: return "disk";
        case ShapeKind::Polygon: return "polygon";
    }
    return "?";
}

double required_number(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw SchemaError(path + "." + key, "missing or non-numeric");
    }
    return j[key].get<double>();
}

}  // namespace

BoundingBox SceneShape::bounds() const {
    switch (kind) {
        case ShapeKind::Rect:
            return rect;
        case ShapeKind::Disk:
            return {center.x - radius, center.y - radius, center.x + radius, center.y + radius};
        case ShapeKind::Polygon: {
            BoundingBox b{points[0].x, points[0].y, points[0].x, points[0].y};
            for (const auto& p : points) {
                b.x1 = std::min(b.x1, p.x);
                b.y1 = std::min(b.y1, p.y);
                b.x2 = std::max(b.x2, p.x);
                b.y2 = std::max(b.y2, p.y);
            }
            return b;
        }
    }
    return {};
}

bool SceneShape::contains(double x, double y) const {
    switch (kind) {
        case ShapeKind::Rect:
            return rect.contains(x, y);
        case ShapeKind::Disk: {
            const double dx = x - center.x;
            const double dy = y - center.y;
            return dx * dx + dy * dy < radius * radius;
        }
        case ShapeKind::Polygon:
            return polygon_contains(points, x, y);
    }
    return false;
}

double SceneShape::signed_distance(double x, double y) const {
    switch (kind) {
        case ShapeKind::Rect: {
            const double dx = std::max({rect.x1 - x, 0.0, x - rect.x2});
            const double dy = std::max({rect.y1 - y, 0.0, y - rect.y2});
            if (dx > 0 || dy > 0) {
                return -std::sqrt(dx * dx + dy * dy);
            }
            return std::min({x - rect.x1, rect.x2 - x, y - rect.y1, rect.y2 - y});
        }
        case ShapeKind::Disk:
            return radius - std::hypot(x - center.x, y - center.y);
        case ShapeKind::Polygon: {
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0, j = points.size() - 1; i < points.size(); j = i++) {
                d = std::min(d, segment_distance({x, y}, points[j], points[i]));
            }
            return polygon_contains(points, x, y) ? d : -d;
        }
    }
    return 0;
}

SceneShape SceneShape::transformed(double scale, double dx, double dy) const {
    SceneShape s = *this;
    s.rect = {rect.x1 * scale + dx, rect.y1 * scale + dy, rect.x2 * scale + dx, rect.y2 * scale + dy};
    s.center = {center.x * scale + dx, center.y * scale + dy};
    s.radius = radius * scale;
    for (auto& p : s.points) {
        p = {p.x * scale + dx, p.y * scale + dy};
    }
    return s;
}

void SyntheticScene::validate() const {
    if (width <= 0 || height <= 0) {
        throw InputError("scene must have positive size");
    }
    std::set<int> ids;
    for (const auto& s : shapes) {
        if (!ids.insert(s.id).second) {
            throw InputError("duplicate shape id " + std::to_string(s.id));
        }
        if (s.kind == ShapeKind::Polygon && s.points.size() < 3) {
            throw InputError("polygon shape " + std::to_string(s.id) + " needs at least 3 points");
        }
        const BoundingBox b = s.bounds();
        if (!b.valid() || b.empty()) {
            throw InputError("shape " + std::to_string(s.id) + " is degenerate");
        }
        if (b.x1 < 0 || b.y1 < 0 || b.x2 > width || b.y2 > height) {
            throw InputError("shape " + std::to_string(s.id) + " leaves the image bounds");
        }
        if (s.score < 0 || s.score > 1) {
            throw InputError("shape " + std::to_string(s.id) + " score outside [0, 1]");
        }
    }
}

SyntheticScene scene_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw SchemaError("$", "scene must be an object");
    }
    SyntheticScene scene;
    scene.width = static_cast<int>(required_number(j, "width", "$"));
    scene.height = static_cast<int>(required_number(j, "height", "$"));
    if (!j.contains("shapes") || !j["shapes"].is_array()) {
        throw SchemaError("$.shapes", "missing or not an array");
    }
    int next_id = 1;
    for (std::size_t i = 0; i < j["shapes"].size(); ++i) {
        const auto& js = j["shapes"][i];
        const std::string path = "$.shapes[" + std::to_string(i) + "]";
        if (!js.is_object() || !js.contains("type") || !js["type"].is_string()) {
            throw SchemaError(path + ".type", "missing shape type");
        }
        SceneShape s;
        const auto type = js["type"].get<std::string>();
        if (type == "rect") {
            s.kind = ShapeKind::Rect;
            s.rect = {required_number(js, "x1", path), required_number(js, "y1", path),
                      required_number(js, "x2", path), required_number(js, "y2", path)};
        } else if (type == "disk") {
            s.kind = ShapeKind::Disk;
            s.center = {required_number(js, "cx", path), required_number(js, "cy", path)};
            s.radius = required_number(js, "r", path);
        } else if (type == "polygon") {
            s.kind = ShapeKind::Polygon;
            if (!js.contains("points") || !js["points"].is_array()) {
                throw SchemaError(path + ".points", "missing or not an array");
            }
            for (const auto& p : js["points"]) {
                if (!p.is_array() || p.size() != 2) {
                    throw SchemaError(path + ".points", "each point must be [x, y]");
                }
                s.points.push_back({p[0].get<double>(), p[1].get<double>()});
            }
        } else {
            throw SchemaError(path + ".type", "unknown shape type '" + type + "'");
        }
        s.id = js.value("id", next_id);
        next_id = std::max(next_id, s.id) + 1;
        s.label = js.value("label", std::string(kind_name(s.kind)) + " " + std::to_string(s.id));
        s.score = js.value("score", 0.95);
        if (js.contains("color")) {
            const auto& c = js["color"];
            if (!c.is_array() || c.size() != 3) {
                throw SchemaError(path + ".color", "must be [r, g, b]");
            }
            s.color = {c[0].get<std::uint8_t>(), c[1].get<std::uint8_t>(), c[2].get<std::uint8_t>()};
        } else {
            s.color = palette_color(static_cast<int>(i));
        }
        scene.shapes.push_back(std::move(s));
    }
    scene.validate();
    return scene;
}

nlohmann::json scene_to_json(const SyntheticScene& s) {
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& sh : s.shapes) {
        nlohmann::json js{{"id", sh.id}, {"type", kind_name(sh.kind)}, {"label", sh.label},
                          {"color", sh.color}, {"score", sh.score}};
        switch (sh.kind) {
            case ShapeKind::Rect:
                js["x1"] = sh.rect.x1;
                js["y1"] = sh.rect.y1;
                js["x2"] = sh.rect.x2;
                js["y2"] = sh.rect.y2;
                break;
            case ShapeKind::Disk:
                js["cx"] = sh.center.x;
                js["cy"] = sh.center.y;
                js["r"] = sh.radius;
                break;
            case ShapeKind::Polygon: {
                auto pts = nlohmann::json::array();
                for (const auto& p : sh.points) {
                    pts.push_back({p.x, p.y});
                }
                js["points"] = pts;
                break;
            }
        }
        shapes.push_back(js);
    }
    return {{"width", s.width}, {"height", s.height}, {"shapes", shapes}};
}

SyntheticScene load_scene(const std::string& path) {
    const auto bytes = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("scene file " + path + " is not valid JSON: " + e.what());
    }
    return scene_from_json(j);
}

BinaryMask rasterize(const SceneShape& shape, int width, int height) {
    BinaryMask m(width, height);
    const BoundingBox b = shape.bounds().clamped(width, height);
    const int x0 = static_cast<int>(std::floor(b.x1));
    const int y0 = static_cast<int>(std::floor(b.y1));
    const int x1 = std::min(width, static_cast<int>(std::ceil(b.x2)));
    const int y1 = std::min(height, static_cast<int>(std::ceil(b.y2)));
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (shape.contains(x + 0.5, y + 0.5)) {
                m.set(x, y);
            }
        }
    }
    return m;
}

RgbImage render_scene(const SyntheticScene& scene) {
    RgbImage img(scene.width, scene.height, 24);
    for (const auto& shape : scene.shapes) {
        const BinaryMask m = rasterize(shape, scene.width, scene.height);
        for (int y = 0; y < scene.height; ++y) {
            for (int x = 0; x < scene.width; ++x) {
                if (m.get(x, y)) {
                    std::copy(shape.color.begin(), shape.color.end(), img.pixel(x, y));
                }
            }
        }
    }
    return img;
}

SyntheticScene generate_scene(std::uint64_t seed, const SceneGenOptions& opts) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto chance = [&](double p) { return uniform(0.0, 1.0) < p; };

    SyntheticScene scene{opts.width, opts.height, {}};
    const int n = std::uniform_int_distribution<int>(opts.min_shapes, opts.max_shapes)(rng);
    const double margin = 3.0;
    const double max_extent = std::min(opts.width, opts.height) * 0.3;

    auto make_shape = [&](BoundingBox region, double min_size, double max_size) {
        SceneShape s;
        const double size = uniform(min_size, max_size);
        const double cx = uniform(region.x1 + size / 2, region.x2 - size / 2);
        const double cy = uniform(region.y1 + size / 2, region.y2 - size / 2);
        const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
        if (kind == 0) {
            const double aspect = uniform(0.6, 1.0);
            const double w = chance(0.5) ? size : size * aspect;
            const double h = w == size ? size * aspect : size;
            s.kind = ShapeKind::Rect;
            s.rect = {std::round(cx - w / 2), std::round(cy - h / 2), std::round(cx + w / 2), std::round(cy + h / 2)};
        } else if (kind == 1) {
            s.kind = ShapeKind::Disk;
            s.center = {cx, cy};
            s.radius = size / 2;
        } else {
            s.kind = ShapeKind::Polygon;
            const int sides = std::uniform_int_distribution<int>(4, 6)(rng);
            const double rot = uniform(0.0, 2 * std::numbers::pi);
            for (int k = 0; k < sides; ++k) {
                const double a = rot + 2 * std::numbers::pi * k / sides;
                s.points.push_back({cx + size / 2 * std::cos(a), cy + size / 2 * std::sin(a)});
            }
        }
        return s;
    };

    auto gap_ok = [&](const BoundingBox& b, const std::vector<std::size_t>& ignore) {
        for (std::size_t i = 0; i < scene.shapes.size(); ++i) {
            if (std::find(ignore.begin(), ignore.end(), i) != ignore.end()) {
                continue;
            }
            const BoundingBox o = scene.shapes[i].bounds();
            const BoundingBox grown{o.x1 - 6, o.y1 - 6, o.x2 + 6, o.y2 + 6};
            if (intersection_area(grown, b) > 0) {
                return false;
            }
        }
        return true;
    };

    const BoundingBox frame{margin, margin, opts.width - margin, opts.height - margin};
    for (int attempt = 0; attempt < 400 && static_cast<int>(scene.shapes.size()) < n; ++attempt) {
        SceneShape s;
        bool placed = false;
        if (!scene.shapes.empty() && chance(opts.overlap_probability)) {
            const std::size_t host = std::uniform_int_distribution<std::size_t>(0, scene.shapes.size() - 1)(rng);
            const BoundingBox hb = scene.shapes[host].bounds();
            if (chance(0.5) && hb.width() > 110 && hb.height() > 110) {
                // Nested: a smaller shape well inside the host, box IoU far below 0.5.
                const double inset = std::min(hb.width(), hb.height()) * 0.3;
                const BoundingBox inner{hb.x1 + inset, hb.y1 + inset, hb.x2 - inset, hb.y2 - inset};
                const double lim = std::min(inner.width(), inner.height());
                if (lim > 30) {
                    s = make_shape(inner, 26.0, lim);
                    BoundingBox sb = s.bounds();
                    placed = box_iou(sb, hb) < 0.4 && hb.x1 <= sb.x1 && hb.y1 <= sb.y1 && sb.x2 <= hb.x2 &&
                             sb.y2 <= hb.y2;
                    bool inside = placed;
                    const BinaryMask sm = rasterize(s, opts.width, opts.height);
                    const BinaryMask hm = rasterize(scene.shapes[host], opts.width, opts.height);
                    inside = inside && intersection_count(sm, hm) == sm.count();
                    placed = inside && gap_ok(sb, {host});
                }
            } else {
                // Partial overlap straddling one corner of the host.
                const double size = uniform(40.0, max_extent);
                const double cx = chance(0.5) ? hb.x1 : hb.x2;
                const double cy = chance(0.5) ? hb.y1 : hb.y2;
                const BoundingBox region{cx - size * 0.8, cy - size * 0.8, cx + size * 0.8, cy + size * 0.8};
                if (region.x1 >= frame.x1 && region.y1 >= frame.y1 && region.x2 <= frame.x2 && region.y2 <= frame.y2) {
                    s = make_shape(region, size * 0.8, size);
                    const BoundingBox sb = s.bounds();
                    const double iou = box_iou(sb, hb);
                    const BinaryMask sm = rasterize(s, opts.width, opts.height);
                    const BinaryMask hm = rasterize(scene.shapes[host], opts.width, opts.height);
                    const std::size_t inter = intersection_count(sm, hm);
                    placed = iou > 0.02 && iou < 0.4 && inter > 20 && inter + 20 < sm.count() &&
                             inter + 20 < hm.count() && gap_ok(sb, {host});
                }
            }
        } else {
            s = make_shape(frame, 30.0, max_extent);
            placed = gap_ok(s.bounds(), {});
        }
        if (!placed) {
            continue;
        }
        const int idx = static_cast<int>(scene.shapes.size());
        s.id = idx + 1;
        s.label = std::string(kind_name(s.kind)) + " " + std::to_string(s.id);
        s.color = palette_color(idx);
        s.score = 0.99 - 0.04 * idx;
        scene.shapes.push_back(std::move(s));
    }
    scene.validate();
    return scene;
}

SyntheticScene grid_scene(int image_size, int rows, int cols) {
    SyntheticScene scene{image_size, image_size, {}};
    const double cell_w = static_cast<double>(image_size) / cols;
    const double cell_h = static_cast<double>(image_size) / rows;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            SceneShape s;
            const int idx = r * cols + c;
            s.kind = ShapeKind::Rect;
            s.id = idx + 1;
            s.rect = {std::floor(c * cell_w + cell_w * 0.1), std::floor(r * cell_h + cell_h * 0.1),
                      std::floor(c * cell_w + cell_w * 0.9), std::floor(r * cell_h + cell_h * 0.9)};
            s.label = "rect " + std::to_string(s.id);
            s.color = palette_color(idx);
            s.score = 0.95 - 0.5 * idx / static_cast<double>(rows * cols);
            scene.shapes.push_back(std::move(s));
        }
    }
    scene.validate();
    return scene;
}

}  // namespace quickseg
