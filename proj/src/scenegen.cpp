#include "nesycl/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "nesycl/errors.hpp"

namespace nesycl {

namespace {

constexpr int kMaxSchemaRetries = 10'000;
constexpr int kMaxJitterRetries = 10'000;
constexpr double kDeg = std::numbers::pi / 180.0;

ShapeKind random_shape(Rng& rng) { return static_cast<ShapeKind>(uniform_index(rng, kNumShapes)); }
ColorKind random_color(Rng& rng) { return static_cast<ColorKind>(uniform_index(rng, kNumColors)); }

std::vector<int> free_angles(const ClassSchema& s) {
    std::vector<int> out;
    for (int a = 0; a < 360; a += 45)
        if (std::none_of(s.ring.begin(), s.ring.end(), [a](const RingObject& r) { return r.angle_degrees == a; }))
            out.push_back(a);
    return out;
}

ClassSchema draw_schema(Rng& rng, int min_ring = 1) {
    ClassSchema s;
    s.center_shape = random_shape(rng);
    s.center_color = random_color(rng);
    const int ring_count = min_ring + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(5 - min_ring)));
    std::vector<int> angles{0, 45, 90, 135, 180, 225, 270, 315};
    shuffle(angles.begin(), angles.end(), rng);
    for (int k = 0; k < ring_count; ++k) s.ring.push_back({random_shape(rng), random_color(rng), angles[k]});
    std::sort(s.ring.begin(), s.ring.end(), [](const RingObject& a, const RingObject& b) { return a.angle_degrees < b.angle_degrees; });
    return s;
}

std::size_t pick_kind(const std::array<double, 5>& weights, Rng& rng) {
    double total = 0;
    for (double w : weights) total += w;
    double x = uniform(rng, 0.0, total);
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (x < weights[k]) return k;
        x -= weights[k];
    }
    return weights.size() - 1;
}

void apply_mutation(ClassSchema& s, Rng& rng, const std::array<double, 5>& weights) {
    const auto pick = [&] { return static_cast<std::size_t>(uniform_index(rng, s.ring.size())); };
    switch (pick_kind(weights, rng)) {
        case 0: s.ring[pick()].color = random_color(rng); break;
        case 1: s.ring[pick()].shape = random_shape(rng); break;
        case 2: {
            auto fa = free_angles(s);
            if (!fa.empty()) s.ring[pick()].angle_degrees = fa[uniform_index(rng, fa.size())];
            break;
        }
        case 3: {
            auto fa = free_angles(s);
            if (s.ring.size() < 4 && !fa.empty())
                s.ring.push_back({random_shape(rng), random_color(rng), fa[uniform_index(rng, fa.size())]});
            break;
        }
        default:
            if (s.ring.size() > 1) s.ring.erase(s.ring.begin() + static_cast<std::ptrdiff_t>(pick()));
            break;
    }
    std::sort(s.ring.begin(), s.ring.end(), [](const RingObject& a, const RingObject& b) { return a.angle_degrees < b.angle_degrees; });
}

bool inside_canvas(double cx, double cy, double r, int w, int h) {
    return cx - r >= 0.0 && cy - r >= 0.0 && cx + r <= w && cy + r <= h;
}

}  // namespace

void StreamConfig::validate() const {
    if (num_tasks < 1) throw ConfigError("num_tasks must be >= 1");
    if (classes_per_task < 1) throw ConfigError("classes_per_task must be >= 1");
    if (train_per_class < 1) throw ConfigError("train_per_class must be >= 1");
    if (test_per_class < 0) throw ConfigError("test_per_class must be >= 0");
    if (!(noise_scale >= 0.0)) throw ConfigError("noise_scale must be >= 0");
    if (pretrain_classes < 0) throw ConfigError("pretrain_classes must be >= 0");
    if (max_mutations < 1) throw ConfigError("max_mutations must be >= 1");
    if (motif_min_ring < 1 || motif_min_ring > 4) throw ConfigError("motif_min_ring must be in [1, 4]");
    if (motif_drift < 0) throw ConfigError("motif_drift must be >= 0");
    double total = 0;
    for (double w : mutation_weights) {
        if (!(w >= 0.0)) throw ConfigError("mutation_weights must be >= 0");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("mutation_weights must not all be zero");
}

nlohmann::json to_json(const StreamConfig& c) {
    return {{"num_tasks", c.num_tasks},
            {"classes_per_task", c.classes_per_task},
            {"train_per_class", c.train_per_class},
            {"test_per_class", c.test_per_class},
            {"noise_scale", c.noise_scale},
            {"master_seed", c.master_seed},
            {"pretrain_classes", c.pretrain_classes},
            {"pretrain_per_class", c.pretrain_per_class},
            {"task_motif", c.task_motif},
            {"max_mutations", c.max_mutations},
            {"motif_min_ring", c.motif_min_ring},
            {"motif_drift", c.motif_drift},
            {"mutation_weights", c.mutation_weights}};
}

StreamConfig stream_config_from_json(const nlohmann::json& j) {
    StreamConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "num_tasks") c.num_tasks = value.get<int>();
        else if (key == "classes_per_task") c.classes_per_task = value.get<int>();
        else if (key == "train_per_class") c.train_per_class = value.get<int>();
        else if (key == "test_per_class") c.test_per_class = value.get<int>();
        else if (key == "noise_scale") c.noise_scale = value.get<double>();
        else if (key == "master_seed") c.master_seed = value.get<std::uint64_t>();
        else if (key == "pretrain_classes") c.pretrain_classes = value.get<int>();
        else if (key == "pretrain_per_class") c.pretrain_per_class = value.get<int>();
        else if (key == "task_motif") c.task_motif = value.get<bool>();
        else if (key == "max_mutations") c.max_mutations = value.get<int>();
        else if (key == "motif_min_ring") c.motif_min_ring = value.get<int>();
        else if (key == "motif_drift") c.motif_drift = value.get<int>();
        else if (key == "mutation_weights") c.mutation_weights = value.get<std::array<double, 5>>();
        else throw ConfigError("unknown stream config key: " + key);
    }
    return c;
}

std::vector<Point> nominal_positions(const ClassSchema& schema) {
    const double cx = kCanvasWidth / 2.0;
    const double cy = kCanvasHeight / 2.0;
    std::vector<Point> pts{{cx, cy}};
    for (const auto& r : schema.ring) {
        const double a = r.angle_degrees * kDeg;
        pts.push_back({cx + schema.ring_radius * std::cos(a), cy - schema.ring_radius * std::sin(a)});
    }
    return pts;
}

ConceptGraph canonical_graph(const ClassSchema& schema) {
    std::vector<ConceptNode> nodes{{schema.center_shape, schema.center_color}};
    for (const auto& r : schema.ring) nodes.push_back({r.shape, r.color});
    return make_canonical(nodes, nominal_positions(schema));
}

ClassSchema sample_class_schema(Rng& rng, SchemaKeySet& existing, int min_ring) {
    for (int attempt = 0; attempt < kMaxSchemaRetries; ++attempt) {
        ClassSchema s = draw_schema(rng, min_ring);
        if (existing.insert(canonical_string(canonical_graph(s))).second) return s;
    }
    throw SchemaSpaceExhausted("no distinct schema found after 10000 draws");
}

ClassSchema mutate_schema(const ClassSchema& motif, Rng& rng, SchemaKeySet& existing, int max_mutations,
                          const std::array<double, 5>& weights) {
    for (int attempt = 0; attempt < kMaxSchemaRetries; ++attempt) {
        ClassSchema s = motif;
        const int count = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_mutations)));
        for (int m = 0; m < count; ++m) apply_mutation(s, rng, weights);
        if (existing.insert(canonical_string(canonical_graph(s))).second) return s;
    }
    throw SchemaSpaceExhausted("no distinct mutation of the task motif after 10000 draws");
}

Scene instantiate_scene(const ClassSchema& schema, Rng& rng, double noise_scale) {
    Scene scene;
    scene.class_id = schema.class_id;
    const auto pts = nominal_positions(schema);
    std::vector<std::pair<ShapeKind, ColorKind>> attrs{{schema.center_shape, schema.center_color}};
    for (const auto& r : schema.ring) attrs.emplace_back(r.shape, r.color);

    for (std::size_t k = 0; k < pts.size(); ++k) {
        ObjectInstance o{};
        o.shape = attrs[k].first;
        o.color = attrs[k].second;
        o.scale = uniform(rng, 0.7, 1.3);
        o.rotation = uniform(rng, 0.0, 360.0);
        o.stroke_width = 1 + static_cast<int>(uniform_index(rng, 3));
        o.filled = uniform01(rng) < 0.5;
        const double r = object_radius(o);
        o.cx = pts[k].x;
        o.cy = pts[k].y;
        if (noise_scale > 0.0) {
            int tries = 0;
            do {
                o.cx = pts[k].x + noise_scale * normal(rng);
                o.cy = pts[k].y + noise_scale * normal(rng);
            } while (!inside_canvas(o.cx, o.cy, r, scene.width, scene.height) && ++tries < kMaxJitterRetries);
            o.cx = std::clamp(o.cx, r, scene.width - r);
            o.cy = std::clamp(o.cy, r, scene.height - r);
        }
        scene.objects.push_back(o);
    }
    return scene;
}

namespace {

int polygon_sides(ShapeKind s) {
    switch (s) {
        case ShapeKind::Triangle: return 3;
        case ShapeKind::Square: return 4;
        case ShapeKind::Pentagon: return 5;
        case ShapeKind::Circle: return 0;
    }
    return 0;
}

double segment_distance(Point p, Point a, Point b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double wx = p.x - a.x, wy = p.y - a.y;
    const double t = std::clamp((wx * vx + wy * vy) / (vx * vx + vy * vy), 0.0, 1.0);
    return std::hypot(wx - t * vx, wy - t * vy);
}

bool inside_polygon(Point p, const std::vector<Point>& poly) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        if ((poly[i].y > p.y) != (poly[j].y > p.y)) {
            const double x = poly[j].x + (p.y - poly[j].y) * (poly[i].x - poly[j].x) / (poly[i].y - poly[j].y);
            if (p.x < x) in = !in;
        }
    }
    return in;
}

void paint(Raster& img, const ObjectInstance& o) {
    const double r = object_radius(o);
    const Rgb color = rgb_of(o.color);
    const int sides = polygon_sides(o.shape);
    std::vector<Point> poly;
    for (int k = 0; k < sides; ++k) {
        // Vertex 0 points up before rotation.
        const double a = (90.0 + o.rotation + 360.0 * k / sides) * kDeg;
        poly.push_back({o.cx + r * std::cos(a), o.cy - r * std::sin(a)});
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(o.cx - r)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(o.cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(o.cy - r)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(o.cy + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const Point p{x + 0.5, y + 0.5};
            bool hit;
            if (sides == 0) {
                const double d = std::hypot(p.x - o.cx, p.y - o.cy);
                hit = d <= r && (o.filled || d > r - o.stroke_width);
            } else {
                hit = inside_polygon(p, poly);
                if (hit && !o.filled) {
                    double dmin = 1e9;
                    for (std::size_t i = 0; i < poly.size(); ++i)
                        dmin = std::min(dmin, segment_distance(p, poly[i], poly[(i + 1) % poly.size()]));
                    hit = dmin < o.stroke_width;
                }
            }
            if (hit) img.set(x, y, color);
        }
}

}  // namespace

Raster render(const Scene& scene) {
    Raster img(scene.width, scene.height, kBackground);
    for (const auto& o : scene.objects) paint(img, o);
    return img;
}

std::uint64_t sample_seed(std::uint64_t master_seed, int class_id, int index) {
    return derive_seed(master_seed, static_cast<std::uint64_t>(class_id), static_cast<std::uint64_t>(index));
}

Sample generate_sample(const TaskStream& stream, int class_id, int index, int task_id) {
    Rng rng(sample_seed(stream.config.master_seed, class_id, index));
    Sample s;
    s.scene = instantiate_scene(stream.schemas.at(static_cast<std::size_t>(class_id)), rng, stream.config.noise_scale);
    s.label = class_id;
    s.task_id = task_id;
    s.index = index;
    return s;
}

TaskStream build_task_stream(const StreamConfig& config) {
    config.validate();
    TaskStream stream;
    stream.config = config;

    Rng schema_rng(derive_seed(config.master_seed, 0x5c4e3aULL));
    SchemaKeySet keys;
    const int continual = config.num_tasks * config.classes_per_task;
    const int total = continual + config.pretrain_classes;
    ClassSchema motif;
    ClassSchema global_motif;
    if (config.task_motif && config.motif_drift > 0) {
        SchemaKeySet scratch;
        global_motif = sample_class_schema(schema_rng, scratch, config.motif_min_ring);
    }
    for (int id = 0; id < total; ++id) {
        // Pretrain classes are grouped like continual tasks.
        const int group_pos = (id < continual ? id : id - continual) % config.classes_per_task;
        ClassSchema s;
        if (!config.task_motif) {
            s = sample_class_schema(schema_rng, keys);
        } else {
            if (group_pos == 0) {
                SchemaKeySet scratch;
                motif = config.motif_drift > 0
                             ? mutate_schema(global_motif, schema_rng, scratch, config.motif_drift, config.mutation_weights)
                             : sample_class_schema(schema_rng, scratch, config.motif_min_ring);
            }
            s = mutate_schema(motif, schema_rng, keys, config.max_mutations, config.mutation_weights);
        }
        s.class_id = id;
        stream.schemas.push_back(std::move(s));
    }

    for (int t = 0; t < config.num_tasks; ++t) {
        Task task;
        task.task_id = t;
        for (int k = 0; k < config.classes_per_task; ++k) {
            const int cid = t * config.classes_per_task + k;
            task.class_ids.push_back(cid);
            for (int i = 0; i < config.train_per_class; ++i) task.train.push_back(generate_sample(stream, cid, i, t));
            for (int i = 0; i < config.test_per_class; ++i)
                task.test.push_back(generate_sample(stream, cid, config.train_per_class + i, t));
        }
        stream.tasks.push_back(std::move(task));
    }
    for (int id = continual; id < total; ++id)
        for (int i = 0; i < config.pretrain_samples_per_class(); ++i) stream.pretrain.push_back(generate_sample(stream, id, i, -1));
    return stream;
}

}  // namespace nesycl

namespace nesycl {

nlohmann::json to_json(const ClassSchema& s) {
    nlohmann::json ring = nlohmann::json::array();
    for (const auto& r : s.ring) ring.push_back({{"shape", to_string(r.shape)}, {"color", to_string(r.color)}, {"angle_degrees", r.angle_degrees}});
    return {{"class_id", s.class_id},
            {"center", {{"shape", to_string(s.center_shape)}, {"color", to_string(s.center_color)}}},
            {"ring", ring},
            {"ring_radius", s.ring_radius}};
}

nlohmann::json to_json(const Scene& s) {
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : s.objects)
        objects.push_back({{"shape", to_string(o.shape)}, {"color", to_string(o.color)}, {"cx", o.cx}, {"cy", o.cy},
                           {"scale", o.scale}, {"rotation", o.rotation}, {"filled", o.filled}, {"stroke_width", o.stroke_width}});
    return {{"class_id", s.class_id}, {"width", s.width}, {"height", s.height}, {"objects", objects}};
}

namespace {

nlohmann::json sample_json(const Sample& s, const std::string& image) {
    return {{"label", s.label}, {"task_id", s.task_id}, {"index", s.index}, {"image", image}, {"scene", to_json(s.scene)}};
}

std::string image_path(const Sample& s) {
    const std::string group = s.task_id < 0 ? "pretrain" : std::to_string(s.task_id);
    return "images/" + group + "/" + std::to_string(s.label) + "/" + std::to_string(s.index) + ".ppm";
}

}  // namespace

nlohmann::json stream_json(const TaskStream& stream) {
    nlohmann::json schemas = nlohmann::json::array();
    for (const auto& s : stream.schemas) schemas.push_back(to_json(s));
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : stream.tasks) {
        nlohmann::json train = nlohmann::json::array(), test = nlohmann::json::array();
        for (const auto& s : t.train) train.push_back(sample_json(s, image_path(s)));
        for (const auto& s : t.test) test.push_back(sample_json(s, image_path(s)));
        tasks.push_back({{"task_id", t.task_id}, {"class_ids", t.class_ids}, {"train", train}, {"test", test}});
    }
    nlohmann::json pretrain = nlohmann::json::array();
    for (const auto& s : stream.pretrain) pretrain.push_back(sample_json(s, image_path(s)));
    return {{"format_version", kDatasetFormatVersion},
            {"image_format", "ppm-p6"},
            {"config", to_json(stream.config)},
            {"schemas", schemas},
            {"tasks", tasks},
            {"pretrain", pretrain}};
}

std::string encode_ppm(const Raster& raster) {
    std::string out = "P6\n" + std::to_string(raster.width) + " " + std::to_string(raster.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(raster.pixels.data()), raster.pixels.size());
    return out;
}

DatasetSummary write_dataset(const TaskStream& stream, const std::filesystem::path& dir) {
    DatasetSummary summary;
    summary.classes = static_cast<int>(stream.schemas.size());
    auto write = [&](const Sample& s) {
        const auto path = dir / image_path(s);
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        const auto bytes = encode_ppm(render(s.scene));
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("cannot write " + path.string());
        ++summary.images;
    };
    for (const auto& t : stream.tasks) {
        for (const auto& s : t.train) write(s);
        for (const auto& s : t.test) write(s);
        summary.train += static_cast<int>(t.train.size());
        summary.test += static_cast<int>(t.test.size());
    }
    for (const auto& s : stream.pretrain) write(s);
    summary.pretrain = static_cast<int>(stream.pretrain.size());
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "stream.json") << stream_json(stream).dump(1) << '\n';
    return summary;
}

}  // namespace nesycl
