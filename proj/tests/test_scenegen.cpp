#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "nesycl/errors.hpp"
#include "nesycl/scenegen.hpp"

using namespace nesycl;

namespace {

StreamConfig small_config() {
    StreamConfig c;
    c.num_tasks = 3;
    c.classes_per_task = 4;
    c.train_per_class = 6;
    c.test_per_class = 3;
    c.noise_scale = 2.0;
    c.pretrain_classes = 2;
    c.pretrain_per_class = 2;
    c.master_seed = 42;
    return c;
}

}  // namespace

TEST_CASE("two-object schema space has 3136 distinct concept graphs") {
    std::set<std::string> keys;
    for (int cs = 0; cs < kNumShapes; ++cs)
        for (int cc = 0; cc < kNumColors; ++cc)
            for (int rs = 0; rs < kNumShapes; ++rs)
                for (int rc = 0; rc < kNumColors; ++rc)
                    for (int a = 0; a < 360; a += 45) {
                        ClassSchema s;
                        s.center_shape = static_cast<ShapeKind>(cs);
                        s.center_color = static_cast<ColorKind>(cc);
                        s.ring = {{static_cast<ShapeKind>(rs), static_cast<ColorKind>(rc), a}};
                        keys.insert(canonical_string(canonical_graph(s)));
                    }
    // 28 * 27 / 2 unordered attribute pairs * 8 bins + 28 equal pairs * 4 bins
    CHECK(keys.size() == 3136);
}

TEST_CASE("stream is deterministic and samples regenerate independently") {
    const auto a = build_task_stream(small_config());
    const auto b = build_task_stream(small_config());
    REQUIRE(a.tasks.size() == 3);
    CHECK(a.schemas == b.schemas);
    CHECK(stream_json(a) == stream_json(b));
    for (const auto& task : a.tasks) {
        CHECK(task.class_ids.size() == 4);
        CHECK(task.train.size() == 24);
        CHECK(task.test.size() == 12);
        for (const auto& s : task.test) CHECK(generate_sample(a, s.label, s.index, s.task_id).scene == s.scene);
    }
    CHECK(a.pretrain.size() == 4);

    auto other = small_config();
    other.master_seed = 43;
    CHECK(build_task_stream(other).schemas != a.schemas);
}

TEST_CASE("classes are pairwise distinct and classes are disjoint across tasks") {
    auto cfg = small_config();
    cfg.num_tasks = 10;
    cfg.classes_per_task = 10;
    cfg.train_per_class = 1;
    cfg.test_per_class = 1;
    cfg.pretrain_classes = 20;
    const auto s = build_task_stream(cfg);
    std::set<std::string> keys;
    for (const auto& schema : s.schemas) keys.insert(canonical_string(canonical_graph(schema)));
    CHECK(keys.size() == s.schemas.size());
    CHECK(s.schemas.size() == 120);
    std::set<int> ids;
    for (const auto& t : s.tasks)
        for (int c : t.class_ids) CHECK(ids.insert(c).second);
}

TEST_CASE("train and test draws use disjoint indices") {
    const auto s = build_task_stream(small_config());
    for (const auto& t : s.tasks) {
        std::set<std::pair<int, int>> train;
        for (const auto& x : t.train) train.insert({x.label, x.index});
        for (const auto& x : t.test) CHECK_FALSE(train.contains({x.label, x.index}));
    }
}

TEST_CASE("jitter has the configured standard deviation") {
    Rng schema_rng(1);
    SchemaKeySet keys;
    const auto schema = sample_class_schema(schema_rng, keys);
    Rng rng(7);
    const double u = 4.0;
    double sx = 0, sxx = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const auto scene = instantiate_scene(schema, rng, u);
        const double dx = scene.objects[0].cx - kCanvasWidth / 2.0;  // center never hits the border
        sx += dx;
        sxx += dx * dx;
    }
    const double mean = sx / n;
    const double sd = std::sqrt(sxx / n - mean * mean);
    CHECK(std::abs(mean) < 0.1);
    CHECK(sd == doctest::Approx(u).epsilon(0.03));
}

TEST_CASE("zero noise places objects at nominal positions") {
    Rng rng(3);
    SchemaKeySet keys;
    for (int i = 0; i < 50; ++i) {
        const auto schema = sample_class_schema(rng, keys);
        const auto scene = instantiate_scene(schema, rng, 0.0);
        const auto pts = nominal_positions(schema);
        REQUIRE(scene.objects.size() == pts.size());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            CHECK(scene.objects[k].cx == pts[k].x);
            CHECK(scene.objects[k].cy == pts[k].y);
        }
    }
}

TEST_CASE("render is deterministic and paints palette colors") {
    const auto s = build_task_stream(small_config());
    const auto& scene = s.tasks[0].train[0].scene;
    const auto r = render(scene);
    CHECK(r == render(scene));
    CHECK(r.width == 64);
    int painted = 0;
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) painted += !(r.at(x, y) == kBackground);
    CHECK(painted > 20);
}

TEST_CASE("invalid stream configs are rejected") {
    auto c = small_config();
    c.num_tasks = 0;
    CHECK_THROWS_AS(build_task_stream(c), ConfigError);
    c = small_config();
    c.noise_scale = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.mutation_weights = {0, 0, 0, 0, 0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    CHECK(stream_config_from_json(to_json(c)).master_seed == c.master_seed);
}

TEST_CASE("dataset export writes PPM images and metadata") {
    auto cfg = small_config();
    cfg.num_tasks = 1;
    cfg.classes_per_task = 2;
    cfg.train_per_class = 2;
    cfg.test_per_class = 1;
    cfg.pretrain_classes = 0;
    const auto s = build_task_stream(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "nesycl_test_dataset";
    std::filesystem::remove_all(dir);
    const auto summary = write_dataset(s, dir);
    CHECK(summary.images == 6);
    CHECK(std::filesystem::exists(dir / "stream.json"));
    const auto ppm = encode_ppm(render(s.tasks[0].train[0].scene));
    CHECK(ppm.rfind("P6\n64 64\n255\n", 0) == 0);
    CHECK(ppm.size() == std::string("P6\n64 64\n255\n").size() + 64 * 64 * 3);
    std::ifstream in(dir / "stream.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["format_version"] == kDatasetFormatVersion);
    std::filesystem::remove_all(dir);
}
