#include <doctest.h>

#include "nesycl/decompose.hpp"
#include "nesycl/scenegen.hpp"

using namespace nesycl;

TEST_CASE("iou of boxes") {
    const BBox a{0, 0, 10, 10}, b{5, 0, 15, 10};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, b) == doctest::Approx(50.0 / 150.0));
    CHECK(iou(a, BBox{20, 20, 30, 30}) == 0.0);
}

TEST_CASE("single objects are classified under any rotation and style") {
    Rng rng(17);
    int correct = 0, total = 0;
    for (int s = 0; s < kNumShapes; ++s)
        for (int trial = 0; trial < 150; ++trial) {
            Scene scene;
            ObjectInstance o{};
            o.shape = static_cast<ShapeKind>(s);
            o.color = static_cast<ColorKind>(uniform_index(rng, kNumColors));
            o.cx = uniform(rng, 28, 36);
            o.cy = uniform(rng, 28, 36);
            o.scale = uniform(rng, 0.7, 1.3);
            o.rotation = uniform(rng, 0, 360);
            o.filled = trial % 2 == 0;
            o.stroke_width = 1 + trial % 3;
            scene.objects.push_back(o);
            const auto det = detect_objects(render(scene));
            ++total;
            if (det.size() == 1 && det[0].shape == o.shape && det[0].color == o.color) ++correct;
        }
    CHECK(static_cast<double>(correct) / total >= 0.95);
}

TEST_CASE("oracle decomposition at zero noise reproduces the schema graph") {
    StreamConfig c;
    c.num_tasks = 2;
    c.classes_per_task = 5;
    c.train_per_class = 3;
    c.test_per_class = 0;
    c.pretrain_classes = 0;
    const auto s = build_task_stream(c);
    for (const auto& t : s.tasks)
        for (const auto& x : t.train) CHECK(decompose(x.scene, DecompMode::Oracle) == canonical_graph(s.schemas[x.label]));
}

TEST_CASE("classical detector precision and recall at u=2") {
    StreamConfig c;
    c.num_tasks = 2;
    c.classes_per_task = 5;
    c.train_per_class = 1;
    c.test_per_class = 20;
    c.noise_scale = 2.0;
    c.pretrain_classes = 0;
    c.master_seed = 8;
    const auto s = build_task_stream(c);
    DetectionQuality q;
    int graphs_equal = 0, n = 0;
    for (const auto& t : s.tasks)
        for (const auto& x : t.test) {
            q += match_detections(detect_objects(render(x.scene)), oracle_detect(x.scene));
            graphs_equal += decompose(x.scene, DecompMode::Classical) == decompose(x.scene, DecompMode::Oracle);
            ++n;
        }
    CHECK(q.precision() >= 0.95);
    CHECK(q.recall() >= 0.95);
    CHECK(static_cast<double>(graphs_equal) / n >= 0.9);
}

TEST_CASE("matching requires labels and overlap") {
    Detection a{{0, 0, 10, 10}, ShapeKind::Square, ColorKind::Red, {5, 5}};
    Detection b = a;
    b.color = ColorKind::Blue;
    Detection far = a;
    far.bbox = {30, 30, 40, 40};
    CHECK(match_detections({a}, {a}).true_positives == 1);
    CHECK(match_detections({b}, {a}).true_positives == 0);
    CHECK(match_detections({far}, {a}).true_positives == 0);
    const auto q = match_detections({a, a}, {a});
    CHECK(q.true_positives == 1);
    CHECK(q.precision() == 0.5);
    CHECK(q.recall() == 1.0);
}
