#include <doctest.h>

#include "nesycl/errors.hpp"
#include "nesycl/neural.hpp"
#include "nesycl/scenegen.hpp"
#include "support.hpp"

using namespace nesycl;
using testsupport::central_difference;
using testsupport::relative_error;

namespace {

struct Group {
    const char* name;
    std::size_t begin, end;
};

std::vector<Group> groups(const MlpShape& s) {
    return {{"w1", s.w1_offset(), s.b1_offset()},
            {"b1", s.b1_offset(), s.wi_offset()},
            {"wi", s.wi_offset(), s.bi_offset()},
            {"bi", s.bi_offset(), s.head_offset()},
            {"head", s.head_offset(), s.size()}};
}

void check_groups(const MlpShape& shape, const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
    for (const auto& g : groups(shape)) {
        if (g.end == g.begin) continue;
        const auto n = static_cast<Eigen::Index>(g.end - g.begin);
        const auto b = static_cast<Eigen::Index>(g.begin);
        INFO("group " << g.name);
        CHECK(relative_error(analytic.segment(b, n), numeric.segment(b, n)) < 1e-4);
    }
}

Mlp<double> random_net(MlpShape shape, std::uint64_t seed) {
    Mlp<double> net(shape);
    Rng rng(seed);
    net.reset_trunk(rng);
    net.reset_attr_head(rng);
    net.reset_class_head(rng);
    // larger biases keep pre-activations away from the ReLU kink
    for (Eigen::Index i = 0; i < shape.hidden_dim; ++i) net.b1()[i] += 0.5 * (i % 2 == 0 ? 1 : -1);
    return net;
}

}  // namespace

TEST_CASE("attribute summary counts shapes and colors") {
    const auto g = make_canonical({{ShapeKind::Circle, ColorKind::Red}, {ShapeKind::Circle, ColorKind::Blue}, {ShapeKind::Square, ColorKind::Red}},
                                  {{0, 0}, {10, 0}, {0, 10}});
    const auto s = summarize_attributes(g);
    CHECK(s.shape_counts[static_cast<int>(ShapeKind::Circle)] == 2);
    CHECK(s.color_counts[static_cast<int>(ColorKind::Red)] == 2);
    const auto v = s.as_vector();
    CHECK(v.size() == kAttrDim);
    CHECK(v.sum() == 6.0f);
}

TEST_CASE("loss gradients match central differences") {
    const MlpShape shape{5, 4, kAttrDim, 6};
    Rng rng(4);
    Mat<double> x(5, 3), attr(kAttrDim, 3), teacher(3, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < attr.size(); ++i) attr.data()[i] = static_cast<double>(uniform_index(rng, 3));
    for (Eigen::Index i = 0; i < teacher.size(); ++i) teacher.data()[i] = normal(rng);

    for (double lambda : {0.0, 1.5}) {
        for (bool distill : {false, true}) {
            CAPTURE(lambda);
            CAPTURE(distill);
            auto net = random_net(shape, 12);
            BatchObjective<double> obj;
            obj.targets = {{1, 0, 3}, {4, 3, 6}, {2, 0, 6}};
            obj.attr_targets = &attr;
            obj.lambda = lambda;
            if (distill) obj.distill = DistillTerm<double>{&teacher, 0, 3, 2.0, 0.7};
            Vec<double> grad;
            net.loss_and_grad(x, obj, grad);
            const auto numeric = central_difference(net.params(), [&](const Eigen::VectorXd& p) {
                Mlp<double> probe = net;
                probe.params() = p;
                return probe.loss(x, obj).total;
            });
            check_groups(shape, grad, numeric);
        }
    }
}

TEST_CASE("integration head is inert at lambda 0") {
    const int d = 12, classes = 3;
    auto tasks = testsupport::synthetic_tasks(1, classes, 10, 5, d, 5);
    const auto& t = tasks[0];
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.hidden_dim = 8;
    cfg.lambda = 0;
    cfg.seed = 3;

    auto with = make_reasoner(d, 8, classes, true);
    auto without = make_reasoner(d, 8, classes, false);
    Rng r1(1), r2(1);
    reset_heads(with, classes, r1);
    reset_heads(without, classes, r2);
    train_task(with, t.train_x, t.train_y, Eigen::MatrixXf(), cfg);
    train_task(without, t.train_x, t.train_y, Eigen::MatrixXf(), cfg);
    CHECK(with.w1() == without.w1());
    CHECK(with.head() == without.head());
    CHECK(predict(with, t.test_x, 0, classes) == predict(without, t.test_x, 0, classes));
}

TEST_CASE("training separates clusters and is deterministic") {
    auto tasks = testsupport::synthetic_tasks(1, 4, 20, 10, 16, 8);
    const auto& t = tasks[0];
    std::vector<ConceptGraph> graphs(t.train_y.size());
    const Eigen::MatrixXf attr = Eigen::MatrixXf::Ones(kAttrDim, t.train_x.cols());
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.hidden_dim = 16;
    cfg.lambda = 1.5;

    auto run = [&] {
        auto net = make_reasoner(16, 16, 4, true);
        Rng rng(2);
        reset_heads(net, 4, rng);
        const auto trace = train_task(net, t.train_x, t.train_y, attr, cfg);
        return std::make_pair(net, trace);
    };
    const auto [net, trace] = run();
    REQUIRE(trace.epoch_loss.size() == 30);
    CHECK(trace.epoch_loss.back() < trace.epoch_loss.front());
    const auto pred = predict(net, t.test_x, 0, 4);
    int correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == t.test_y[i];
    CHECK(correct == static_cast<int>(pred.size()));
    CHECK(run().first.params() == net.params());
}

TEST_CASE("reset_heads resizes the head and reinitializes everything") {
    auto net = make_reasoner(6, 5, 3, true);
    Rng rng(1);
    reset_heads(net, 3, rng);
    const auto before = net.params();
    reset_heads(net, 7, rng);
    CHECK(net.shape().num_outputs == 7);
    CHECK(net.params().size() == static_cast<Eigen::Index>(net.shape().size()));
    CHECK(net.w1() != Eigen::Map<const Mat<float>>(before.data(), 5, 6));
}

TEST_CASE("shape and label errors") {
    auto net = make_reasoner(6, 5, 3, true);
    Rng rng(1);
    reset_heads(net, 3, rng);
    CHECK_THROWS_AS(net.forward(Mat<float>::Zero(5, 2)), ShapeMismatch);
    const std::vector<int> labels{0, 1};
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(train_task(net, Eigen::MatrixXf::Zero(6, 3), labels, Eigen::MatrixXf(), cfg), ShapeMismatch);
    cfg.learning_rate = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("growing the head keeps existing parameters") {
    Mlp<float> net(MlpShape{4, 3, 0, 2});
    Rng rng(5);
    net.reset_trunk(rng);
    net.reset_class_head(rng);
    const auto before = net.params();
    net.grow_outputs(3, rng);
    CHECK(net.shape().num_outputs == 5);
    CHECK(net.params().head(before.size()) == before);
}
