#include "nesycl/selftest.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "nesycl/baselines.hpp"
#include "nesycl/harness.hpp"

namespace nesycl {

namespace {

ConceptGraph random_graph(Rng& rng, int max_nodes) {
    const int n = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_nodes)));
    std::vector<ConceptNode> nodes;
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) {
        nodes.push_back({static_cast<ShapeKind>(uniform_index(rng, kNumShapes)), static_cast<ColorKind>(uniform_index(rng, kNumColors))});
        pts.push_back({uniform(rng, 0, 64), uniform(rng, 0, 64)});
    }
    return make_canonical(nodes, pts);
}

}  // namespace

int run_selftest(std::ostream& out) {
    int failures = 0;
    auto check = [&](const std::string& name, const std::function<bool()>& body) {
        bool ok = false;
        std::string why;
        try {
            ok = body();
        } catch (const std::exception& e) {
            why = std::string(" (") + e.what() + ")";
        }
        out << (ok ? "PASS " : "FAIL ") << name << why << '\n';
        failures += !ok;
    };

    check("ged symmetry and identity", [] {
        Rng rng(7);
        for (int k = 0; k < 200; ++k) {
            const auto a = random_graph(rng, 4), b = random_graph(rng, 4);
            if (ged(a, b) != ged(b, a) || ged(a, a) != 0.0) return false;
        }
        return true;
    });
    check("metrics arithmetic", [] {
        AccuracyMatrix r(2);
        r.set(0, 0, 0.8);
        r.set(0, 1, 0.2);
        r.set(1, 1, 0.9);
        const auto m = metrics(r);
        return std::abs(m.a_all - 55.0) < 1e-9 && std::abs(*m.a_last - 85.0) < 1e-9;
    });
    check("stream determinism", [] {
        StreamConfig c;
        c.num_tasks = 2;
        c.classes_per_task = 3;
        c.train_per_class = 2;
        c.test_per_class = 1;
        c.pretrain_classes = 0;
        c.noise_scale = 2;
        return stream_json(build_task_stream(c)) == stream_json(build_task_stream(c));
    });
    check("symbolic zero forgetting", [] {
        EpisodeConfig c;
        c.method = Method::Symbolic;
        c.stream.num_tasks = 3;
        c.stream.classes_per_task = 3;
        c.stream.train_per_class = 5;
        c.stream.test_per_class = 5;
        c.stream.noise_scale = 3;
        const auto res = run_episode(c, 11);
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                if (res.r.at(i, j) != res.r.at(i, i)) return false;
        return true;
    });
    check("gem single-constraint projection", [] {
        Rng rng(3);
        Eigen::VectorXd g(20), r(20);
        for (int i = 0; i < 20; ++i) {
            g[i] = normal(rng);
            r[i] = normal(rng);
        }
        if (g.dot(r) > 0) r = -r;
        Eigen::MatrixXd refs = r;
        return (gem_project(g, refs) - gem_project_single(g, r)).norm() < 1e-5;
    });
    check("mlp gradient (finite differences)", [] {
        Rng rng(5);
        Mlp<double> net(MlpShape{6, 5, 3, 4});
        net.reset_trunk(rng);
        net.reset_attr_head(rng);
        net.reset_class_head(rng);
        Mat<double> x(6, 3), a(3, 3);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
        BatchObjective<double> obj;
        obj.targets = {{0, 0, 4}, {2, 0, 4}, {3, 0, 4}};
        obj.attr_targets = &a;
        obj.lambda = 1.5;
        Vec<double> g;
        net.loss_and_grad(x, obj, g);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            Mlp<double> p = net, m = net;
            p.params()[i] += 1e-4;
            m.params()[i] -= 1e-4;
            const double fd = (p.loss(x, obj).total - m.loss(x, obj).total) / 2e-4;
            if (std::abs(fd - g[i]) > 1e-4 * std::max(1.0, std::abs(fd))) return false;
        }
        return true;
    });
    return failures;
}

}  // namespace nesycl
