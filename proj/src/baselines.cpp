#include "nesycl/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "nesycl/errors.hpp"
#include "nesycl/fpenv.hpp"

namespace nesycl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Stored training example with the head window it is scored against.
struct MemoryItem {
    Eigen::Index task = 0;
    Eigen::Index index = 0;  // column in that task's train_x
    int row = 0;
};

struct Evaluator {
    std::span<const TaskFeatures> tasks;
    BaselineResult* out;

    void evaluate(const Mlp<float>& net, int upto) {
        for (int i = 0; i <= upto; ++i) out->r.set(i, upto, accuracy(net, i));
    }
    void evaluate_joint(const Mlp<float>& net) {
        const int t = static_cast<int>(tasks.size());
        for (int i = 0; i < t; ++i) {
            const double a = accuracy(net, i);
            for (int j = i; j < t; ++j) out->r.set(i, j, a);
        }
    }
    double accuracy(const Mlp<float>& net, int i) {
        const auto& task = tasks[static_cast<std::size_t>(i)];
        if (task.test_y.empty()) return 0.0;
        const auto t0 = Clock::now();
        const auto pred = predict(net, task.test_x, task.first_row, task.first_row + task.num_classes);
        out->inference_seconds += seconds_since(t0);
        out->inference_samples += static_cast<long>(pred.size());
        int correct = 0;
        for (std::size_t n = 0; n < pred.size(); ++n) correct += pred[n] == task.first_row + task.test_y[n];
        return static_cast<double>(correct) / static_cast<double>(pred.size());
    }
};

std::vector<MemoryItem> pick_per_class(const TaskFeatures& task, Eigen::Index task_index, int per_class, Rng& rng) {
    std::vector<MemoryItem> out;
    for (int c = 0; c < task.num_classes; ++c) {
        std::vector<Eigen::Index> members;
        for (std::size_t n = 0; n < task.train_y.size(); ++n)
            if (task.train_y[n] == c) members.push_back(static_cast<Eigen::Index>(n));
        shuffle(members.begin(), members.end(), rng);
        const auto take = std::min<std::size_t>(members.size(), static_cast<std::size_t>(per_class));
        for (std::size_t k = 0; k < take; ++k) out.push_back({task_index, members[k], task.first_row + c});
    }
    return out;
}

std::vector<MemoryItem> pick_uniform(const TaskFeatures& task, Eigen::Index task_index, int count, Rng& rng) {
    std::vector<Eigen::Index> idx(task.train_y.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(idx.size(), static_cast<std::size_t>(count)));
    std::sort(idx.begin(), idx.end());
    std::vector<MemoryItem> out;
    for (auto n : idx) out.push_back({task_index, n, task.first_row + task.train_y[static_cast<std::size_t>(n)]});
    return out;
}

Eigen::VectorXd to_double(const Vec<float>& v) { return v.cast<double>(); }

BaselineResult run_multitask(std::span<const TaskFeatures> tasks, const BaselineConfig& cfg) {
    const ScopedFlushDenormals ftz;
    BaselineResult result;
    result.r = AccuracyMatrix(static_cast<int>(tasks.size()));
    const auto t0 = Clock::now();
    const int d = static_cast<int>(tasks.front().train_x.rows());
    int rows = 0;
    for (const auto& t : tasks) rows = std::max(rows, t.first_row + t.num_classes);

    Mlp<float> net(MlpShape{d, cfg.train.hidden_dim, 0, 0});
    Rng init(baseline_init_seed(cfg.train.seed));
    net.reset_trunk(init);
    for (const auto& t : tasks) net.grow_outputs(t.num_classes, init);

    std::vector<MemoryItem> all;
    for (std::size_t k = 0; k < tasks.size(); ++k)
        for (std::size_t n = 0; n < tasks[k].train_y.size(); ++n)
            all.push_back({static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n), tasks[k].first_row + tasks[k].train_y[n]});

    Rng order_rng(derive_seed(cfg.train.seed, 0x7a1eULL));
    Adam<float> adam({cfg.train.learning_rate});
    Vec<float> grad;
    Eigen::MatrixXf xb;
    const auto n = static_cast<Eigen::Index>(all.size());
    for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        shuffle(all.begin(), all.end(), order_rng);
        for (Eigen::Index start = 0; start < n; start += cfg.train.batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(n, start + cfg.train.batch_size) - start;
            xb.resize(d, b);
            BatchObjective<float> obj;
            for (Eigen::Index k = 0; k < b; ++k) {
                const auto& m = all[static_cast<std::size_t>(start + k)];
                const auto& task = tasks[static_cast<std::size_t>(m.task)];
                xb.col(k) = task.train_x.col(m.index);
                obj.targets.push_back({m.row, task.first_row, task.first_row + task.num_classes});
            }
            net.loss_and_grad(xb, obj, grad);
            adam.step(net.params(), grad);
        }
    }
    result.train_seconds = seconds_since(t0);
    Evaluator{tasks, &result}.evaluate_joint(net);
    return result;
}

}  // namespace

std::string to_string(Baseline b) {
    switch (b) {
        case Baseline::Finetune: return "finetune";
        case Baseline::Multitask: return "multitask";
        case Baseline::Er: return "er";
        case Baseline::Ewc: return "ewc";
        case Baseline::Si: return "si";
        case Baseline::Lwf: return "lwf";
        case Baseline::Gem: return "gem";
    }
    return "?";
}

void BaselineConfig::validate() const {
    TrainConfig t = train;
    t.lambda = 0;
    t.validate();
    if (buffer_per_class < 0) throw ConfigError("buffer_per_class must be >= 0");
    if (!(ewc_lambda >= 0)) throw ConfigError("ewc_lambda must be >= 0");
    if (!(si_c >= 0)) throw ConfigError("si_c must be >= 0");
    if (!(si_xi > 0)) throw ConfigError("si_xi must be > 0");
    if (!(lwf_lambda >= 0)) throw ConfigError("lwf_lambda must be >= 0");
    if (!(lwf_temperature > 0)) throw ConfigError("lwf_temperature must be > 0");
    if (gem_mem_per_task < 0) throw ConfigError("gem_mem_per_task must be >= 0");
    if (!(gem_tolerance > 0)) throw ConfigError("gem_tolerance must be > 0");
    if (gem_max_iterations < 1) throw ConfigError("gem_max_iterations must be >= 1");
}

Eigen::VectorXd gem_project(const Eigen::VectorXd& g, const Eigen::MatrixXd& refs, double tolerance, int max_iterations) {
    if (refs.cols() == 0) return g;
    const Eigen::VectorXd dots = refs.transpose() * g;
    if ((dots.array() >= 0.0).all()) return g;
    const Eigen::MatrixXd q = refs.transpose() * refs;
    const double lipschitz = q.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(lipschitz > 0)) return g;
    const double step = 1.0 / lipschitz;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(refs.cols());
    for (int it = 0; it < max_iterations; ++it) {
        const Eigen::VectorXd next = (v - step * (q * v + dots)).cwiseMax(0.0);
        const double change = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (change < tolerance) break;
    }
    return g + refs * v;
}

Eigen::VectorXd gem_project_single(const Eigen::VectorXd& g, const Eigen::VectorXd& ref) {
    const double dot = g.dot(ref);
    if (dot >= 0.0) return g;
    return g - (dot / ref.squaredNorm()) * ref;
}

BaselineResult run_baseline(Baseline method, std::span<const TaskFeatures> tasks, const BaselineConfig& cfg) {
    cfg.validate();
    if (tasks.empty()) throw ConfigError("run_baseline: no tasks");
    if (method == Baseline::Multitask) return run_multitask(tasks, cfg);
    const ScopedFlushDenormals ftz;

    BaselineResult result;
    result.r = AccuracyMatrix(static_cast<int>(tasks.size()));
    Evaluator eval{tasks, &result};
    const int d = static_cast<int>(tasks.front().train_x.rows());

    Mlp<float> net(MlpShape{d, cfg.train.hidden_dim, 0, 0});
    Rng init(baseline_init_seed(cfg.train.seed));
    net.reset_trunk(init);
    Rng order_rng(derive_seed(cfg.train.seed, 0x7a1eULL));
    Rng memory_rng(derive_seed(cfg.train.seed, 0x3e3aULL));
    Rng replay_rng(derive_seed(cfg.train.seed, 0x4e91ULL));

    std::vector<MemoryItem> buffer;                 // ER
    std::vector<std::vector<MemoryItem>> episodic;  // GEM, one list per past task
    EwcState<float> ewc;
    SiState<float> si;
    const auto ewc_lambda = static_cast<float>(cfg.ewc_lambda);
    const auto si_c = static_cast<float>(cfg.si_c);

    auto column = [&](const MemoryItem& m) { return tasks[static_cast<std::size_t>(m.task)].train_x.col(m.index); };

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const auto& task = tasks[t];
        if (task.first_row != net.shape().num_outputs) throw ShapeMismatch("run_baseline: tasks must own consecutive head rows");
        const auto t0 = Clock::now();
        std::optional<Mlp<float>> teacher;
        const int old_rows = net.shape().num_outputs;
        if (method == Baseline::Lwf && old_rows > 0) teacher = net;
        net.grow_outputs(task.num_classes, init);
        const int seen = net.shape().num_outputs;
        if (method == Baseline::Si) si.begin_task(net.params());

        Adam<float> adam({cfg.train.learning_rate});
        const auto n = static_cast<Eigen::Index>(task.train_y.size());
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        Vec<float> grad, before;
        Eigen::MatrixXf xb;
        Mat<float> teacher_logits;
        for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
            shuffle(order.begin(), order.end(), order_rng);
            for (Eigen::Index start = 0; start < n; start += cfg.train.batch_size) {
                const Eigen::Index b = std::min<Eigen::Index>(n, start + cfg.train.batch_size) - start;
                const bool replay = method == Baseline::Er && !buffer.empty();
                const Eigen::Index total = replay ? 2 * b : b;
                xb.resize(d, total);
                BatchObjective<float> obj;
                obj.targets.reserve(static_cast<std::size_t>(total));
                for (Eigen::Index k = 0; k < b; ++k) {
                    const Eigen::Index i = order[static_cast<std::size_t>(start + k)];
                    xb.col(k) = task.train_x.col(i);
                    obj.targets.push_back({task.first_row + task.train_y[static_cast<std::size_t>(i)], 0, seen});
                }
                if (replay) {
                    for (Eigen::Index k = 0; k < b; ++k) {
                        const auto& m = buffer[static_cast<std::size_t>(uniform_index(replay_rng, buffer.size()))];
                        xb.col(b + k) = column(m);
                        obj.targets.push_back({m.row, 0, seen});
                    }
                }
                if (teacher) {
                    teacher_logits = teacher->forward(xb).logits;
                    obj.distill = DistillTerm<float>{&teacher_logits, 0, old_rows, static_cast<float>(cfg.lwf_temperature),
                                                     static_cast<float>(cfg.lwf_lambda)};
                }
                net.loss_and_grad(xb, obj, grad);

                if (method == Baseline::Ewc) ewc.add_grad(net.params(), ewc_lambda, grad);
                if (method == Baseline::Si) {
                    before = net.params();
                    const Vec<float> task_grad = grad;
                    si.add_grad(net.params(), si_c, grad);
                    adam.step(net.params(), grad);
                    si.accumulate(task_grad, before, net.params());
                    continue;
                }
                if (method == Baseline::Gem && !episodic.empty()) {
                    Eigen::MatrixXd refs(grad.size(), static_cast<Eigen::Index>(episodic.size()));
                    Vec<float> gk;
                    Eigen::MatrixXf xm;
                    for (std::size_t k = 0; k < episodic.size(); ++k) {
                        const auto& mem = episodic[k];
                        const auto& past = tasks[k];
                        xm.resize(d, static_cast<Eigen::Index>(mem.size()));
                        BatchObjective<float> mobj;
                        for (std::size_t m = 0; m < mem.size(); ++m) {
                            xm.col(static_cast<Eigen::Index>(m)) = column(mem[m]);
                            mobj.targets.push_back({mem[m].row, past.first_row, past.first_row + past.num_classes});
                        }
                        net.loss_and_grad(xm, mobj, gk);
                        refs.col(static_cast<Eigen::Index>(k)) = to_double(gk);
                    }
                    grad = gem_project(to_double(grad), refs, cfg.gem_tolerance, cfg.gem_max_iterations).cast<float>();
                }
                adam.step(net.params(), grad);
            }
        }

        switch (method) {
            case Baseline::Er: {
                auto picked = pick_per_class(task, static_cast<Eigen::Index>(t), cfg.buffer_per_class, memory_rng);
                buffer.insert(buffer.end(), picked.begin(), picked.end());
                break;
            }
            case Baseline::Gem:
                if (cfg.gem_mem_per_task > 0)
                    episodic.push_back(pick_uniform(task, static_cast<Eigen::Index>(t), cfg.gem_mem_per_task, memory_rng));
                break;
            case Baseline::Ewc: {
                std::vector<ClassTarget> targets;
                for (int y : task.train_y) targets.push_back({task.first_row + y, 0, seen});
                ewc.fisher.push_back(diagonal_fisher(net, Mat<float>(task.train_x), targets));
                ewc.anchors.push_back(net.params());
                break;
            }
            case Baseline::Si: si.consolidate(net.params(), static_cast<float>(cfg.si_xi)); break;
            default: break;
        }
        result.train_seconds += seconds_since(t0);
        eval.evaluate(net, static_cast<int>(t));
    }
    result.replay_buffer_size = static_cast<long>(buffer.size());
    return result;
}

}  // namespace nesycl
