// nesycl: dataset generation, continual episodes, sweeps, reports and plots.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "nesycl/harness.hpp"
#include "nesycl/plot.hpp"
#include "nesycl/selftest.hpp"

namespace fs = std::filesystem;
using namespace nesycl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::uint64_t default_seed() {
    if (const char* s = std::getenv("NESYCL_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw ConfigError(std::string("NESYCL_SEED is not an unsigned integer: ") + s);
        }
    }
    return 0;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

// Flags shared by gen/run/sweep. Values are applied only when given, so they
// override the config file.
struct Flags {
    std::string config;
    std::string method;
    std::string decomp;
    std::string extractor;
    int tasks = 0, classes = 0, train = 0, test = 0, pretrain_classes = 0, pretrain_per_class = 0;
    double noise = 0;
    int epochs = 0, batch = 0, hidden = 0, pretrain_epochs = 0;
    double lr = 0, lambda = 0;
    int buffer = 0, gem_mem = 0;
    double ewc_lambda = 0, si_c = 0, lwf_lambda = 0, lwf_temperature = 0;
    std::uint64_t seed = 0;
    int num_seeds = 0;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
    bool force = false;
    int jobs = 1;
};

void add_stream_flags(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "JSON config file (flags override its values)")->check(CLI::ExistingFile);
    app.add_option("--tasks", f.tasks, "number of tasks T")->check(CLI::PositiveNumber);
    app.add_option("--classes", f.classes, "classes per task")->check(CLI::PositiveNumber);
    app.add_option("--train", f.train, "train samples per class")->check(CLI::PositiveNumber);
    app.add_option("--test", f.test, "test samples per class")->check(CLI::NonNegativeNumber);
    app.add_option("--noise", f.noise, "translational noise u (px)")->check(CLI::NonNegativeNumber);
    app.add_option("--pretrain-classes", f.pretrain_classes, "pretrain classes")->check(CLI::NonNegativeNumber);
    app.add_option("--pretrain-per-class", f.pretrain_per_class, "samples per pretrain class");
    app.add_option("--seed", f.seed, "master seed (default $NESYCL_SEED or 0)");
    app.add_option("--out-dir", f.out_dir, "output directory")->required();
    app.add_flag("--force", f.force, "overwrite existing outputs");
}

void add_run_flags(CLI::App& app, Flags& f) {
    add_stream_flags(app, f);
    app.add_option("--method", f.method, "nesybicl|symbolic|finetune|multitask|er|ewc|si|lwf|gem");
    app.add_option("--decomp", f.decomp, "oracle|classical");
    app.add_option("--extractor", f.extractor, "pretrained|random");
    app.add_option("--pretrain-epochs", f.pretrain_epochs, "extractor pretraining epochs")->check(CLI::NonNegativeNumber);
    app.add_option("--epochs", f.epochs, "training epochs per task")->check(CLI::NonNegativeNumber);
    app.add_option("--batch", f.batch, "batch size")->check(CLI::PositiveNumber);
    app.add_option("--hidden", f.hidden, "embedding width p")->check(CLI::PositiveNumber);
    app.add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
    app.add_option("--lambda", f.lambda, "integration loss weight")->check(CLI::NonNegativeNumber);
    app.add_option("--buffer-per-class", f.buffer, "ER buffer per class")->check(CLI::NonNegativeNumber);
    app.add_option("--ewc-lambda", f.ewc_lambda, "EWC strength")->check(CLI::NonNegativeNumber);
    app.add_option("--si-c", f.si_c, "SI strength")->check(CLI::NonNegativeNumber);
    app.add_option("--lwf-lambda", f.lwf_lambda, "LwF strength")->check(CLI::NonNegativeNumber);
    app.add_option("--lwf-temperature", f.lwf_temperature, "LwF temperature")->check(CLI::PositiveNumber);
    app.add_option("--gem-mem", f.gem_mem, "GEM memory per task")->check(CLI::NonNegativeNumber);
    app.add_option("--num-seeds", f.num_seeds, "seeds seed..seed+n-1 (default 4)")->check(CLI::PositiveNumber);
    app.add_option("--seeds", f.seeds, "explicit seed list")->delimiter(',');
    app.add_option("--jobs", f.jobs, "parallel seeds")->check(CLI::PositiveNumber);
}

bool given(const CLI::App& app, const std::string& name) {
    const auto* o = app.get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
}

EpisodeConfig build_config(const CLI::App& app, const Flags& f) {
    EpisodeConfig c = f.config.empty() ? EpisodeConfig{} : episode_config_from_json(read_json_file(f.config));
    const bool file_seeds = !f.config.empty() && read_json_file(f.config).contains("seeds");
    auto& s = c.stream;
    auto& t = c.baseline.train;
    if (given(app, "--tasks")) s.num_tasks = f.tasks;
    if (given(app, "--classes")) s.classes_per_task = f.classes;
    if (given(app, "--train")) s.train_per_class = f.train;
    if (given(app, "--test")) s.test_per_class = f.test;
    if (given(app, "--noise")) s.noise_scale = f.noise;
    if (given(app, "--pretrain-classes")) s.pretrain_classes = f.pretrain_classes;
    if (given(app, "--pretrain-per-class")) s.pretrain_per_class = f.pretrain_per_class;
    if (given(app, "--method")) c.method = parse_method(f.method);
    if (given(app, "--decomp")) c.decomposition = parse_decomp_mode(f.decomp);
    if (given(app, "--extractor")) {
        if (f.extractor == "pretrained") c.extractor = FeatureExtractor::Mode::Pretrained;
        else if (f.extractor == "random") c.extractor = FeatureExtractor::Mode::RandomFrozen;
        else throw ConfigError("--extractor: expected pretrained or random, got '" + f.extractor + "'");
    }
    if (given(app, "--pretrain-epochs")) c.pretrain_epochs = f.pretrain_epochs;
    if (given(app, "--epochs")) t.epochs = f.epochs;
    if (given(app, "--batch")) t.batch_size = f.batch;
    if (given(app, "--hidden")) t.hidden_dim = f.hidden;
    if (given(app, "--lr")) t.learning_rate = f.lr;
    if (given(app, "--lambda")) t.lambda = f.lambda;
    if (given(app, "--buffer-per-class")) c.baseline.buffer_per_class = f.buffer;
    if (given(app, "--ewc-lambda")) c.baseline.ewc_lambda = f.ewc_lambda;
    if (given(app, "--si-c")) c.baseline.si_c = f.si_c;
    if (given(app, "--lwf-lambda")) c.baseline.lwf_lambda = f.lwf_lambda;
    if (given(app, "--lwf-temperature")) c.baseline.lwf_temperature = f.lwf_temperature;
    if (given(app, "--gem-mem")) c.baseline.gem_mem_per_task = f.gem_mem;

    const std::uint64_t base = given(app, "--seed") ? f.seed : default_seed();
    if (given(app, "--seeds")) {
        c.seeds = f.seeds;
    } else if (given(app, "--seed") || given(app, "--num-seeds") || !file_seeds) {
        const int n = given(app, "--num-seeds") ? f.num_seeds : (file_seeds ? static_cast<int>(c.seeds.size()) : 4);
        c.seeds.clear();
        for (int k = 0; k < n; ++k) c.seeds.push_back(base + static_cast<std::uint64_t>(k));
    }
    s.master_seed = base;
    c.validate();
    return c;
}

void ensure_fresh(const fs::path& dir, bool force) {
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!force) throw ConfigError(dir.string() + " exists and is not empty; pass --force to overwrite");
        fs::remove_all(dir);
    }
}

int cmd_gen(const CLI::App& app, const Flags& f) {
    EpisodeConfig c = build_config(app, f);
    // The on-disk dataset holds only the continual stream unless asked otherwise.
    if (!given(app, "--pretrain-classes") && f.config.empty()) c.stream.pretrain_classes = 0;
    const fs::path out = f.out_dir;
    ensure_fresh(out, f.force);
    const auto stream = build_task_stream(c.stream);
    const auto summary = write_dataset(stream, out);
    std::cout << "wrote " << out.string() << ": " << summary.classes << " classes, " << summary.train << " train, "
              << summary.test << " test, " << summary.pretrain << " pretrain samples (" << summary.images << " images)\n";
    return kExitOk;
}

struct RunOutputs {
    std::vector<nlohmann::json> results;
    int failures = 0;
};

RunOutputs run_seeds(const EpisodeConfig& c, const fs::path& out, int jobs) {
    RunOutputs outputs;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < c.seeds.size();) {
            const auto seed = c.seeds[k];
            EpisodeResult r;
            try {
                r = run_episode(c, seed);
            } catch (const EpisodeFailure& e) {
                r = e.partial();
            } catch (const std::exception& e) {
                r.method = c.method;
                r.seed = seed;
                r.error = e.what();
            }
            const auto dir = write_result(out, c, r);
            std::lock_guard lock(mu);
            if (!r.error.empty()) {
                ++outputs.failures;
                std::cerr << "seed " << seed << " failed: " << r.error << '\n';
            } else {
                std::printf("%s seed %llu: A_all %.2f", to_string(c.method).c_str(), static_cast<unsigned long long>(seed), r.metrics->a_all);
                if (r.metrics->a_last) std::printf("  A_last %.2f", *r.metrics->a_last);
                std::printf("  -> %s\n", dir.string().c_str());
                std::fflush(stdout);
            }
            outputs.results.push_back(result_json(c, r));
        }
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < std::min<int>(jobs, static_cast<int>(c.seeds.size())); ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    std::sort(outputs.results.begin(), outputs.results.end(),
              [](const auto& a, const auto& b) { return a.at("seed").template get<std::uint64_t>() < b.at("seed").template get<std::uint64_t>(); });
    return outputs;
}

void write_reports(const fs::path& out, const std::vector<nlohmann::json>& results) {
    const auto rows = aggregate(results);
    write_file_atomic(out / "report.csv", report_csv(rows));
    write_file_atomic(out / "report.md", report_md(rows));
}

int cmd_run(const CLI::App& app, const Flags& f) {
    const EpisodeConfig c = build_config(app, f);
    const fs::path out = f.out_dir;
    const fs::path cfg_dir = out / config_hash(c);
    for (auto seed : c.seeds) ensure_fresh(cfg_dir / ("seed" + std::to_string(seed)), f.force);
    const auto outputs = run_seeds(c, out, f.jobs);
    write_reports(out, load_results({out}));
    std::cout << report_md(aggregate(outputs.results));
    return outputs.failures == 0 ? kExitOk : kExitRuntime;
}

int cmd_sweep(const CLI::App& app, const Flags& f, const std::string& kind_name, const std::vector<double>& grid) {
    const EpisodeConfig base = build_config(app, f);
    const auto kind = parse_sweep_kind(kind_name);
    const fs::path out = f.out_dir;
    ensure_fresh(out, f.force);
    std::mutex mu;
    const auto rows = sweep(kind, grid, base, [&](const EpisodeConfig& c, const EpisodeResult& r) {
        std::lock_guard lock(mu);
        write_result(out / "runs", c, r);
    });
    write_file_atomic(out / "sweep.csv", sweep_csv(kind, rows));
    std::cout << sweep_csv(kind, rows);
    int failed = 0;
    for (const auto& r : rows) failed += !r.error.empty();
    return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_dir, bool force) {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    const auto results = load_results(paths);
    if (results.empty()) throw Error("no result.json files found");
    const fs::path out = out_dir;
    if (!force && (fs::exists(out / "report.csv") || fs::exists(out / "report.md")))
        throw ConfigError("report files exist in " + out.string() + "; pass --force to overwrite");
    write_reports(out, results);
    std::cout << report_md(aggregate(results));
    return kExitOk;
}

std::vector<Series> sweep_series(const fs::path& csv, bool last) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::map<std::string, Series> by_method;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() < 8) continue;
        const std::string& v = last ? cells[6] : cells[4];
        if (v.empty()) continue;
        auto& s = by_method[cells[2]];
        s.name = cells[2];
        s.points.emplace_back(std::stod(cells[1]), std::stod(v));
    }
    std::vector<Series> out;
    for (auto& [k, s] : by_method) out.push_back(std::move(s));
    return out;
}

int cmd_plot(const std::vector<std::string>& dirs, const std::string& out_dir, bool force) {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    std::vector<fs::path> sweeps;
    for (const auto& d : paths)
        if (fs::is_directory(d))
            for (const auto& e : fs::recursive_directory_iterator(d))
                if (e.path().filename() == "sweep.csv") sweeps.push_back(e.path());
    std::sort(sweeps.begin(), sweeps.end());
    const auto results = load_results(paths);
    if (results.empty() && sweeps.empty()) throw Error("no results found to plot");

    std::vector<std::pair<fs::path, std::string>> files;
    const fs::path out = out_dir;
    if (!results.empty()) {
        std::vector<Series> all, last;
        for (auto& c : learning_curves(results)) {
            all.push_back(std::move(c.all_tasks));
            last.push_back(std::move(c.last_task));
        }
        files.emplace_back(out / "curve_all_tasks.svg", line_chart_svg("Accuracy on all tasks seen so far", "task", "accuracy (%)", all));
        files.emplace_back(out / "curve_last_task.svg", line_chart_svg("Accuracy on the latest task", "task", "accuracy (%)", last));
    }
    for (std::size_t k = 0; k < sweeps.size(); ++k) {
        const std::string tag = sweeps.size() == 1 ? "" : "_" + std::to_string(k);
        files.emplace_back(out / ("sweep_all" + tag + ".svg"), line_chart_svg("Sweep: A_all", "value", "A_all (%)", sweep_series(sweeps[k], false)));
        files.emplace_back(out / ("sweep_last" + tag + ".svg"), line_chart_svg("Sweep: A_last", "value", "A_last (%)", sweep_series(sweeps[k], true)));
    }
    for (const auto& [path, svg] : files)
        if (fs::exists(path) && !force) throw ConfigError(path.string() + " exists; pass --force to overwrite");
    for (const auto& [path, svg] : files) {
        write_file_atomic(path, svg);
        std::cout << "wrote " << path.string() << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neuro-symbolic continual learning laboratory"};
    app.require_subcommand(1);

    Flags gen_flags, run_flags, sweep_flags;
    auto* gen = app.add_subcommand("gen", "generate a task stream dataset on disk");
    add_stream_flags(*gen, gen_flags);

    auto* run = app.add_subcommand("run", "run a continual episode for every seed");
    add_run_flags(*run, run_flags);

    auto* sweep_cmd = app.add_subcommand("sweep", "run an episode per grid value");
    add_run_flags(*sweep_cmd, sweep_flags);
    std::string sweep_kind;
    std::vector<double> grid;
    sweep_cmd->add_option("--kind", sweep_kind, "uncertainty|samples_per_class|lambda|long_episode")->required();
    sweep_cmd->add_option("--grid", grid, "comma-separated grid values")->delimiter(',')->required();

    std::vector<std::string> report_dirs, plot_dirs;
    std::string report_out, plot_out;
    bool report_force = false, plot_force = false;
    auto* report = app.add_subcommand("report", "aggregate result.json files into report.csv and report.md");
    report->add_option("dirs", report_dirs, "results directories")->required();
    report->add_option("--out-dir", report_out, "output directory")->required();
    report->add_flag("--force", report_force, "overwrite existing reports");

    auto* plot = app.add_subcommand("plot", "render learning and sweep curves as SVG");
    plot->add_option("dirs", plot_dirs, "results directories")->required();
    plot->add_option("--out-dir", plot_out, "output directory")->required();
    plot->add_flag("--force", plot_force, "overwrite existing plots");

    auto* selftest = app.add_subcommand("selftest", "run the fast invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*gen) return cmd_gen(*gen, gen_flags);
        if (*run) return cmd_run(*run, run_flags);
        if (*sweep_cmd) return cmd_sweep(*sweep_cmd, sweep_flags, sweep_kind, grid);
        if (*report) return cmd_report(report_dirs, report_out, report_force);
        if (*plot) return cmd_plot(plot_dirs, plot_out, plot_force);
        if (*selftest) return run_selftest(std::cout) == 0 ? kExitOk : kExitRuntime;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
