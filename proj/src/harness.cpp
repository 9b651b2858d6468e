#include "nesycl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "nesycl/neural.hpp"

namespace nesycl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::Nesybicl, "nesybicl"}, {Method::Symbolic, "symbolic"}, {Method::Finetune, "finetune"},
    {Method::Multitask, "multitask"}, {Method::Er, "er"},           {Method::Ewc, "ewc"},
    {Method::Si, "si"},               {Method::Lwf, "lwf"},         {Method::Gem, "gem"}};

Baseline to_baseline(Method m) {
    switch (m) {
        case Method::Finetune: return Baseline::Finetune;
        case Method::Multitask: return Baseline::Multitask;
        case Method::Er: return Baseline::Er;
        case Method::Ewc: return Baseline::Ewc;
        case Method::Si: return Baseline::Si;
        case Method::Lwf: return Baseline::Lwf;
        case Method::Gem: return Baseline::Gem;
        default: throw ConfigError("not a baseline method: " + to_string(m));
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

nlohmann::json train_to_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"batch_size", t.batch_size},
            {"lambda", t.lambda},               {"hidden_dim", t.hidden_dim}};
}

TrainConfig train_from_json(const nlohmann::json& j, TrainConfig t) {
    for (const auto& [key, value] : j.items()) {
        if (key == "learning_rate") t.learning_rate = value.get<double>();
        else if (key == "epochs") t.epochs = value.get<int>();
        else if (key == "batch_size") t.batch_size = value.get<int>();
        else if (key == "lambda") t.lambda = value.get<double>();
        else if (key == "hidden_dim") t.hidden_dim = value.get<int>();
        else throw ConfigError("unknown train config key: " + key);
    }
    return t;
}

nlohmann::json baseline_to_json(const BaselineConfig& b) {
    return {{"buffer_per_class", b.buffer_per_class}, {"ewc_lambda", b.ewc_lambda},     {"si_c", b.si_c},
            {"si_xi", b.si_xi},                       {"lwf_lambda", b.lwf_lambda},     {"lwf_temperature", b.lwf_temperature},
            {"gem_mem_per_task", b.gem_mem_per_task}, {"gem_tolerance", b.gem_tolerance}, {"gem_max_iterations", b.gem_max_iterations}};
}

BaselineConfig baseline_from_json(const nlohmann::json& j, BaselineConfig b) {
    for (const auto& [key, value] : j.items()) {
        if (key == "buffer_per_class") b.buffer_per_class = value.get<int>();
        else if (key == "ewc_lambda") b.ewc_lambda = value.get<double>();
        else if (key == "si_c") b.si_c = value.get<double>();
        else if (key == "si_xi") b.si_xi = value.get<double>();
        else if (key == "lwf_lambda") b.lwf_lambda = value.get<double>();
        else if (key == "lwf_temperature") b.lwf_temperature = value.get<double>();
        else if (key == "gem_mem_per_task") b.gem_mem_per_task = value.get<int>();
        else if (key == "gem_tolerance") b.gem_tolerance = value.get<double>();
        else if (key == "gem_max_iterations") b.gem_max_iterations = value.get<int>();
        else throw ConfigError("unknown baseline config key: " + key);
    }
    return b;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

int local_label(const Task& task, int class_id) {
    const auto it = std::find(task.class_ids.begin(), task.class_ids.end(), class_id);
    if (it == task.class_ids.end()) throw Error("sample label outside its task");
    return static_cast<int>(it - task.class_ids.begin());
}

std::vector<std::vector<int>> test_truth(const TaskStream& stream) {
    std::vector<std::vector<int>> truth;
    for (const auto& t : stream.tasks) {
        auto& v = truth.emplace_back();
        for (const auto& s : t.test) v.push_back(s.label);
    }
    return truth;
}

std::map<int, std::vector<ConceptGraph>> graphs_by_class(const Task& task, const std::vector<ConceptGraph>& graphs) {
    std::map<int, std::vector<ConceptGraph>> out;
    for (int c : task.class_ids) out[c];
    for (std::size_t n = 0; n < task.train.size(); ++n) out[task.train[n].label].push_back(graphs[n]);
    return out;
}

}  // namespace

std::string to_string(Method m) {
    for (const auto& [k, name] : kMethodNames)
        if (k == m) return name;
    return "?";
}

Method parse_method(const std::string& name) {
    for (const auto& [k, n] : kMethodNames)
        if (name == n) return k;
    throw ConfigError("unknown method '" + name + "'");
}

std::string to_string(DecompMode m) { return m == DecompMode::Oracle ? "oracle" : "classical"; }

DecompMode parse_decomp_mode(const std::string& name) {
    if (name == "oracle") return DecompMode::Oracle;
    if (name == "classical") return DecompMode::Classical;
    throw ConfigError("unknown decomposition mode '" + name + "'");
}

bool uses_symbolic(Method m) { return m == Method::Nesybicl || m == Method::Symbolic; }
bool uses_features(Method m) { return m != Method::Symbolic; }

void EpisodeConfig::validate() const {
    stream.validate();
    baseline.validate();
    baseline.train.validate();
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs must be >= 0");
    if (extractor == FeatureExtractor::Mode::Pretrained && uses_features(method) && stream.pretrain_classes < 1)
        throw ConfigError("pretrained extractor needs pretrain_classes >= 1");
}

nlohmann::json to_json(const EpisodeConfig& c) {
    // Each run seeds its own stream, so the stream's master seed is not part of the config.
    auto stream = to_json(c.stream);
    stream.erase("master_seed");
    return {{"method", to_string(c.method)},
            {"decomposition", to_string(c.decomposition)},
            {"stream", stream},
            {"train", train_to_json(c.baseline.train)},
            {"baseline", baseline_to_json(c.baseline)},
            {"extractor", c.extractor == FeatureExtractor::Mode::Pretrained ? "pretrained" : "random"},
            {"pretrain_epochs", c.pretrain_epochs},
            {"seeds", c.seeds}};
}

EpisodeConfig episode_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    EpisodeConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "method") c.method = parse_method(value.get<std::string>());
            else if (key == "decomposition") c.decomposition = parse_decomp_mode(value.get<std::string>());
            else if (key == "stream") c.stream = stream_config_from_json(value);
            else if (key == "train") c.baseline.train = train_from_json(value, c.baseline.train);
            else if (key == "baseline") c.baseline = baseline_from_json(value, c.baseline);
            else if (key == "extractor") {
                const auto s = value.get<std::string>();
                if (s == "pretrained") c.extractor = FeatureExtractor::Mode::Pretrained;
                else if (s == "random") c.extractor = FeatureExtractor::Mode::RandomFrozen;
                else throw ConfigError("unknown extractor mode '" + s + "'");
            } else if (key == "pretrain_epochs") c.pretrain_epochs = value.get<int>();
            else if (key == "seeds") c.seeds = value.get<std::vector<std::uint64_t>>();
            else throw ConfigError("unknown config key: " + key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return c;
}

std::string config_hash(const EpisodeConfig& c) {
    auto j = to_json(c);
    j.erase("seeds");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

std::optional<double> Timing::symbolic_per_sample() const {
    if (symbolic_inference_samples == 0) return std::nullopt;
    return symbolic_inference / static_cast<double>(symbolic_inference_samples);
}

std::optional<double> Timing::neural_per_sample() const {
    if (neural_inference_samples == 0) return std::nullopt;
    return neural_inference / static_cast<double>(neural_inference_samples);
}

std::optional<double> Timing::symbolic_end_to_end() const {
    const auto r = symbolic_per_sample();
    if (!r || decomposed_samples == 0) return std::nullopt;
    return *r + decompose / static_cast<double>(decomposed_samples);
}

std::optional<double> Timing::neural_end_to_end() const {
    const auto r = neural_per_sample();
    if (!r || extracted_samples == 0) return std::nullopt;
    return *r + extract_features / static_cast<double>(extracted_samples);
}

nlohmann::json to_json(const Timing& t) {
    auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"generate_s", t.generate},
            {"pretrain_s", t.pretrain},
            {"extract_features_s", t.extract_features},
            {"decompose_s", t.decompose},
            {"symbolic_train_s", t.symbolic_train},
            {"neural_train_s", t.neural_train},
            {"symbolic_inference_s", t.symbolic_inference},
            {"neural_inference_s", t.neural_inference},
            {"symbolic_inference_samples", t.symbolic_inference_samples},
            {"neural_inference_samples", t.neural_inference_samples},
            {"symbolic_per_sample_s", opt(t.symbolic_per_sample())},
            {"neural_per_sample_s", opt(t.neural_per_sample())},
            {"extracted_samples", t.extracted_samples},
            {"decomposed_samples", t.decomposed_samples},
            {"symbolic_end_to_end_s", opt(t.symbolic_end_to_end())},
            {"neural_end_to_end_s", opt(t.neural_end_to_end())}};
}

EpisodeData prepare_episode(const EpisodeConfig& config, std::uint64_t seed, PrepareOptions what) {
    config.validate();
    EpisodeData data;
    data.seed = seed;
    StreamConfig sc = config.stream;
    sc.master_seed = seed;
    if (!what.features || config.extractor != FeatureExtractor::Mode::Pretrained) sc.pretrain_classes = 0;

    auto t0 = Clock::now();
    data.stream = build_task_stream(sc);
    data.timing.generate = seconds_since(t0);

    if (what.features) {
        FeatureExtractor fx(derive_seed(seed, 0xfea7ULL));
        if (config.extractor == FeatureExtractor::Mode::Pretrained) {
            t0 = Clock::now();
            std::vector<Raster> rasters;
            std::vector<int> labels;
            for (const auto& s : data.stream.pretrain) {
                rasters.push_back(render(s.scene));
                labels.push_back(s.label);
            }
            FeatureExtractor::PretrainOptions po;
            po.epochs = config.pretrain_epochs;
            po.batch_size = config.baseline.train.batch_size;
            po.hidden_dim = config.baseline.train.hidden_dim;
            po.learning_rate = config.baseline.train.learning_rate;
            po.seed = derive_seed(seed, 0x9e7aULL);
            fx.pretrain(rasters, labels, po);
            data.timing.pretrain = seconds_since(t0);
        }
        t0 = Clock::now();
        int row = 0;
        for (const auto& task : data.stream.tasks) {
            TaskFeatures tf;
            tf.task_id = task.task_id;
            tf.first_row = row;
            tf.num_classes = static_cast<int>(task.class_ids.size());
            row += tf.num_classes;
            std::vector<Raster> train, test;
            for (const auto& s : task.train) {
                train.push_back(render(s.scene));
                tf.train_y.push_back(local_label(task, s.label));
            }
            for (const auto& s : task.test) {
                test.push_back(render(s.scene));
                tf.test_y.push_back(local_label(task, s.label));
            }
            data.timing.extracted_samples += static_cast<long>(train.size() + test.size());
            tf.train_x = fx.extract_batch(train);
            tf.test_x = fx.extract_batch(test);
            if (tf.test_x.cols() == 0) tf.test_x.resize(fx.feature_dim(), 0);
            data.features.push_back(std::move(tf));
        }
        data.timing.extract_features = seconds_since(t0);
        data.extractor = std::move(fx);
    }

    if (what.graphs) {
        t0 = Clock::now();
        for (const auto& task : data.stream.tasks) {
            auto& tr = data.train_graphs.emplace_back();
            auto& te = data.test_graphs.emplace_back();
            for (const auto& s : task.train) tr.push_back(decompose(s.scene, config.decomposition));
            for (const auto& s : task.test) te.push_back(decompose(s.scene, config.decomposition));
            data.timing.decomposed_samples += static_cast<long>(task.train.size() + task.test.size());
        }
        data.timing.decompose = seconds_since(t0);
    }
    return data;
}

AccuracyMatrix evaluate_matrix(const std::vector<std::vector<int>>& truth, const TaskPredictor& predict) {
    const int t = static_cast<int>(truth.size());
    AccuracyMatrix r(t);
    for (int j = 0; j < t; ++j)
        for (int i = 0; i <= j; ++i) {
            const auto& y = truth[static_cast<std::size_t>(i)];
            const auto pred = predict(i, j);
            if (pred.size() != y.size()) throw ShapeMismatch("evaluate_matrix: prediction count mismatch");
            int correct = 0;
            for (std::size_t n = 0; n < y.size(); ++n) correct += pred[n] == y[n];
            r.set(i, j, y.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(y.size()));
        }
    return r;
}

EpisodeResult run_method(const EpisodeConfig& config, const EpisodeData& data) {
    EpisodeResult result;
    result.method = config.method;
    result.seed = data.seed;
    result.timing = data.timing;
    const int num_tasks = static_cast<int>(data.stream.tasks.size());
    result.r = AccuracyMatrix(num_tasks);
    if (data.extractor) result.extractor_hash_start = data.extractor->hash();

    try {
        if (!uses_symbolic(config.method)) {
            if (data.features.empty()) throw Error("run_method: episode prepared without features");
            BaselineConfig bc = config.baseline;
            bc.train.seed = data.seed;
            const auto br = run_baseline(to_baseline(config.method), data.features, bc);
            result.r = br.r;
            result.timing.neural_train = br.train_seconds;
            result.timing.neural_inference = br.inference_seconds;
            result.timing.neural_inference_samples = br.inference_samples;
        } else {
            if (data.train_graphs.size() != static_cast<std::size_t>(num_tasks)) throw Error("run_method: episode prepared without graphs");
            const bool neural = config.method == Method::Nesybicl;
            if (neural && data.features.empty()) throw Error("run_method: episode prepared without features");
            const auto truth = test_truth(data.stream);
            KnowledgeBase kb;
            Mlp<float> net;
            auto symbolic_predict = [&](int i) {
                const auto& task = data.stream.tasks[static_cast<std::size_t>(i)];
                const auto& graphs = data.test_graphs[static_cast<std::size_t>(i)];
                std::vector<int> out;
                out.reserve(graphs.size());
                const auto t0 = Clock::now();
                for (const auto& g : graphs) out.push_back(argmax(classify(kb, g, task.class_ids)));
                result.timing.symbolic_inference += seconds_since(t0);
                result.timing.symbolic_inference_samples += static_cast<long>(graphs.size());
                return out;
            };
            auto neural_predict = [&](int i) {
                const auto& task = data.stream.tasks[static_cast<std::size_t>(i)];
                const auto& tf = data.features[static_cast<std::size_t>(i)];
                const auto t0 = Clock::now();
                const auto rows = predict(net, tf.test_x, 0, tf.num_classes);
                result.timing.neural_inference += seconds_since(t0);
                result.timing.neural_inference_samples += static_cast<long>(rows.size());
                std::vector<int> out;
                out.reserve(rows.size());
                for (int r : rows) out.push_back(task.class_ids[static_cast<std::size_t>(r)]);
                return out;
            };

            for (int t = 0; t < num_tasks; ++t) {
                const auto& task = data.stream.tasks[static_cast<std::size_t>(t)];
                const auto& graphs = data.train_graphs[static_cast<std::size_t>(t)];
                auto t0 = Clock::now();
                kb = kb.updated(graphs_by_class(task, graphs));
                result.timing.symbolic_train += seconds_since(t0);

                if (neural) {
                    const auto& tf = data.features[static_cast<std::size_t>(t)];
                    t0 = Clock::now();
                    Rng rng(derive_seed(data.seed, 0x4e75ULL, static_cast<std::uint64_t>(t)));
                    net = make_reasoner(static_cast<int>(tf.train_x.rows()), config.baseline.train.hidden_dim, tf.num_classes, true);
                    reset_heads(net, tf.num_classes, rng);
                    TrainConfig tc = config.baseline.train;
                    tc.seed = derive_seed(data.seed, static_cast<std::uint64_t>(t));
                    const Eigen::MatrixXf attr = tc.lambda > 0 ? attribute_targets(graphs) : Eigen::MatrixXf();
                    train_task(net, tf.train_x, tf.train_y, attr, tc);
                    result.timing.neural_train += seconds_since(t0);
                }

                // Alg. 2: the neural reasoner answers only for the most recent task.
                for (int i = 0; i <= t; ++i) {
                    const auto pred = neural && i == t ? neural_predict(i) : symbolic_predict(i);
                    const auto& y = truth[static_cast<std::size_t>(i)];
                    int correct = 0;
                    for (std::size_t n = 0; n < y.size(); ++n) correct += pred[n] == y[n];
                    result.r.set(i, t, y.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(y.size()));
                }
            }
            result.kb = kb;
        }
    } catch (const std::exception& e) {
        result.error = e.what();
        throw EpisodeFailure(e.what(), result);
    }
    if (data.extractor) result.extractor_hash_end = data.extractor->hash();
    result.metrics = metrics(result.r, config.method != Method::Multitask);
    return result;
}

EpisodeResult run_episode(const EpisodeConfig& config, std::uint64_t seed) {
    PrepareOptions what;
    what.features = uses_features(config.method);
    what.graphs = uses_symbolic(config.method);
    return run_method(config, prepare_episode(config, seed, what));
}

// ---- persistence -------------------------------------------------------------

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        if (!out.flush()) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string matrix_csv(const AccuracyMatrix& r) {
    std::string out = "task,after_task,accuracy\n";
    for (int i = 0; i < r.num_tasks(); ++i)
        for (int j = i; j < r.num_tasks(); ++j)
            if (r.has(i, j)) out += std::to_string(i) + "," + std::to_string(j) + "," + fmt("%.17g", r.at(i, j)) + "\n";
    return out;
}

nlohmann::json result_json(const EpisodeConfig& config, const EpisodeResult& result) {
    nlohmann::json matrix = nlohmann::json::array();
    for (int i = 0; i < result.r.num_tasks(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < result.r.num_tasks(); ++j) row.push_back(result.r.has(i, j) ? nlohmann::json(result.r.at(i, j)) : nlohmann::json(nullptr));
        matrix.push_back(std::move(row));
    }
    nlohmann::json j = {{"format_version", 1},
                        {"method", to_string(result.method)},
                        {"seed", result.seed},
                        {"config_hash", config_hash(config)},
                        {"config", to_json(config)},
                        {"status", result.error.empty() ? "ok" : "failed"},
                        {"matrix", matrix},
                        {"timing", to_json(result.timing)},
                        {"extractor_hash", {{"start", result.extractor_hash_start}, {"end", result.extractor_hash_end}}}};
    if (!result.error.empty()) j["error"] = result.error;
    if (result.metrics) {
        j["a_all"] = result.metrics->a_all;
        j["a_last"] = result.metrics->a_last ? nlohmann::json(*result.metrics->a_last) : nlohmann::json(nullptr);
    }
    if (result.kb) j["knowledge_base"] = result.kb->to_json();
    return j;
}

std::filesystem::path write_result(const std::filesystem::path& root, const EpisodeConfig& config, const EpisodeResult& result) {
    const auto dir = root / config_hash(config) / ("seed" + std::to_string(result.seed));
    write_file_atomic(dir / "matrix.csv", matrix_csv(result.r));
    write_file_atomic(dir / "result.json", result_json(config, result).dump(2) + "\n");
    return dir;
}

std::vector<ReportRow> aggregate(const std::vector<nlohmann::json>& results) {
    std::map<std::pair<std::string, std::string>, ReportRow> groups;
    for (const auto& r : results) {
        if (r.value("status", "ok") != "ok" || !r.contains("a_all")) continue;
        const auto method = r.at("method").get<std::string>();
        const auto hash = r.at("config_hash").get<std::string>();
        auto& row = groups[{method, hash}];
        row.method = method;
        row.config_hash = hash;
        row.a_all.push_back(r.at("a_all").get<double>());
        if (!r.at("a_last").is_null()) row.a_last.push_back(r.at("a_last").get<double>());
    }
    std::vector<ReportRow> out;
    for (auto& [k, row] : groups) out.push_back(std::move(row));
    return out;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::string out = "method,config_hash,seeds,a_all_mean,a_all_std,a_last_mean,a_last_std\n";
    for (const auto& r : rows) {
        const auto all = mean_std(r.a_all);
        out += r.method + "," + r.config_hash + "," + std::to_string(r.a_all.size()) + "," + fmt("%.2f", all.mean) + "," +
               fmt("%.2f", all.std) + ",";
        if (r.a_last.empty()) {
            out += ",\n";
        } else {
            const auto last = mean_std(r.a_last);
            out += fmt("%.2f", last.mean) + "," + fmt("%.2f", last.std) + "\n";
        }
    }
    return out;
}

std::string report_md(const std::vector<ReportRow>& rows) {
    std::string out = "| Method | Config | Seeds | A_all (%) | A_last (%) |\n|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        const auto all = mean_std(r.a_all);
        std::string last = "n/a";
        if (!r.a_last.empty()) {
            const auto l = mean_std(r.a_last);
            last = fmt("%.1f", l.mean) + " ± " + fmt("%.1f", l.std);
        }
        out += "| " + r.method + " | " + r.config_hash + " | " + std::to_string(r.a_all.size()) + " | " + fmt("%.1f", all.mean) +
               " ± " + fmt("%.1f", all.std) + " | " + last + " |\n";
    }
    return out;
}

std::vector<nlohmann::json> load_results(const std::vector<std::filesystem::path>& dirs) {
    std::vector<std::filesystem::path> files;
    for (const auto& d : dirs) {
        if (!std::filesystem::exists(d)) throw Error("no such results directory: " + d.string());
        if (std::filesystem::is_regular_file(d)) {
            files.push_back(d);
            continue;
        }
        for (const auto& e : std::filesystem::recursive_directory_iterator(d))
            if (e.is_regular_file() && e.path().filename() == "result.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<nlohmann::json> out;
    for (const auto& f : files) {
        std::ifstream in(f);
        try {
            out.push_back(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw Error("ill-formed result file " + f.string() + ": " + e.what());
        }
    }
    return out;
}

// ---- sweeps --------------------------------------------------------------------

std::string to_string(SweepKind k) {
    switch (k) {
        case SweepKind::Uncertainty: return "uncertainty";
        case SweepKind::SamplesPerClass: return "samples_per_class";
        case SweepKind::Lambda: return "lambda";
        case SweepKind::LongEpisode: return "long_episode";
    }
    return "?";
}

SweepKind parse_sweep_kind(const std::string& name) {
    for (auto k : {SweepKind::Uncertainty, SweepKind::SamplesPerClass, SweepKind::Lambda, SweepKind::LongEpisode})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown sweep kind '" + name + "'");
}

EpisodeConfig sweep_point(SweepKind kind, double value, const EpisodeConfig& base) {
    EpisodeConfig c = base;
    switch (kind) {
        case SweepKind::Uncertainty: c.stream.noise_scale = value; break;
        case SweepKind::SamplesPerClass: c.stream.train_per_class = static_cast<int>(std::lround(value)); break;
        case SweepKind::Lambda: c.baseline.train.lambda = value; break;
        case SweepKind::LongEpisode:
            c.stream.num_tasks = static_cast<int>(std::lround(value));
            c.stream.train_per_class = 20;
            c.stream.test_per_class = 5;
            break;
    }
    return c;
}

std::vector<SweepRow> sweep(SweepKind kind, const std::vector<double>& grid, const EpisodeConfig& base,
                            const std::function<void(const EpisodeConfig&, const EpisodeResult&)>& on_result) {
    if (grid.empty()) throw ConfigError("sweep grid is empty");
    std::vector<SweepRow> rows;
    for (double v : grid) {
        SweepRow row;
        row.value = v;
        row.method = to_string(base.method);
        try {
            const auto cfg = sweep_point(kind, v, base);
            cfg.validate();
            for (auto seed : cfg.seeds) {
                const auto r = run_episode(cfg, seed);
                row.a_all.push_back(r.metrics->a_all);
                if (r.metrics->a_last) row.a_last.push_back(*r.metrics->a_last);
                if (on_result) on_result(cfg, r);
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_csv(SweepKind kind, const std::vector<SweepRow>& rows) {
    std::string out = "kind,value,method,seeds,a_all_mean,a_all_std,a_last_mean,a_last_std,error\n";
    for (const auto& r : rows) {
        out += to_string(kind) + "," + fmt("%g", r.value) + "," + r.method + "," + std::to_string(r.a_all.size()) + ",";
        if (r.a_all.empty()) {
            out += ",,";
        } else {
            const auto a = mean_std(r.a_all);
            out += fmt("%.2f", a.mean) + "," + fmt("%.2f", a.std) + ",";
        }
        if (r.a_last.empty()) {
            out += ",,";
        } else {
            const auto a = mean_std(r.a_last);
            out += fmt("%.2f", a.mean) + "," + fmt("%.2f", a.std) + ",";
        }
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out += err + "\n";
    }
    return out;
}

}  // namespace nesycl
