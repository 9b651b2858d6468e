#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nesycl/baselines.hpp"
#include "nesycl/decompose.hpp"
#include "nesycl/errors.hpp"
#include "nesycl/features.hpp"
#include "nesycl/metrics.hpp"
#include "nesycl/scenegen.hpp"
#include "nesycl/symbolic.hpp"

namespace nesycl {

enum class Method { Nesybicl, Symbolic, Finetune, Multitask, Er, Ewc, Si, Lwf, Gem };

std::string to_string(Method m);
/// Throws ConfigError on an unknown name.
Method parse_method(const std::string& name);
std::string to_string(DecompMode m);
DecompMode parse_decomp_mode(const std::string& name);
bool uses_symbolic(Method m);
bool uses_features(Method m);

struct EpisodeConfig {
    Method method = Method::Nesybicl;
    DecompMode decomposition = DecompMode::Oracle;
    StreamConfig stream;
    /// Network and optimizer settings shared by nesybicl and every baseline;
    /// train.lambda only affects nesybicl, train.seed is replaced per run.
    BaselineConfig baseline;
    FeatureExtractor::Mode extractor = FeatureExtractor::Mode::Pretrained;
    int pretrain_epochs = 50;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};

    void validate() const;
};

nlohmann::json to_json(const EpisodeConfig& c);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
EpisodeConfig episode_config_from_json(const nlohmann::json& j);
/// Hex FNV-1a of the canonical JSON of everything except the seed list.
std::string config_hash(const EpisodeConfig& c);

/// Wall-clock seconds per phase. The reasoner-only inference times exclude
/// feature extraction and decomposition; the end-to-end figures add each
/// reasoner's input pipeline amortized over every sample it processed.
struct Timing {
    double generate = 0;
    double pretrain = 0;
    double extract_features = 0;
    double decompose = 0;
    double symbolic_train = 0;  // prototype selection
    double neural_train = 0;
    double symbolic_inference = 0;
    double neural_inference = 0;
    long symbolic_inference_samples = 0;
    long neural_inference_samples = 0;
    long extracted_samples = 0;
    long decomposed_samples = 0;

    std::optional<double> symbolic_per_sample() const;
    std::optional<double> neural_per_sample() const;
    /// Decomposition from the raster plus graph reasoning.
    std::optional<double> symbolic_end_to_end() const;
    /// Feature extraction plus the MLP.
    std::optional<double> neural_end_to_end() const;
};

nlohmann::json to_json(const Timing& t);

struct EpisodeResult {
    Method method = Method::Nesybicl;
    std::uint64_t seed = 0;
    AccuracyMatrix r;
    std::optional<EpisodeMetrics> metrics;  // absent when the run failed
    Timing timing;
    std::optional<KnowledgeBase> kb;       // symbolic and nesybicl
    std::uint64_t extractor_hash_start = 0;
    std::uint64_t extractor_hash_end = 0;
    std::string error;
};

/// Thrown by run_episode when a module fails mid-run; carries whatever part
/// of the accuracy matrix was already measured.
class EpisodeFailure : public Error {
public:
    EpisodeFailure(const std::string& what, EpisodeResult partial) : Error(what), partial_(std::move(partial)) {}
    const EpisodeResult& partial() const { return partial_; }

private:
    EpisodeResult partial_;
};

/// Everything one seed's methods share: the stream, the frozen extractor,
/// extracted features and the decomposed graphs.
struct EpisodeData {
    std::uint64_t seed = 0;
    TaskStream stream;
    std::optional<FeatureExtractor> extractor;
    std::vector<TaskFeatures> features;
    std::vector<std::vector<ConceptGraph>> train_graphs;  // per task
    std::vector<std::vector<ConceptGraph>> test_graphs;
    Timing timing;
};

struct PrepareOptions {
    bool features = true;
    bool graphs = true;
};

EpisodeData prepare_episode(const EpisodeConfig& config, std::uint64_t seed, PrepareOptions what = {});

/// Runs config.method on prepared data.
EpisodeResult run_method(const EpisodeConfig& config, const EpisodeData& data);

/// prepare_episode + run_method for one seed.
EpisodeResult run_episode(const EpisodeConfig& config, std::uint64_t seed);

/// Predicted labels (class ids) for task i's test set given the model
/// state after task j.
using TaskPredictor = std::function<std::vector<int>(int task, int after_task)>;

/// Fills R[i][j] for all i <= j by comparing the predictor to `truth`.
AccuracyMatrix evaluate_matrix(const std::vector<std::vector<int>>& truth, const TaskPredictor& predict);

// ---- persistence ---------------------------------------------------------

/// Writes `path` via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string matrix_csv(const AccuracyMatrix& r);
nlohmann::json result_json(const EpisodeConfig& config, const EpisodeResult& result);
/// `<root>/<config-hash>/seed<k>/{result.json, matrix.csv}`; returns the seed dir.
std::filesystem::path write_result(const std::filesystem::path& root, const EpisodeConfig& config, const EpisodeResult& result);

struct ReportRow {
    std::string method;
    std::string config_hash;
    std::vector<double> a_all;
    std::vector<double> a_last;  // empty for joint training
};

/// Groups result.json documents by (method, config hash); rows sorted by
/// method name, then hash.
std::vector<ReportRow> aggregate(const std::vector<nlohmann::json>& results);
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_md(const std::vector<ReportRow>& rows);

/// Every result.json found below the given directories, in path order.
std::vector<nlohmann::json> load_results(const std::vector<std::filesystem::path>& dirs);

// ---- sweeps ----------------------------------------------------------------

enum class SweepKind { Uncertainty, SamplesPerClass, Lambda, LongEpisode };

std::string to_string(SweepKind k);
SweepKind parse_sweep_kind(const std::string& name);

/// Applies one grid value to a copy of `base`.
EpisodeConfig sweep_point(SweepKind kind, double value, const EpisodeConfig& base);

struct SweepRow {
    double value = 0;
    std::string method;
    std::vector<double> a_all;
    std::vector<double> a_last;
    std::string error;  // non-empty when the point failed
};

/// One full run (all seeds) per grid value; failures are recorded and the
/// sweep continues. `on_result` sees every successful seed run.
std::vector<SweepRow> sweep(SweepKind kind, const std::vector<double>& grid, const EpisodeConfig& base,
                            const std::function<void(const EpisodeConfig&, const EpisodeResult&)>& on_result = {});
std::string sweep_csv(SweepKind kind, const std::vector<SweepRow>& rows);

}  // namespace nesycl
