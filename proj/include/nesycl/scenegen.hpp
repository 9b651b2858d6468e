#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "nesycl/graph.hpp"
#include "nesycl/rng.hpp"
#include "nesycl/scene.hpp"

namespace nesycl {

struct StreamConfig {
    int num_tasks = 10;
    int classes_per_task = 10;
    int train_per_class = 200;
    int test_per_class = 50;
    double noise_scale = 0.0;  // std-dev of translational jitter, pixels
    std::uint64_t master_seed = 0;
    int pretrain_classes = 50;
    /// Samples per pretrain class; negative means "same as train_per_class".
    int pretrain_per_class = -1;
    /// When true, the classes of one task are mutations of a shared task motif,
    /// so they share sub-concepts and differ in a few attributes or relations.
    bool task_motif = true;
    int max_mutations = 1;
    /// Minimum number of ring objects of a task motif (1..4).
    int motif_min_ring = 2;
    /// When > 0, task motifs are themselves 1..motif_drift mutations of one
    /// global motif, so every task is built from the same concept vocabulary.
    int motif_drift = 0;
    /// Relative frequency of mutation kinds: recolor, reshape, move, add, remove.
    std::array<double, 5> mutation_weights{1.0, 0.0, 1.0, 0.0, 0.0};

    int pretrain_samples_per_class() const { return pretrain_per_class < 0 ? train_per_class : pretrain_per_class; }
    void validate() const;
};

nlohmann::json to_json(const StreamConfig& c);
StreamConfig stream_config_from_json(const nlohmann::json& j);

struct Task {
    int task_id = 0;
    std::vector<int> class_ids;
    std::vector<Sample> train;
    std::vector<Sample> test;
};

struct TaskStream {
    StreamConfig config;
    std::vector<ClassSchema> schemas;  // indexed by class_id; pretrain classes come after continual ones
    std::vector<Task> tasks;
    std::vector<Sample> pretrain;
    int num_pretrain_classes() const { return config.pretrain_classes; }
};

/// Schema positions at zero noise, center first.
std::vector<Point> nominal_positions(const ClassSchema& schema);

/// Canonical concept graph of a schema (its nominal, noise-free scene).
ConceptGraph canonical_graph(const ClassSchema& schema);

/// Set of canonical graph keys used to enforce pairwise distinctness.
using SchemaKeySet = std::unordered_set<std::string>;

/// Draws a random schema whose canonical graph differs from every key in
/// `existing`; the new key is inserted. Throws SchemaSpaceExhausted after
/// 10,000 failed draws.
ClassSchema sample_class_schema(Rng& rng, SchemaKeySet& existing, int min_ring = 1);

/// Applies 1..max_mutations random edits (recolor, reshape, move, add or
/// remove a ring object) to `motif`, retrying until the result is distinct.
ClassSchema mutate_schema(const ClassSchema& motif, Rng& rng, SchemaKeySet& existing, int max_mutations,
                          const std::array<double, 5>& weights = {1.0, 1.0, 1.0, 1.0, 1.0});

Scene instantiate_scene(const ClassSchema& schema, Rng& rng, double noise_scale);

/// Aliasing-free point-sampled rasterization; deterministic.
Raster render(const Scene& scene);

/// Circumradius of an instance in pixels.
inline double object_radius(const ObjectInstance& o) { return kBaseObjectRadius * o.scale; }

/// Seed of the RNG stream that generates sample `index` of `class_id`.
std::uint64_t sample_seed(std::uint64_t master_seed, int class_id, int index);

/// Regenerates one sample independently of the rest of the stream.
Sample generate_sample(const TaskStream& stream, int class_id, int index, int task_id);

TaskStream build_task_stream(const StreamConfig& config);

// ---- on-disk dataset ----------------------------------------------------

inline constexpr int kDatasetFormatVersion = 1;

nlohmann::json to_json(const ClassSchema& s);
nlohmann::json to_json(const Scene& s);

/// Config, schemas and per-sample scene metadata.
nlohmann::json stream_json(const TaskStream& stream);

/// Binary PPM (P6, maxval 255).
std::string encode_ppm(const Raster& raster);

struct DatasetSummary {
    int classes = 0;
    int train = 0;
    int test = 0;
    int pretrain = 0;
    int images = 0;
};

/// Writes `stream.json` plus `images/<task>/<class>/<idx>.ppm`; pretrain
/// samples go to `images/pretrain/<class>/<idx>.ppm`.
DatasetSummary write_dataset(const TaskStream& stream, const std::filesystem::path& dir);

}  // namespace nesycl
