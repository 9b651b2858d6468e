#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nesycl/graph.hpp"

namespace nesycl {

inline constexpr std::size_t kMaxGraphNodes = 6;

struct GedCosts {
    double node_shape_sub = 1.0;
    double node_color_sub = 1.0;
    double node_indel = 2.0;
    double edge_sub = 1.0;
    double edge_indel = 1.0;
};

/// Exact graph edit distance: minimum over all injective partial node maps
/// g1 -> g2 of node substitution/indel costs plus induced edge costs.
/// Throws GraphTooLarge above `max_nodes` on either side.
double ged(const ConceptGraph& g1, const ConceptGraph& g2, const GedCosts& costs = {},
           std::size_t max_nodes = kMaxGraphNodes);

/// 1 / (1 + ged).
double sim(const ConceptGraph& g1, const ConceptGraph& g2, const GedCosts& costs = {});

/// Medoid: the member minimizing total GED to all members. Ties go to the
/// smallest canonical JSON serialization. Throws EmptyClass on empty input.
ConceptGraph select_prototype(std::span<const ConceptGraph> graphs, const GedCosts& costs = {});

using ClassDistribution = std::vector<std::pair<int, double>>;

/// Append-only map from class label to prototype graph. Updates return a new
/// value; existing entries are never modified.
class KnowledgeBase {
public:
    KnowledgeBase() = default;

    int timestep() const { return timestep_; }
    std::size_t size() const { return entries_.size(); }
    bool contains(int class_id) const { return entries_.contains(class_id); }
    const ConceptGraph& prototype(int class_id) const { return entries_.at(class_id); }
    const std::map<int, ConceptGraph>& entries() const { return entries_; }

    /// Adds one prototype per class of the new task and advances the timestep.
    /// Throws DuplicateClass if any class is already present.
    KnowledgeBase updated(const std::map<int, std::vector<ConceptGraph>>& task_graphs, const GedCosts& costs = {}) const;

    nlohmann::json to_json() const;
    static KnowledgeBase from_json(const nlohmann::json& j);

    friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;

private:
    std::map<int, ConceptGraph> entries_;
    int timestep_ = 0;
};

inline KnowledgeBase kb_update(const KnowledgeBase& kb, const std::map<int, std::vector<ConceptGraph>>& task_graphs,
                               const GedCosts& costs = {}) {
    return kb.updated(task_graphs, costs);
}

/// Softmax over sim(graph, G_y) for the classes in `scope` (all KB classes when
/// empty), ordered by class id. Throws EmptyKnowledgeBase.
ClassDistribution classify(const KnowledgeBase& kb, const ConceptGraph& graph, std::span<const int> scope = {},
                           const GedCosts& costs = {});

/// Highest-probability class; ties resolved toward the lowest class id.
int argmax(const ClassDistribution& dist);

}  // namespace nesycl
