#include "nesycl/symbolic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "nesycl/errors.hpp"

namespace nesycl {

namespace {

constexpr int kUnmapped = -1;

class GedSearch {
public:
    GedSearch(const ConceptGraph& a, const ConceptGraph& b, const GedCosts& c)
        : g1_(a), g2_(b), costs_(c), n1_(static_cast<int>(a.size())), n2_(static_cast<int>(b.size())) {
        for (int i = 0; i < n1_; ++i)
            for (int j = 0; j < n1_; ++j) bins1_[i][j] = i == j ? 0 : a.direction(i, j);
        for (int i = 0; i < n2_; ++i)
            for (int j = 0; j < n2_; ++j) bins2_[i][j] = i == j ? 0 : b.direction(i, j);
    }

    double run() {
        best_ = std::numeric_limits<double>::infinity();
        assign(0, 0.0, 0);
        return best_;
    }

private:
    double node_cost(int i, int j) const {
        double c = 0;
        if (g1_.nodes[i].shape != g2_.nodes[j].shape) c += costs_.node_shape_sub;
        if (g1_.nodes[i].color != g2_.nodes[j].color) c += costs_.node_color_sub;
        return c;
    }

    // Cost of the edges between node i and all earlier nodes of g1.
    double edge_cost(int i) const {
        double c = 0;
        for (int k = 0; k < i; ++k) {
            if (map_[i] == kUnmapped || map_[k] == kUnmapped) {
                c += costs_.edge_indel;
            } else if (bins1_[k][i] != bins2_[map_[k]][map_[i]]) {
                c += costs_.edge_sub;
            }
        }
        return c;
    }

    void assign(int i, double partial, int mapped_count) {
        // All costs are non-negative, so the partial cost bounds the leaf cost.
        if (partial >= best_) return;
        if (i == n1_) {
            const int inserted_nodes = n2_ - mapped_count;
            const int inserted_edges = n2_ * (n2_ - 1) / 2 - mapped_count * (mapped_count - 1) / 2;
            best_ = std::min(best_, partial + inserted_nodes * costs_.node_indel + inserted_edges * costs_.edge_indel);
            return;
        }
        for (int j = 0; j < n2_; ++j) {
            if (used_[j]) continue;
            used_[j] = true;
            map_[i] = j;
            assign(i + 1, partial + node_cost(i, j) + edge_cost(i), mapped_count + 1);
            used_[j] = false;
        }
        map_[i] = kUnmapped;
        assign(i + 1, partial + costs_.node_indel + edge_cost(i), mapped_count);
    }

    const ConceptGraph& g1_;
    const ConceptGraph& g2_;
    const GedCosts& costs_;
    int n1_, n2_;
    std::array<std::array<int, kMaxGraphNodes>, kMaxGraphNodes> bins1_{}, bins2_{};
    std::array<int, kMaxGraphNodes> map_{};
    std::array<bool, kMaxGraphNodes> used_{};
    double best_ = 0;
};

}  // namespace

double ged(const ConceptGraph& g1, const ConceptGraph& g2, const GedCosts& costs, std::size_t max_nodes) {
    const std::size_t limit = std::min(max_nodes, kMaxGraphNodes);
    if (g1.size() > limit || g2.size() > limit)
        throw GraphTooLarge("ged: graph with " + std::to_string(std::max(g1.size(), g2.size())) + " nodes exceeds limit " +
                            std::to_string(limit));
    return GedSearch(g1, g2, costs).run();
}

double sim(const ConceptGraph& g1, const ConceptGraph& g2, const GedCosts& costs) {
    return 1.0 / (1.0 + ged(g1, g2, costs));
}

ConceptGraph select_prototype(std::span<const ConceptGraph> graphs, const GedCosts& costs) {
    if (graphs.empty()) throw EmptyClass("select_prototype: no graphs for class");
    // Identical graphs contribute identical terms; evaluate each distinct one once.
    std::vector<const ConceptGraph*> distinct;
    std::vector<double> weight;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& g : graphs) {
        auto [it, inserted] = index.try_emplace(canonical_string(g), distinct.size());
        if (inserted) {
            distinct.push_back(&g);
            weight.push_back(1.0);
        } else {
            weight[it->second] += 1.0;
        }
    }
    const std::size_t m = distinct.size();
    std::vector<double> dist(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b) dist[a * m + b] = dist[b * m + a] = ged(*distinct[a], *distinct[b], costs);

    std::size_t best = 0;
    double best_total = std::numeric_limits<double>::infinity();
    std::string best_key;
    for (std::size_t a = 0; a < m; ++a) {
        double total = 0;
        for (std::size_t b = 0; b < m; ++b) total += weight[b] * dist[a * m + b];
        if (total < best_total) {
            best_total = total;
            best = a;
            best_key.clear();
        } else if (total == best_total) {
            if (best_key.empty()) best_key = to_json(*distinct[best]).dump();
            auto key = to_json(*distinct[a]).dump();
            if (key < best_key) {
                best = a;
                best_key = std::move(key);
            }
        }
    }
    return *distinct[best];
}

KnowledgeBase KnowledgeBase::updated(const std::map<int, std::vector<ConceptGraph>>& task_graphs, const GedCosts& costs) const {
    for (const auto& [cls, graphs] : task_graphs)
        if (entries_.contains(cls)) throw DuplicateClass("kb_update: class " + std::to_string(cls) + " already in knowledge base");
    KnowledgeBase next = *this;
    for (const auto& [cls, graphs] : task_graphs) next.entries_.emplace(cls, select_prototype(graphs, costs));
    next.timestep_ = timestep_ + 1;
    return next;
}

nlohmann::json KnowledgeBase::to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [cls, g] : entries_) entries.push_back({{"class_id", cls}, {"graph", nesycl::to_json(g)}});
    return {{"timestep", timestep_}, {"entries", entries}};
}

KnowledgeBase KnowledgeBase::from_json(const nlohmann::json& j) {
    KnowledgeBase kb;
    kb.timestep_ = j.at("timestep").get<int>();
    for (const auto& e : j.at("entries")) {
        const int cls = e.at("class_id").get<int>();
        if (!kb.entries_.emplace(cls, graph_from_json(e.at("graph"))).second)
            throw DuplicateClass("KnowledgeBase::from_json: duplicate class " + std::to_string(cls));
    }
    return kb;
}

ClassDistribution classify(const KnowledgeBase& kb, const ConceptGraph& graph, std::span<const int> scope, const GedCosts& costs) {
    if (kb.size() == 0) throw EmptyKnowledgeBase("classify: knowledge base is empty");
    std::vector<int> classes;
    if (scope.empty()) {
        for (const auto& [cls, g] : kb.entries()) classes.push_back(cls);
    } else {
        classes.assign(scope.begin(), scope.end());
        std::sort(classes.begin(), classes.end());
    }
    std::vector<double> s(classes.size());
    for (std::size_t k = 0; k < classes.size(); ++k) s[k] = sim(graph, kb.prototype(classes[k]), costs);
    // sim lies in (0, 1], so exp() cannot overflow; subtracting the max still
    // keeps the result independent of unrelated classes outside the scope.
    const double mx = *std::max_element(s.begin(), s.end());
    double z = 0;
    for (auto& v : s) z += (v = std::exp(v - mx));
    ClassDistribution out;
    for (std::size_t k = 0; k < classes.size(); ++k) out.emplace_back(classes[k], s[k] / z);
    return out;
}

int argmax(const ClassDistribution& dist) {
    int best = dist.front().first;
    double best_p = dist.front().second;
    for (const auto& [cls, p] : dist)
        if (p > best_p || (p == best_p && cls < best)) {
            best = cls;
            best_p = p;
        }
    return best;
}

}  // namespace nesycl
