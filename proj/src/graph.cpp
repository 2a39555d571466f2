#include "sift/graph.h"

#include "sift/error.h"

#include <algorithm>
#include <set>

namespace sift {

RelationVocab::RelationVocab(std::vector<std::string> labels)
{
    for (const auto& l : labels) {
        if (index_.contains(l))
            throw ValidationError("duplicate relation label: " + l);
        add(l);
    }
}

int RelationVocab::add(std::string_view label)
{
    std::string key(label);
    if (auto it = index_.find(key); it != index_.end())
        return it->second;
    const int r = size();
    labels_.push_back(key);
    index_.emplace(std::move(key), r);
    return r;
}

int RelationVocab::index(std::string_view label) const
{
    auto it = index_.find(std::string(label));
    if (it == index_.end())
        throw ValidationError("unknown relation label: " + std::string(label));
    return it->second;
}

bool RelationVocab::contains(std::string_view label) const
{
    return index_.contains(std::string(label));
}

std::string RelationVocab::name(int r) const
{
    if (r < 0 || r >= augmented_size())
        throw ValidationError("relation index out of range");
    return is_inverse(r) ? labels_[static_cast<std::size_t>(r - size())] + "^-1"
                         : labels_[static_cast<std::size_t>(r)];
}

SemanticGraph validate_graph(SemanticGraph g, const RelationVocab& vocab)
{
    if (g.num_nodes < 0)
        throw ValidationError("negative node count");
    std::set<Edge> seen;
    for (const Edge& e : g.edges) {
        if (e.source < 0 || e.source >= g.num_nodes || e.target < 0 || e.target >= g.num_nodes)
            throw ValidationError("edge (" + std::to_string(e.source) + "," +
                                  std::to_string(e.target) + ") has a node index out of range");
        if (e.relation < 0 || e.relation >= vocab.size())
            throw ValidationError("edge relation index " + std::to_string(e.relation) +
                                  " is not in the relation vocabulary");
        if (!seen.insert(e).second)
            throw ValidationError("duplicate edge (" + std::to_string(e.source) + "," +
                                  std::to_string(e.target) + "," + vocab.name(e.relation) + ")");
    }
    for (int t : g.top_nodes)
        if (t < 0 || t >= g.num_nodes)
            throw ValidationError("top node index out of range");
    return g;
}

SemanticGraph make_graph(int num_nodes, std::span<const std::tuple<int, int, std::string>> edges,
                         const RelationVocab& vocab, std::vector<int> tops)
{
    SemanticGraph g;
    g.num_nodes = num_nodes;
    for (const auto& [s, t, label] : edges)
        g.edges.push_back({s, t, vocab.index(label)});
    g.top_nodes = std::move(tops);
    return validate_graph(std::move(g), vocab);
}

SemanticGraph permute_graph(const SemanticGraph& g, std::span<const int> perm)
{
    if (static_cast<int>(perm.size()) != g.num_nodes)
        throw ValidationError("permutation size differs from node count");
    SemanticGraph out;
    out.num_nodes = g.num_nodes;
    for (const Edge& e : g.edges)
        out.edges.push_back({perm[static_cast<std::size_t>(e.source)],
                             perm[static_cast<std::size_t>(e.target)], e.relation});
    for (int t : g.top_nodes)
        out.top_nodes.push_back(perm[static_cast<std::size_t>(t)]);
    return out;
}

AugmentedGraph::AugmentedGraph(SemanticGraph base, int num_relations)
    : base_{std::move(base)}
    , num_relations_{num_relations}
    , adjacency_(static_cast<std::size_t>(base_.num_nodes) * static_cast<std::size_t>(num_relations))
{}

const std::vector<int>& AugmentedGraph::neighborhood(int node, int relation) const
{
    if (node < 0 || node >= num_nodes() || relation < 0 || relation >= num_relations_)
        throw ValidationError("neighborhood: index out of range");
    return adjacency_[static_cast<std::size_t>(node) * static_cast<std::size_t>(num_relations_) +
                      static_cast<std::size_t>(relation)];
}

std::vector<int> AugmentedGraph::all_neighbors(int node) const
{
    std::vector<int> out;
    for (int r : active_) {
        const auto& n = neighborhood(node, r);
        out.insert(out.end(), n.begin(), n.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

AugmentedGraph augment_with_inverse_relations(const SemanticGraph& g, const RelationVocab& vocab)
{
    AugmentedGraph ag(validate_graph(g, vocab), vocab.augmented_size());
    const auto R = static_cast<std::size_t>(vocab.augmented_size());
    auto slot = [&](int node, int rel) -> std::vector<int>& {
        return ag.adjacency_[static_cast<std::size_t>(node) * R + static_cast<std::size_t>(rel)];
    };
    std::vector<bool> active(R, false);
    for (const Edge& e : g.edges) {
        if (e.source == e.target)
            continue;
        slot(e.target, e.relation).push_back(e.source);
        slot(e.source, vocab.inverse(e.relation)).push_back(e.target);
        active[static_cast<std::size_t>(e.relation)] = true;
        active[static_cast<std::size_t>(vocab.inverse(e.relation))] = true;
    }
    for (auto& list : ag.adjacency_)
        std::sort(list.begin(), list.end());
    for (std::size_t r = 0; r < R; ++r)
        if (active[r])
            ag.active_.push_back(static_cast<int>(r));
    return ag;
}

SemanticGraph collapse_labels(const SemanticGraph& g)
{
    std::set<std::pair<int, int>> pairs;
    for (const Edge& e : g.edges)
        pairs.emplace(e.source, e.target);
    SemanticGraph out;
    out.num_nodes = g.num_nodes;
    out.top_nodes = g.top_nodes;
    for (const auto& [s, t] : pairs)
        out.edges.push_back({s, t, 0});
    return out;
}

} // namespace sift
