#pragma once

// Labeled directed graphs over sentence tokens and their inverse-augmented
// adjacency.

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace sift {

/// Relation labels. Index r < size() is an original label; r + size() is
/// its inverse, so the augmented index space has exactly 2 * size() entries.
class RelationVocab {
  public:
    RelationVocab() = default;
    explicit RelationVocab(std::vector<std::string> labels);

    /// Index of an existing label or a newly appended one.
    int add(std::string_view label);
    /// Throws ValidationError for an unknown label.
    int index(std::string_view label) const;
    bool contains(std::string_view label) const;

    int size() const { return static_cast<int>(labels_.size()); }
    int augmented_size() const { return 2 * size(); }
    int inverse(int r) const { return r < size() ? r + size() : r - size(); }
    bool is_inverse(int r) const { return r >= size(); }

    /// Label text; inverse relations carry a "^-1" suffix.
    std::string name(int r) const;
    const std::vector<std::string>& labels() const { return labels_; }

    bool operator==(const RelationVocab& other) const { return labels_ == other.labels_; }

  private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

struct Edge {
    int source = 0;
    int target = 0;
    int relation = 0;

    auto operator<=>(const Edge&) const = default;
};

struct SemanticGraph {
    int num_nodes = 0;
    std::vector<Edge> edges;
    std::vector<int> top_nodes;

    bool operator==(const SemanticGraph&) const = default;
};

/// Returns g unchanged when every index is in range, relation labels are in
/// the vocabulary and no (source, target, relation) triple repeats.
/// Throws ValidationError otherwise.
SemanticGraph validate_graph(SemanticGraph g, const RelationVocab& vocab);

/// Builds and validates a graph from string-labeled edges.
SemanticGraph make_graph(int num_nodes,
                         std::span<const std::tuple<int, int, std::string>> edges,
                         const RelationVocab& vocab,
                         std::vector<int> tops = {});

/// Node relabeling: node i of g becomes node perm[i].
SemanticGraph permute_graph(const SemanticGraph& g, std::span<const int> perm);

class AugmentedGraph;
AugmentedGraph augment_with_inverse_relations(const SemanticGraph& g, const RelationVocab& vocab);

class AugmentedGraph {
  public:
    AugmentedGraph() = default;
    AugmentedGraph(SemanticGraph base, int num_relations);

    const SemanticGraph& base() const { return base_; }
    int num_nodes() const { return base_.num_nodes; }
    /// Size of the augmented relation space (originals plus inverses).
    int num_relations() const { return num_relations_; }

    /// In-neighbors of node under relation, ascending. Throws
    /// ValidationError for out-of-range indices.
    const std::vector<int>& neighborhood(int node, int relation) const;

    /// Relations with at least one (node, neighbor) pair, ascending.
    const std::vector<int>& active_relations() const { return active_; }

    /// Union of in-neighbors over all relations, ascending and deduplicated.
    std::vector<int> all_neighbors(int node) const;

  private:
    friend AugmentedGraph augment_with_inverse_relations(const SemanticGraph&, const RelationVocab&);

    SemanticGraph base_;
    int num_relations_ = 0;
    // adjacency_[node * num_relations_ + relation]
    std::vector<std::vector<int>> adjacency_;
    std::vector<int> active_;
};

/// For every base edge (u, v, r): v's neighborhood under r gains u and u's
/// neighborhood under inverse(r) gains v. Self-loops are never stored.
AugmentedGraph augment_with_inverse_relations(const SemanticGraph& g, const RelationVocab& vocab);

/// Graph with every label collapsed onto relation 0 (one relation, with its
/// inverse). Duplicate edges produced by the collapse are merged.
SemanticGraph collapse_labels(const SemanticGraph& g);

} // namespace sift
