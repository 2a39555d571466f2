#pragma once

#include "sift/graph.h"
#include "sift/tensor.h"

#include <vector>

namespace sift {

/// heads[i] is the head of token i + 1 in the rooted indexing (0 = root).
struct DecodedTree {
    std::vector<int> heads;
    std::vector<int> labels;

    bool operator==(const DecodedTree&) const = default;
};

/// Maximum spanning arborescence rooted at node 0 of an (n+1) × (n+1)
/// score matrix indexed [head][dependent]. Greedy selection, cycle
/// contraction, recursion, expansion. Ties keep the lower source index.
/// Throws ValidationError for n = 0 or non-finite scores.
DecodedTree chu_liu_edmonds(const num::Matrix& scores);

/// Sum of scores(heads[i], i + 1).
double tree_score(const num::Matrix& scores, const std::vector<int>& heads);

/// Labels every arc by argmax over label_scores[l](head, dependent), lowest
/// label index on ties.
DecodedTree assign_labels(DecodedTree tree, const std::vector<num::Matrix>& label_scores);

/// Edge (i, j), i ≠ j, iff arc(i, j) > threshold, labeled by argmax over
/// label_scores (lowest index on ties). Top nodes: tops(i) > threshold when
/// tops is non-empty.
SemanticGraph greedy_graph_decode(const num::Matrix& arc, const std::vector<num::Matrix>& label_scores,
                                  double threshold = 0.0, const num::Matrix& tops = {});

} // namespace sift
