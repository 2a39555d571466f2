#include "sift/decoders.h"

#include "sift/error.h"

#include <limits>

namespace sift {

using num::Matrix;

namespace {

constexpr double kNone = -std::numeric_limits<double>::infinity();

// heads[v] for every node of s, heads[0] = -1. Entries equal to kNone are
// unavailable arcs.
std::vector<int> solve(const Matrix& s)
{
    const int m = static_cast<int>(s.rows());
    std::vector<int> head(static_cast<std::size_t>(m), -1);
    for (int v = 1; v < m; ++v) {
        int best = -1;
        for (int u = 0; u < m; ++u) {
            if (u == v || s(u, v) == kNone)
                continue;
            if (best < 0 || s(u, v) > s(best, v))
                best = u;
        }
        if (best < 0)
            throw ValidationError("chu_liu_edmonds: node without a candidate head");
        head[static_cast<std::size_t>(v)] = best;
    }

    // First cycle found by walking head pointers.
    std::vector<int> state(static_cast<std::size_t>(m), 0);  // 0 new, 1 on path, 2 done
    std::vector<int> cycle;
    for (int start = 1; start < m && cycle.empty(); ++start) {
        std::vector<int> path;
        int v = start;
        while (v > 0 && state[static_cast<std::size_t>(v)] == 0) {
            state[static_cast<std::size_t>(v)] = 1;
            path.push_back(v);
            v = head[static_cast<std::size_t>(v)];
        }
        if (v > 0 && state[static_cast<std::size_t>(v)] == 1) {
            for (int x = v;;) {
                cycle.push_back(x);
                x = head[static_cast<std::size_t>(x)];
                if (x == v)
                    break;
            }
        }
        for (int p : path)
            state[static_cast<std::size_t>(p)] = 2;
    }
    if (cycle.empty())
        return head;

    std::vector<char> in_cycle(static_cast<std::size_t>(m), 0);
    for (int v : cycle)
        in_cycle[static_cast<std::size_t>(v)] = 1;
    std::vector<int> new_index(static_cast<std::size_t>(m), -1), old_index;
    for (int v = 0; v < m; ++v)
        if (!in_cycle[static_cast<std::size_t>(v)]) {
            new_index[static_cast<std::size_t>(v)] = static_cast<int>(old_index.size());
            old_index.push_back(v);
        }
    const int c = static_cast<int>(old_index.size());
    Matrix t = Matrix::Constant(c + 1, c + 1, kNone);
    std::vector<int> enter(static_cast<std::size_t>(c), -1);  // cycle node entered from u
    std::vector<int> leave(static_cast<std::size_t>(c), -1);  // cycle node leaving to v
    for (int a = 0; a < c; ++a) {
        const int u = old_index[static_cast<std::size_t>(a)];
        for (int b = 0; b < c; ++b)
            if (a != b)
                t(a, b) = s(u, old_index[static_cast<std::size_t>(b)]);
        for (int v : cycle) {
            if (s(u, v) == kNone)
                continue;
            const double gain = s(u, v) - s(head[static_cast<std::size_t>(v)], v);
            if (enter[static_cast<std::size_t>(a)] < 0 || gain > t(a, c) ||
                (gain == t(a, c) && v < enter[static_cast<std::size_t>(a)])) {
                t(a, c) = gain;
                enter[static_cast<std::size_t>(a)] = v;
            }
        }
        for (int x : cycle) {
            if (s(x, u) == kNone)
                continue;
            if (leave[static_cast<std::size_t>(a)] < 0 || s(x, u) > t(c, a) ||
                (s(x, u) == t(c, a) && x < leave[static_cast<std::size_t>(a)])) {
                t(c, a) = s(x, u);
                leave[static_cast<std::size_t>(a)] = x;
            }
        }
    }
    for (int a = 0; a <= c; ++a)
        t(a, 0) = kNone;

    const std::vector<int> sub = solve(t);
    std::vector<int> out = head;
    for (int a = 1; a < c; ++a) {
        const int v = old_index[static_cast<std::size_t>(a)];
        const int h = sub[static_cast<std::size_t>(a)];
        out[static_cast<std::size_t>(v)] =
            h == c ? leave[static_cast<std::size_t>(a)] : old_index[static_cast<std::size_t>(h)];
    }
    const int a_in = sub[static_cast<std::size_t>(c)];
    const int v_in = enter[static_cast<std::size_t>(a_in)];
    out[static_cast<std::size_t>(v_in)] = old_index[static_cast<std::size_t>(a_in)];
    return out;
}

} // namespace

DecodedTree chu_liu_edmonds(const Matrix& scores)
{
    if (scores.rows() != scores.cols())
        throw ShapeError("chu_liu_edmonds: score matrix must be square");
    if (scores.rows() < 2)
        throw ValidationError("chu_liu_edmonds: no tokens to attach");
    if (!scores.allFinite())
        throw ValidationError("chu_liu_edmonds: non-finite scores");
    Matrix s = scores;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        s(i, i) = kNone;
        s(i, 0) = kNone;
    }
    const std::vector<int> head = solve(s);
    DecodedTree tree;
    tree.heads.assign(head.begin() + 1, head.end());
    tree.labels.assign(tree.heads.size(), 0);
    return tree;
}

double tree_score(const Matrix& scores, const std::vector<int>& heads)
{
    double total = 0.0;
    for (std::size_t i = 0; i < heads.size(); ++i)
        total += scores(heads[i], static_cast<Eigen::Index>(i + 1));
    return total;
}

namespace {

int argmax_label(const std::vector<Matrix>& label_scores, Eigen::Index h, Eigen::Index d)
{
    int best = 0;
    for (std::size_t l = 1; l < label_scores.size(); ++l)
        if (label_scores[l](h, d) > label_scores[static_cast<std::size_t>(best)](h, d))
            best = static_cast<int>(l);
    return best;
}

} // namespace

DecodedTree assign_labels(DecodedTree tree, const std::vector<Matrix>& label_scores)
{
    if (label_scores.empty())
        throw ValidationError("assign_labels: empty label set");
    tree.labels.resize(tree.heads.size());
    for (std::size_t i = 0; i < tree.heads.size(); ++i)
        tree.labels[i] = argmax_label(label_scores, tree.heads[i], static_cast<Eigen::Index>(i + 1));
    return tree;
}

SemanticGraph greedy_graph_decode(const Matrix& arc, const std::vector<Matrix>& label_scores,
                                  double threshold, const Matrix& tops)
{
    if (arc.rows() != arc.cols())
        throw ShapeError("greedy_graph_decode: arc matrix must be square");
    if (label_scores.empty())
        throw ValidationError("greedy_graph_decode: empty label set");
    SemanticGraph g;
    g.num_nodes = static_cast<int>(arc.rows());
    for (Eigen::Index i = 0; i < arc.rows(); ++i)
        for (Eigen::Index j = 0; j < arc.cols(); ++j)
            if (i != j && arc(i, j) > threshold)
                g.edges.push_back({static_cast<int>(i), static_cast<int>(j),
                                   argmax_label(label_scores, i, j)});
    for (Eigen::Index i = 0; i < tops.size(); ++i)
        if (tops(i) > threshold)
            g.top_nodes.push_back(static_cast<int>(i));
    return g;
}

} // namespace sift
