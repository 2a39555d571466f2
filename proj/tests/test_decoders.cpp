#include "oracles.h"

#include "sift/decoders.h"
#include "sift/error.h"

#include <doctest.h>

#include <limits>

using namespace sift;
using num::Matrix;

namespace {

bool is_tree(const std::vector<int>& heads)
{
    const int n = static_cast<int>(heads.size());
    for (int i = 1; i <= n; ++i) {
        int v = i;
        for (int steps = 0; v != 0; ++steps) {
            if (steps > n)
                return false;
            v = heads[static_cast<std::size_t>(v - 1)];
        }
    }
    return true;
}

} // namespace

TEST_SUITE("decoders") {

TEST_CASE("Chu-Liu-Edmonds matches exhaustive search on 4-token matrices")
{
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix s = oracle::random_matrix(rng, 5, 5, -5, 5);
        const auto tree = chu_liu_edmonds(s);
        REQUIRE(tree.heads.size() == 4);
        CHECK(is_tree(tree.heads));
        CHECK(std::abs(tree_score(s, tree.heads) - oracle::best_arborescence(s)) < 1e-9);
    }
}

TEST_CASE("a cycle is contracted and broken at its cheapest entry")
{
    // Tokens 1 and 2 prefer each other; root prefers 1 a little more.
    Matrix s = Matrix::Constant(4, 4, -10.0);
    s(0, 1) = 5;
    s(0, 2) = 1;
    s(2, 1) = 9;
    s(1, 2) = 9;
    s(2, 3) = 4;
    const auto t = chu_liu_edmonds(s);
    CHECK(t.heads == std::vector<int>{0, 1, 2});
    CHECK(tree_score(s, t.heads) == 18.0);
}

TEST_CASE("ties keep the lower source index")
{
    const Matrix s = Matrix::Zero(4, 4);
    const auto t = chu_liu_edmonds(s);
    CHECK(is_tree(t.heads));
    CHECK(t.heads == std::vector<int>{0, 0, 0});
}

TEST_CASE("invalid score matrices")
{
    CHECK_THROWS_AS(chu_liu_edmonds(Matrix::Zero(1, 1)), ValidationError);
    CHECK_THROWS_AS(chu_liu_edmonds(Matrix::Zero(3, 2)), ShapeError);
    Matrix s = Matrix::Zero(3, 3);
    s(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(chu_liu_edmonds(s), ValidationError);
}

TEST_CASE("labels are the per-arc argmax")
{
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Matrix> labels;
        for (int l = 0; l < 4; ++l)
            labels.push_back(oracle::random_matrix(rng, 5, 5));
        const auto tree = assign_labels(chu_liu_edmonds(oracle::random_matrix(rng, 5, 5)), labels);
        for (int d = 1; d <= 4; ++d) {
            const int h = tree.heads[static_cast<std::size_t>(d - 1)];
            int best = 0;
            for (int l = 1; l < 4; ++l)
                if (labels[static_cast<std::size_t>(l)](h, d) > labels[static_cast<std::size_t>(best)](h, d))
                    best = l;
            CHECK(tree.labels[static_cast<std::size_t>(d - 1)] == best);
        }
    }
}

TEST_CASE("greedy graph decoding scans every off-diagonal cell")
{
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix arc = oracle::random_matrix(rng, 5, 5, -2, 2);
        const Matrix tops = oracle::random_matrix(rng, 5, 1, -1, 1);
        std::vector<Matrix> labels{oracle::random_matrix(rng, 5, 5), oracle::random_matrix(rng, 5, 5)};
        const auto g = greedy_graph_decode(arc, labels, 0.5, tops);
        std::vector<Edge> want;
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 5; ++j)
                if (i != j && arc(i, j) > 0.5)
                    want.push_back({i, j, labels[1](i, j) > labels[0](i, j) ? 1 : 0});
        auto got = g.edges;
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        CHECK(got == want);
        std::vector<int> want_tops;
        for (int i = 0; i < 5; ++i)
            if (tops(i, 0) > 0.5)
                want_tops.push_back(i);
        CHECK(g.top_nodes == want_tops);
    }
    const auto none = greedy_graph_decode(Matrix::Constant(3, 3, 5.0), {Matrix::Zero(3, 3)});
    CHECK(none.edges.size() == 6);
    CHECK(none.top_nodes.empty());
}

}
