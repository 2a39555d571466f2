#include "sift/error.h"
#include "sift/graph.h"

#include <doctest.h>

#include <tuple>

using namespace sift;

TEST_SUITE("graph") {

TEST_CASE("vocabulary indexes originals then inverses")
{
    RelationVocab v({"ARG1", "ARG2"});
    CHECK(v.size() == 2);
    CHECK(v.augmented_size() == 4);
    CHECK(v.index("ARG2") == 1);
    CHECK(v.inverse(1) == 3);
    CHECK(v.inverse(3) == 1);
    CHECK(v.is_inverse(2));
    CHECK(v.name(2) == "ARG1^-1");
    CHECK(v.add("ARG1") == 0);
    CHECK(v.add("BV") == 2);
    CHECK_THROWS_AS(v.index("nope"), ValidationError);
    CHECK_THROWS_AS(RelationVocab({"a", "a"}), ValidationError);
}

TEST_CASE("chain adjacency by hand")
{
    RelationVocab v({"r"});
    const std::tuple<int, int, std::string> edges[] = {{0, 1, "r"}, {1, 2, "r"}};
    const auto g = make_graph(3, edges, v);
    const auto ag = augment_with_inverse_relations(g, v);
    CHECK(ag.num_relations() == 2);
    CHECK(ag.neighborhood(1, 0) == std::vector<int>{0});
    CHECK(ag.neighborhood(1, 1) == std::vector<int>{2});
    CHECK(ag.neighborhood(0, 0).empty());
    CHECK(ag.neighborhood(0, 1) == std::vector<int>{1});
    CHECK(ag.neighborhood(2, 0) == std::vector<int>{1});
    CHECK(ag.neighborhood(2, 1).empty());
    CHECK(ag.active_relations() == std::vector<int>{0, 1});
    CHECK(ag.all_neighbors(1) == std::vector<int>{0, 2});
    CHECK_THROWS_AS(ag.neighborhood(3, 0), ValidationError);
    CHECK_THROWS_AS(ag.neighborhood(0, 2), ValidationError);
}

TEST_CASE("self loops are never stored and unused relations are inactive")
{
    RelationVocab v({"a", "b"});
    const std::tuple<int, int, std::string> edges[] = {{0, 0, "a"}, {0, 1, "b"}};
    const auto ag = augment_with_inverse_relations(make_graph(2, edges, v), v);
    CHECK(ag.neighborhood(0, 0).empty());
    CHECK(ag.neighborhood(0, 2).empty());
    CHECK(ag.active_relations() == std::vector<int>{1, 3});
}

TEST_CASE("validation rejects bad graphs")
{
    RelationVocab v({"a"});
    CHECK_THROWS_AS(validate_graph({2, {{0, 2, 0}}, {}}, v), ValidationError);
    CHECK_THROWS_AS(validate_graph({2, {{0, 1, 1}}, {}}, v), ValidationError);
    CHECK_THROWS_AS(validate_graph({2, {{0, 1, 0}, {0, 1, 0}}, {}}, v), ValidationError);
    CHECK_THROWS_AS(validate_graph({2, {}, {5}}, v), ValidationError);
    CHECK_NOTHROW(validate_graph({2, {{0, 1, 0}, {1, 0, 0}}, {1}}, v));
}

TEST_CASE("permutation relabels nodes, edges and tops")
{
    SemanticGraph g{3, {{0, 1, 0}, {2, 1, 1}}, {2}};
    const int perm[] = {2, 0, 1};
    const auto p = permute_graph(g, perm);
    CHECK(p.num_nodes == 3);
    CHECK(p.edges == std::vector<Edge>{{2, 0, 0}, {1, 0, 1}});
    CHECK(p.top_nodes == std::vector<int>{1});
}

TEST_CASE("collapsing labels merges duplicates")
{
    SemanticGraph g{3, {{0, 1, 0}, {0, 1, 1}, {1, 2, 1}}, {0}};
    const auto c = collapse_labels(g);
    CHECK(c.edges == std::vector<Edge>{{0, 1, 0}, {1, 2, 0}});
    CHECK(c.top_nodes == g.top_nodes);
}

}
