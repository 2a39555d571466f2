#include "oracles.h"

#include "sift/error.h"
#include "sift/metrics.h"

#include <doctest.h>

using namespace sift;

TEST_SUITE("metrics") {

TEST_CASE("LAS and UAS on a ten-token corpus")
{
    DependencyTree g1{{2, 0, 2, 3, 2}, {"a", "r", "b", "c", "d"}};
    DependencyTree g2{{0, 1, 1, 3, 4}, {"r", "a", "a", "b", "c"}};
    DependencyTree p1{{2, 0, 2, 2, 2}, {"a", "r", "x", "c", "d"}};  // head miss at 4, label miss at 3
    DependencyTree p2{{0, 1, 2, 3, 4}, {"r", "a", "a", "x", "c"}};  // head miss at 3, label miss at 4
    CHECK(las({p1, p2}, {g1, g2}) == doctest::Approx(0.6));
    CHECK(uas({p1, p2}, {g1, g2}) == doctest::Approx(0.8));
    DependencyTree q2{{0, 1, 1, 3, 4}, {"r", "a", "a", "x", "c"}};
    CHECK(las({p1, q2}, {g1, g2}) == doctest::Approx(0.7));
    CHECK_THROWS_AS(las({p1}, {g1, g2}), ValidationError);
}

TEST_CASE("labeled F1 with P = 2/3 and R = 1/2 is 4/7")
{
    SemanticGraph gold{5, {{0, 1, 0}, {1, 2, 0}, {2, 3, 1}, {3, 4, 0}}, {}};
    SemanticGraph pred{5, {{0, 1, 0}, {1, 2, 0}, {2, 3, 0}}, {}};
    const PRF r = labeled_f1({pred}, {gold});
    CHECK(r.precision == 2.0 / 3.0);
    CHECK(r.recall == 0.5);
    CHECK(r.f1 == 4.0 / 7.0);
    const PRF e = labeled_f1({SemanticGraph{2, {}, {}}}, {SemanticGraph{2, {}, {}}});
    CHECK(e.f1 == 1.0);
    const PRF z = labeled_f1({SemanticGraph{2, {}, {}}}, {gold});
    CHECK(z.precision == 0.0);
    CHECK(z.f1 == 0.0);
}

TEST_CASE("tops count as edges from a virtual root when requested")
{
    SemanticGraph gold{3, {{0, 1, 0}}, {0}};
    SemanticGraph pred{3, {{0, 1, 0}}, {2}};
    CHECK(labeled_f1({pred}, {gold}).f1 == 1.0);
    CHECK(labeled_f1({pred}, {gold}, true).f1 == 0.5);
    CHECK(exact_match({pred}, {gold}, true) == 1.0);
    CHECK(exact_match({pred}, {gold}, true, true) == 0.0);
}

TEST_CASE("labeled exact match never exceeds unlabeled")
{
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<SemanticGraph> gold, pred;
        for (int s = 0; s < 5; ++s) {
            const auto g = oracle::random_graph(rng, 4, 3, 0.2);
            auto p = g;
            for (auto& e : p.edges) {
                if (rng.bernoulli(0.1))
                    e.relation = static_cast<int>(rng.below(3));
                if (rng.bernoulli(0.05))
                    e.target = (e.target + 1) % 4;
            }
            gold.push_back(g);
            pred.push_back(p);
        }
        CHECK(exact_match(pred, gold, true) <= exact_match(pred, gold, false));
    }
}

TEST_CASE("R_K with K = 2 is the Matthews correlation")
{
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const int tp = static_cast<int>(rng.below(50)), tn = static_cast<int>(rng.below(50)),
                  fp = static_cast<int>(rng.below(50)), fn = static_cast<int>(rng.below(50));
        std::vector<int> pred, gold;
        auto push = [&](int n, int p, int g) {
            for (int i = 0; i < n; ++i) {
                pred.push_back(p);
                gold.push_back(g);
            }
        };
        push(tp, 1, 1);
        push(tn, 0, 0);
        push(fp, 1, 0);
        push(fn, 0, 1);
        if (pred.empty())
            continue;
        CHECK(std::abs(r_k_correlation(pred, gold, 2) - oracle::mcc(tp, tn, fp, fn)) < 1e-12);
    }
    CHECK(r_k_correlation({0, 0, 0}, {0, 1, 0}, 2) == 0.0);
    CHECK(r_k_correlation({0, 1, 2}, {0, 1, 2}, 3) == doctest::Approx(1.0));
    CHECK_THROWS_AS(r_k_correlation({0}, {0}, 1), ValidationError);
    CHECK_THROWS_AS(r_k_correlation({3}, {0}, 3), ValidationError);
}

TEST_CASE("Pearson on a fixed five-point set")
{
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 5, 4, 5};
    // Sxy = 6, Sxx = 10, Syy = 6
    CHECK(pearson(x, y) == doctest::Approx(6.0 / std::sqrt(60.0)).epsilon(1e-14));
    CHECK(pearson(x, {3, 3, 3, 3, 3}) == 0.0);
}

TEST_CASE("per-category accuracy over six evenly spread tags")
{
    const std::vector<std::string> tags = {"lexical_overlap/entailment", "lexical_overlap/non-entailment",
                                           "subsequence/entailment", "subsequence/non-entailment",
                                           "constituent/entailment", "constituent/non-entailment"};
    std::vector<std::string> cats;
    std::vector<int> pred, gold;
    for (int i = 0; i < 30000; ++i) {
        cats.push_back(tags[static_cast<std::size_t>(i % 6)]);
        gold.push_back(i % 2);
        pred.push_back(i % 6 == 1 ? 1 - i % 2 : i % 2);
    }
    const auto acc = accuracy_by_category(cats, pred, gold);
    REQUIRE(acc.counts.size() == 6);
    for (const auto& [tag, n] : acc.counts)
        CHECK(n == 5000);
    CHECK(acc.per_category.at("lexical_overlap/non-entailment") == 0.0);
    CHECK(acc.per_category.at("constituent/entailment") == 1.0);
    CHECK(acc.overall == doctest::Approx(5.0 / 6.0));
    const auto untagged = accuracy_by_category({"", ""}, {1, 0}, {1, 1});
    CHECK(untagged.counts.at(kDefaultCategory) == 2);
}

TEST_CASE("probe deltas reproduce the reported rows")
{
    const Delta a = probe_delta(81.7, 95.2);
    CHECK(format_fixed(a.absolute, 1) == "-13.5");
    CHECK(format_fixed(100 * a.relative, 1) == "-14.2");
    const Delta b = probe_delta(70.7, 94.2);
    CHECK(format_fixed(b.absolute, 1) == "-23.5");
    CHECK(format_fixed(100 * b.relative, 1) == "-24.9");
    CHECK_THROWS_AS(probe_delta(1.0, 0.0), ValidationError);
}

TEST_CASE("reports survive a JSON round trip")
{
    EvalReport r;
    r.accuracy = 0.75;
    r.r_k = 0.5;
    r.labeled_f1 = PRF{0.5, 0.25, 1.0 / 3.0};
    r.per_category = {{"a", 1.0}};
    r.category_counts = {{"a", 3}};
    const auto back = report_from_json(report_to_json(r));
    CHECK(back.accuracy == r.accuracy);
    CHECK(back.labeled_f1->recall == 0.25);
    CHECK_FALSE(back.las.has_value());
    CHECK(back.category_counts == r.category_counts);
    CHECK(report_to_json(back).dump() == report_to_json(r).dump());
}

}
