#include "sift/metrics.h"

#include "sift/error.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

namespace sift {

namespace {

template <class A, class B>
void check_lengths(const A& a, const B& b, const char* what)
{
    if (a.size() != b.size())
        throw ValidationError(std::string(what) + ": prediction and gold lengths differ (" +
                              std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

using EdgeKey = std::tuple<int, int, int>;

std::set<EdgeKey> edge_set(const SemanticGraph& g, bool labeled, bool include_tops)
{
    std::set<EdgeKey> s;
    for (const Edge& e : g.edges)
        s.emplace(e.source, e.target, labeled ? e.relation : 0);
    if (include_tops)
        for (int t : g.top_nodes)
            s.emplace(-1, t, -1);
    return s;
}

double ratio(long long num, long long den)
{
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

double las(const std::vector<DependencyTree>& pred, const std::vector<DependencyTree>& gold)
{
    check_lengths(pred, gold, "las");
    long long correct = 0, total = 0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        check_lengths(pred[s].heads, gold[s].heads, "las");
        for (std::size_t i = 0; i < gold[s].heads.size(); ++i) {
            ++total;
            if (pred[s].heads[i] == gold[s].heads[i] && pred[s].labels.at(i) == gold[s].labels.at(i))
                ++correct;
        }
    }
    return ratio(correct, total);
}

double uas(const std::vector<DependencyTree>& pred, const std::vector<DependencyTree>& gold)
{
    check_lengths(pred, gold, "uas");
    long long correct = 0, total = 0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        check_lengths(pred[s].heads, gold[s].heads, "uas");
        for (std::size_t i = 0; i < gold[s].heads.size(); ++i) {
            ++total;
            correct += pred[s].heads[i] == gold[s].heads[i];
        }
    }
    return ratio(correct, total);
}

PRF labeled_f1(const std::vector<SemanticGraph>& pred, const std::vector<SemanticGraph>& gold,
               bool include_tops)
{
    check_lengths(pred, gold, "labeled_f1");
    long long n_pred = 0, n_gold = 0, n_match = 0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        const auto p = edge_set(pred[s], true, include_tops);
        const auto g = edge_set(gold[s], true, include_tops);
        n_pred += static_cast<long long>(p.size());
        n_gold += static_cast<long long>(g.size());
        for (const auto& e : p)
            n_match += g.contains(e);
    }
    PRF r;
    if (n_pred == 0 && n_gold == 0)
        return {1.0, 1.0, 1.0};
    r.precision = n_pred == 0 ? 0.0 : ratio(n_match, n_pred);
    r.recall = n_gold == 0 ? 1.0 : ratio(n_match, n_gold);
    // 2PR/(P+R) on counts: 2m / (pred + gold)
    r.f1 = n_match == 0 ? 0.0 : ratio(2 * n_match, n_pred + n_gold);
    return r;
}

double exact_match(const std::vector<SemanticGraph>& pred, const std::vector<SemanticGraph>& gold,
                   bool labeled, bool include_tops)
{
    check_lengths(pred, gold, "exact_match");
    long long hits = 0;
    for (std::size_t s = 0; s < pred.size(); ++s)
        hits += edge_set(pred[s], labeled, include_tops) == edge_set(gold[s], labeled, include_tops);
    return ratio(hits, static_cast<long long>(pred.size()));
}

double exact_match(const std::vector<DependencyTree>& pred, const std::vector<DependencyTree>& gold,
                   bool labeled)
{
    check_lengths(pred, gold, "exact_match");
    long long hits = 0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        check_lengths(pred[s].heads, gold[s].heads, "exact_match");
        bool same = pred[s].heads == gold[s].heads;
        if (labeled)
            same = same && pred[s].labels == gold[s].labels;
        hits += same;
    }
    return ratio(hits, static_cast<long long>(pred.size()));
}

double r_k_correlation(const std::vector<int>& pred, const std::vector<int>& gold, int k)
{
    if (k < 2)
        throw ValidationError("r_k_correlation: K must be at least 2");
    check_lengths(pred, gold, "r_k_correlation");
    std::vector<long long> p(static_cast<std::size_t>(k), 0), t(static_cast<std::size_t>(k), 0);
    long long c = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] >= k || gold[i] < 0 || gold[i] >= k)
            throw ValidationError("r_k_correlation: label outside [0, K)");
        ++p[static_cast<std::size_t>(pred[i])];
        ++t[static_cast<std::size_t>(gold[i])];
        c += pred[i] == gold[i];
    }
    const auto s = static_cast<long double>(pred.size());
    long double pt = 0, pp = 0, tt = 0;
    for (int i = 0; i < k; ++i) {
        pt += static_cast<long double>(p[static_cast<std::size_t>(i)]) * t[static_cast<std::size_t>(i)];
        pp += static_cast<long double>(p[static_cast<std::size_t>(i)]) * p[static_cast<std::size_t>(i)];
        tt += static_cast<long double>(t[static_cast<std::size_t>(i)]) * t[static_cast<std::size_t>(i)];
    }
    const long double den = (s * s - pp) * (s * s - tt);
    if (den <= 0)
        return 0.0;
    return static_cast<double>((static_cast<long double>(c) * s - pt) / std::sqrt(den));
}

double pearson(const std::vector<double>& pred, const std::vector<double>& gold)
{
    check_lengths(pred, gold, "pearson");
    if (pred.size() < 2)
        throw ValidationError("pearson: need at least two points");
    const auto n = static_cast<double>(pred.size());
    double mp = 0, mg = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mp += pred[i];
        mg += gold[i];
    }
    mp /= n;
    mg /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sxy += (pred[i] - mp) * (gold[i] - mg);
        sxx += (pred[i] - mp) * (pred[i] - mp);
        syy += (gold[i] - mg) * (gold[i] - mg);
    }
    if (sxx == 0.0 || syy == 0.0)
        return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& gold)
{
    check_lengths(pred, gold, "accuracy");
    long long hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        hits += pred[i] == gold[i];
    return ratio(hits, static_cast<long long>(pred.size()));
}

CategoryAccuracy accuracy_by_category(const std::vector<std::string>& categories,
                                      const std::vector<int>& pred, const std::vector<int>& gold)
{
    check_lengths(pred, gold, "accuracy_by_category");
    check_lengths(categories, gold, "accuracy_by_category");
    std::map<std::string, std::pair<int, int>> tally;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        auto& [hits, n] = tally[categories[i].empty() ? kDefaultCategory : categories[i]];
        hits += pred[i] == gold[i];
        ++n;
    }
    CategoryAccuracy out;
    for (const auto& [tag, hn] : tally) {
        out.per_category[tag] = ratio(hn.first, hn.second);
        out.counts[tag] = hn.second;
    }
    out.overall = accuracy(pred, gold);
    return out;
}

Delta probe_delta(double probe, double ceiling)
{
    if (ceiling == 0.0)
        throw ValidationError("probe_delta: ceiling score is zero");
    const double abs = probe - ceiling;
    return {abs, abs / ceiling};
}

nlohmann::json report_to_json(const EvalReport& r)
{
    nlohmann::json j = nlohmann::json::object();
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = *v;
    };
    put("las", r.las);
    put("uas", r.uas);
    if (r.labeled_f1) {
        j["precision"] = r.labeled_f1->precision;
        j["recall"] = r.labeled_f1->recall;
        j["labeled_f1"] = r.labeled_f1->f1;
    }
    put("lem", r.lem);
    put("uem", r.uem);
    put("accuracy", r.accuracy);
    put("r_k", r.r_k);
    put("pearson", r.pearson);
    put("mse", r.mse);
    put("loss", r.loss);
    if (!r.per_category.empty()) {
        j["per_category"] = r.per_category;
        j["category_counts"] = r.category_counts;
    }
    return j;
}

EvalReport report_from_json(const nlohmann::json& j)
{
    EvalReport r;
    auto get = [&j](const char* key) -> std::optional<double> {
        if (j.contains(key))
            return j.at(key).get<double>();
        return std::nullopt;
    };
    r.las = get("las");
    r.uas = get("uas");
    if (j.contains("labeled_f1"))
        r.labeled_f1 = PRF{j.at("precision").get<double>(), j.at("recall").get<double>(),
                           j.at("labeled_f1").get<double>()};
    r.lem = get("lem");
    r.uem = get("uem");
    r.accuracy = get("accuracy");
    r.r_k = get("r_k");
    r.pearson = get("pearson");
    r.mse = get("mse");
    r.loss = get("loss");
    if (j.contains("per_category")) {
        r.per_category = j.at("per_category").get<std::map<std::string, double>>();
        r.category_counts = j.at("category_counts").get<std::map<std::string, int>>();
    }
    return r;
}

std::string format_fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace sift
