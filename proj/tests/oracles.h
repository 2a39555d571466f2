#pragma once

// Straight-loop reference implementations. Nothing here calls into the
// library's numeric code; results are compared against it.

#include "sift/graph.h"
#include "sift/random.h"
#include "sift/tensor.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using sift::num::Matrix;

inline Matrix random_matrix(sift::Rng& rng, int r, int c, double lo = -1.0, double hi = 1.0)
{
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            m(i, j) = rng.uniform(lo, hi);
    return m;
}

/// Each ordered pair i ≠ j carries each label with probability p.
inline sift::SemanticGraph random_graph(sift::Rng& rng, int n, int num_labels, double p = 0.35)
{
    sift::SemanticGraph g;
    g.num_nodes = n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int r = 0; r < num_labels; ++r)
                if (i != j && rng.bernoulli(p))
                    g.edges.push_back({i, j, r});
    return g;
}

inline std::vector<int> random_permutation(sift::Rng& rng, int n)
{
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
        std::swap(p[static_cast<std::size_t>(i)], p[rng.below(static_cast<std::uint64_t>(i + 1))]);
    return p;
}

inline Matrix matmul(const Matrix& a, const Matrix& b)
{
    Matrix out = Matrix::Zero(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k)
                s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

/// W v for a column vector held as a std::vector.
inline std::vector<double> matvec(const Matrix& w, const std::vector<double>& v)
{
    std::vector<double> out(static_cast<std::size_t>(w.rows()), 0.0);
    for (int i = 0; i < w.rows(); ++i)
        for (int k = 0; k < w.cols(); ++k)
            out[static_cast<std::size_t>(i)] += w(i, k) * v[static_cast<std::size_t>(k)];
    return out;
}

inline std::vector<double> row(const Matrix& m, int i)
{
    std::vector<double> v(static_cast<std::size_t>(m.cols()));
    for (int k = 0; k < m.cols(); ++k)
        v[static_cast<std::size_t>(k)] = m(i, k);
    return v;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// In-neighbors per (node, augmented relation) straight from the edge list.
inline std::vector<std::vector<std::vector<int>>> neighborhoods(const sift::SemanticGraph& g,
                                                                int num_labels)
{
    std::vector<std::vector<std::vector<int>>> nb(
        static_cast<std::size_t>(g.num_nodes),
        std::vector<std::vector<int>>(static_cast<std::size_t>(2 * num_labels)));
    for (const auto& e : g.edges) {
        if (e.source == e.target)
            continue;
        nb[static_cast<std::size_t>(e.target)][static_cast<std::size_t>(e.relation)].push_back(e.source);
        nb[static_cast<std::size_t>(e.source)][static_cast<std::size_t>(e.relation + num_labels)].push_back(
            e.target);
    }
    return nb;
}

/// One relational convolution with explicit per-relation weights.
inline Matrix rgcn_layer(const sift::SemanticGraph& g, int num_labels, const Matrix& h,
                         const std::vector<Matrix>& w_rel, const Matrix& w_self)
{
    const auto nb = neighborhoods(g, num_labels);
    const int n = g.num_nodes;
    const int d = static_cast<int>(w_self.rows());
    Matrix out(n, d);
    for (int i = 0; i < n; ++i) {
        std::vector<double> acc = matvec(w_self, row(h, i));
        for (int r = 0; r < 2 * num_labels; ++r) {
            const auto& ns = nb[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
            for (int j : ns) {
                const auto m = matvec(w_rel[static_cast<std::size_t>(r)], row(h, j));
                for (int k = 0; k < d; ++k)
                    acc[static_cast<std::size_t>(k)] += m[static_cast<std::size_t>(k)] / static_cast<double>(ns.size());
            }
        }
        for (int k = 0; k < d; ++k)
            out(i, k) = relu(acc[static_cast<std::size_t>(k)]);
    }
    return out;
}

/// W_r = Σ_b a(r, b) V_b, summed entry by entry.
inline Matrix basis_weight(const Matrix& coeffs, const std::vector<Matrix>& bases, int r)
{
    Matrix w = Matrix::Zero(bases[0].rows(), bases[0].cols());
    for (std::size_t b = 0; b < bases.size(); ++b)
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j)
                w(i, j) += coeffs(r, static_cast<int>(b)) * bases[b](i, j);
    return w;
}

/// Single-head additive attention over in-neighbors of either direction.
inline Matrix gat_layer(const sift::SemanticGraph& g, int num_labels, const Matrix& h, const Matrix& w,
                        const Matrix& w_self, const Matrix& a_src, const Matrix& a_dst)
{
    const auto nb = neighborhoods(g, num_labels);
    const int n = g.num_nodes;
    const int d = static_cast<int>(w.rows());
    std::vector<std::vector<double>> wh;
    for (int i = 0; i < n; ++i)
        wh.push_back(matvec(w, row(h, i)));
    auto dot = [d](const Matrix& a, const std::vector<double>& v) {
        double s = 0.0;
        for (int k = 0; k < d; ++k)
            s += a(0, k) * v[static_cast<std::size_t>(k)];
        return s;
    };
    Matrix out(n, d);
    for (int i = 0; i < n; ++i) {
        std::vector<int> js;
        for (const auto& ns : nb[static_cast<std::size_t>(i)])
            js.insert(js.end(), ns.begin(), ns.end());
        std::sort(js.begin(), js.end());
        js.erase(std::unique(js.begin(), js.end()), js.end());
        std::vector<double> acc = matvec(w_self, row(h, i));
        if (!js.empty()) {
            std::vector<double> e;
            for (int j : js) {
                const double s = dot(a_dst, wh[static_cast<std::size_t>(i)]) + dot(a_src, wh[static_cast<std::size_t>(j)]);
                e.push_back(s > 0.0 ? s : 0.2 * s);
            }
            const double mx = *std::max_element(e.begin(), e.end());
            double z = 0.0;
            for (double& x : e)
                z += (x = std::exp(x - mx));
            for (std::size_t t = 0; t < js.size(); ++t)
                for (int k = 0; k < d; ++k)
                    acc[static_cast<std::size_t>(k)] += e[t] / z * wh[static_cast<std::size_t>(js[t])][static_cast<std::size_t>(k)];
        }
        for (int k = 0; k < d; ++k)
            out(i, k) = relu(acc[static_cast<std::size_t>(k)]);
    }
    return out;
}

inline Matrix softmax_rows(const Matrix& a)
{
    Matrix out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < a.cols(); ++j)
            mx = std::max(mx, a(i, j));
        double z = 0.0;
        for (int j = 0; j < a.cols(); ++j)
            z += std::exp(a(i, j) - mx);
        for (int j = 0; j < a.cols(); ++j)
            out(i, j) = std::exp(a(i, j) - mx) / z;
    }
    return out;
}

inline std::vector<double> layer_norm(const std::vector<double>& x, double eps = 1e-5)
{
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    std::vector<double> out;
    for (double v : x)
        out.push_back((v - mean) / std::sqrt(var + eps));
    return out;
}

/// Best total score over every head assignment whose arcs reach the root
/// without cycles. scores is (n+1) × (n+1), [head][dependent].
inline double best_arborescence(const Matrix& scores)
{
    const int n = static_cast<int>(scores.rows()) - 1;
    std::vector<int> heads(static_cast<std::size_t>(n + 1), 0);
    double best = -std::numeric_limits<double>::infinity();
    std::function<void(int)> rec = [&](int dep) {
        if (dep > n) {
            for (int start = 1; start <= n; ++start) {
                int v = start;
                for (int steps = 0; v != 0; ++steps) {
                    if (steps > n)
                        return;
                    v = heads[static_cast<std::size_t>(v)];
                }
            }
            double s = 0.0;
            for (int d = 1; d <= n; ++d)
                s += scores(heads[static_cast<std::size_t>(d)], d);
            best = std::max(best, s);
            return;
        }
        for (int h = 0; h <= n; ++h) {
            if (h == dep)
                continue;
            heads[static_cast<std::size_t>(dep)] = h;
            rec(dep + 1);
        }
    };
    rec(1);
    return best;
}

/// Binary Matthews correlation from confusion counts.
inline double mcc(double tp, double tn, double fp, double fn)
{
    const double den = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    return den == 0.0 ? 0.0 : (tp * tn - fp * fn) / den;
}

} // namespace oracle
