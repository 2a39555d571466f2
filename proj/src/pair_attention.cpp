#include "sift/pair_attention.h"

#include "sift/error.h"

namespace sift {

using num::Matrix;
using num::Var;

void add_pair_attention_params(num::ParameterStore& store, const std::string& prefix, int hidden,
                               std::uint64_t seed)
{
    store.add_glorot(prefix + ".U", hidden, hidden, seed);
    store.add_glorot(prefix + ".u", 1, 2 * hidden, seed);
    store.add_zeros(prefix + ".bias", 1, 1);
    store.add_glorot(prefix + ".W_alpha", hidden, 4 * hidden, seed);
}

PairAttentionParams bind_pair_attention(const num::Bind& bind, const std::string& prefix)
{
    return {bind(prefix + ".U"), bind(prefix + ".u"), bind(prefix + ".bias"),
            bind(prefix + ".W_alpha")};
}

Var biaffine_attention(Var ha, Var hb, const PairAttentionParams& p)
{
    const auto h = ha.cols();
    if (hb.cols() != h || p.U.rows() != h || p.U.cols() != h || p.u.cols() != 2 * h)
        throw ShapeError("biaffine_attention: hidden dimensions differ");
    Var bilinear = num::matmul(num::matmul(ha, p.U), num::transpose(hb));
    Var lin_a = num::linear(ha, num::slice_cols(p.u, 0, h));        // |a| × 1
    Var lin_b = num::linear(num::slice_cols(p.u, h, h), hb);        // 1 × |b|
    return num::add_scalar(num::add_row(num::add_col(bilinear, lin_a), lin_b), p.bias);
}

namespace {

Var compare(Var h, Var attended, Var w_alpha)
{
    Var feats = num::concat_cols({h, attended, num::sub(h, attended), num::hadamard(h, attended)});
    return num::relu(num::linear(feats, w_alpha));
}

} // namespace

std::pair<Var, Var> cross_graph_update(Var ha, Var hb, const PairAttentionParams& p)
{
    if (ha.rows() == 0 || hb.rows() == 0)
        throw ValidationError("cross_graph_update: empty graph");
    Var alpha = biaffine_attention(ha, hb, p);
    Var att_a = num::matmul(num::softmax_rows(alpha), hb);
    Var att_b = num::matmul(num::softmax_rows(num::transpose(alpha)), ha);
    return {compare(ha, att_a, p.W_alpha), compare(hb, att_b, p.W_alpha)};
}

std::pair<Var, Var> compose_after_attention(const AugmentedGraph& ag_a, Var ha,
                                            const AugmentedGraph& ag_b, Var hb,
                                            EncoderVariant variant, int layers,
                                            const num::Bind& bind, const std::string& prefix)
{
    for (int l = 0; l < layers; ++l) {
        const std::string name = prefix + ".layer" + std::to_string(l);
        ha = graph_layer(variant, ag_a, ha, bind, name);
        hb = graph_layer(variant, ag_b, hb, bind, name);
    }
    return {ha, hb};
}

void add_pooling_params(num::ParameterStore& store, const std::string& prefix, int dim)
{
    store.add_constant(prefix + ".gain", 1, dim, 1.0);
    store.add_zeros(prefix + ".offset", 1, dim);
}

Var pool_single(Var h, Var summary, Var gain, Var offset)
{
    if (h.rows() == 0)
        throw ValidationError("pool_single: zero-node graph");
    Var pooled = num::row_max_pool(h);
    if (summary.valid())
        pooled = num::concat_cols({pooled, summary});
    return num::layer_norm(pooled, gain, offset);
}

Var pool_pair(Var ha, Var hb, Var summary, Var gain, Var offset)
{
    if (ha.rows() == 0 || hb.rows() == 0)
        throw ValidationError("pool_pair: zero-node graph");
    std::vector<Var> parts{num::row_max_pool(ha), num::row_max_pool(hb)};
    if (summary.valid())
        parts.push_back(summary);
    return num::layer_norm(num::concat_cols(parts), gain, offset);
}

} // namespace sift
