#pragma once

// Cross-graph decomposable attention for sentence pairs, post-attention
// composition layers, and graph pooling.
//
// Parameters under <prefix>: U (h × h), u (1 × 2h), bias (1 × 1),
// W_alpha (h × 4h). Pooling: <prefix>.gain / <prefix>.offset.

#include "sift/graph.h"
#include "sift/rgcn.h"
#include "sift/tensor.h"

#include <string>
#include <utility>

namespace sift {

struct PairAttentionParams {
    num::Var U;
    num::Var u;
    num::Var bias;
    num::Var W_alpha;
};

void add_pair_attention_params(num::ParameterStore& store, const std::string& prefix, int hidden,
                               std::uint64_t seed);
PairAttentionParams bind_pair_attention(const num::Bind& bind, const std::string& prefix);

/// α_ij = h_iᵃᵀ U h_jᵇ + u·[h_iᵃ; h_jᵇ] + bias, |a| × |b|.
num::Var biaffine_attention(num::Var ha, num::Var hb, const PairAttentionParams& p);

/// h̃ = softmax_j(α) H_b (and softmax_i(αᵀ) H_a for b);
/// h' = ReLU(W_α [h; h̃; h − h̃; h ⊙ h̃]).
std::pair<num::Var, num::Var> cross_graph_update(num::Var ha, num::Var hb,
                                                 const PairAttentionParams& p);

/// `layers` more graph layers per side, parameters shared by both sides and
/// named <prefix>.layer<l>. layers == 0 is the identity.
std::pair<num::Var, num::Var> compose_after_attention(const AugmentedGraph& ag_a, num::Var ha,
                                                      const AugmentedGraph& ag_b, num::Var hb,
                                                      EncoderVariant variant, int layers,
                                                      const num::Bind& bind,
                                                      const std::string& prefix);

void add_pooling_params(num::ParameterStore& store, const std::string& prefix, int dim);

/// LN([maxpool(H); summary]). An invalid summary Var drops that block.
num::Var pool_single(num::Var h, num::Var summary, num::Var gain, num::Var offset);

/// LN([maxpool(H_a); maxpool(H_b); summary]).
num::Var pool_pair(num::Var ha, num::Var hb, num::Var summary, num::Var gain, num::Var offset);

} // namespace sift
