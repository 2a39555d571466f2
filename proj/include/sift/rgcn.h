#pragma once

// Graph encoder: node initialization from aligned wordpiece vectors and
// stacks of relational graph convolutions (plus GCN and GAT variants).
//
// Parameters live in a ParameterStore under a prefix, e.g.
//   <prefix>.init.W_e                    hidden × embedding_dim
//   <prefix>.layer0.basis.3              hidden × hidden
//   <prefix>.layer0.coefficients         relations × bases
//   <prefix>.layer0.self                 hidden × hidden

#include "sift/corpus_io.h"
#include "sift/graph.h"
#include "sift/tensor.h"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace sift {

enum class EncoderVariant { rgcn, gcn, gat };

std::string variant_name(EncoderVariant v);
EncoderVariant parse_variant(const std::string& name);

struct EncoderConfig {
    int num_layers = 2;
    int hidden_dim = 256;
    int num_bases = 20;
    double inter_layer_dropout = 0.0;
    double final_dropout = 0.0;
    EncoderVariant variant = EncoderVariant::rgcn;
};

nlohmann::json encoder_config_to_json(const EncoderConfig& c);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

/// Throws ValidationError unless num_layers >= 1 and, for rgcn,
/// 1 <= num_bases <= num_relations (augmented count).
void validate_encoder_config(const EncoderConfig& c, int num_relations);

/// Adds one convolution layer's parameters.
void add_layer_params(num::ParameterStore& store, const std::string& prefix,
                      EncoderVariant variant, int hidden, int num_bases, int num_relations,
                      std::uint64_t seed);

/// Adds W_e and every layer of the encoder.
void add_encoder_params(num::ParameterStore& store, const std::string& prefix,
                        const EncoderConfig& c, int embedding_dim, int num_relations,
                        std::uint64_t seed);

/// Scalar entries in one layer: rgcn B·h² + R·B + h², gcn 2h², gat 2h² + 2h.
std::size_t layer_parameter_count(EncoderVariant variant, int hidden, int num_bases,
                                  int num_relations);

/// n × pieces matrix whose row t averages the wordpieces aligned to t.
num::Matrix averaging_matrix(const TokenAlignment& align, int num_pieces);

/// h⁰ = ReLU(mean(e_j..e_k) W_eᵀ), one row per token.
num::Var init_node_embeddings(num::Var pieces, const TokenAlignment& align, num::Var w_e);

/// Σ_b a_{r,b} V_b.
num::Var compose_relation_weight(num::Var coefficients, std::span<const num::Var> bases, int r);

/// Row-normalized adjacency for one relation: A(i, j) = 1/|N_i^r| for j ∈ N_i^r.
num::Matrix relation_adjacency(const AugmentedGraph& ag, int relation);

struct RgcnLayerParams {
    num::Var coefficients;       // relations × bases
    std::vector<num::Var> bases;
    num::Var self;               // W₀
};

struct GcnLayerParams {
    num::Var weight;
    num::Var self;
};

struct GatLayerParams {
    num::Var weight;
    num::Var self;
    num::Var attn_src;           // 1 × hidden
    num::Var attn_dst;           // 1 × hidden
};

RgcnLayerParams bind_rgcn_layer(const num::Bind& bind, const std::string& prefix);
GcnLayerParams bind_gcn_layer(const num::Bind& bind, const std::string& prefix);
GatLayerParams bind_gat_layer(const num::Bind& bind, const std::string& prefix);

/// h'_i = ReLU(Σ_r Σ_{j∈N_i^r} (1/|N_i^r|) W_r h_j + W₀ h_i).
num::Var rgcn_layer(const AugmentedGraph& ag, num::Var h, const RgcnLayerParams& p);

/// One shared W. Labels are ignored but direction is kept: original and
/// inverse neighborhoods are two normalization classes, so on a
/// single-label graph this equals rgcn_layer with W_r = W for both.
num::Var gcn_layer(const AugmentedGraph& ag, num::Var h, const GcnLayerParams& p);

/// Single-head additive attention over the union of in-neighbors:
/// e_ij = LeakyReLU_0.2(a_dst·W h_i + a_src·W h_j), softmax over j,
/// h'_i = ReLU(Σ_j α_ij W h_j + W₀ h_i).
num::Var gat_layer(const AugmentedGraph& ag, num::Var h, const GatLayerParams& p);

/// Dispatches on variant; prefix names the layer (e.g. "enc.layer1").
num::Var graph_layer(EncoderVariant variant, const AugmentedGraph& ag, num::Var h,
                     const num::Bind& bind, const std::string& prefix);

struct EncodeOptions {
    bool train = false;
    std::uint64_t dropout_seed = 0;
};

/// init, then num_layers layers with dropout between them, then final dropout.
num::Var encode(const AugmentedGraph& ag, num::Var pieces, const TokenAlignment& align,
                const EncoderConfig& c, const num::Bind& bind, const std::string& prefix,
                const EncodeOptions& opt = {});

} // namespace sift
