#include "sift/rgcn.h"

#include "sift/error.h"
#include "sift/random.h"

#include <cmath>

namespace sift {

using num::Matrix;
using num::Var;

std::string variant_name(EncoderVariant v)
{
    switch (v) {
    case EncoderVariant::rgcn: return "rgcn";
    case EncoderVariant::gcn: return "gcn";
    case EncoderVariant::gat: return "gat";
    }
    return "rgcn";
}

EncoderVariant parse_variant(const std::string& name)
{
    if (name == "rgcn")
        return EncoderVariant::rgcn;
    if (name == "gcn")
        return EncoderVariant::gcn;
    if (name == "gat")
        return EncoderVariant::gat;
    throw ValidationError("unknown encoder variant '" + name + "'");
}

nlohmann::json encoder_config_to_json(const EncoderConfig& c)
{
    return {{"num_layers", c.num_layers},
            {"hidden_dim", c.hidden_dim},
            {"num_bases", c.num_bases},
            {"inter_layer_dropout", c.inter_layer_dropout},
            {"final_dropout", c.final_dropout},
            {"variant", variant_name(c.variant)}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j)
{
    EncoderConfig c;
    c.num_layers = j.value("num_layers", c.num_layers);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.num_bases = j.value("num_bases", c.num_bases);
    c.inter_layer_dropout = j.value("inter_layer_dropout", c.inter_layer_dropout);
    c.final_dropout = j.value("final_dropout", c.final_dropout);
    if (j.contains("variant"))
        c.variant = parse_variant(j.at("variant").get<std::string>());
    return c;
}

void validate_encoder_config(const EncoderConfig& c, int num_relations)
{
    if (c.num_layers < 1)
        throw ValidationError("encoder: num_layers must be at least 1");
    if (c.hidden_dim < 1)
        throw ValidationError("encoder: hidden_dim must be positive");
    if (c.variant == EncoderVariant::rgcn && (c.num_bases < 1 || c.num_bases > num_relations))
        throw ValidationError("encoder: num_bases must lie in [1, " +
                              std::to_string(num_relations) + "]");
    for (double p : {c.inter_layer_dropout, c.final_dropout})
        if (!(p >= 0.0 && p < 1.0))
            throw ValidationError("encoder: dropout must lie in [0, 1)");
}

void add_layer_params(num::ParameterStore& store, const std::string& prefix,
                      EncoderVariant variant, int hidden, int num_bases, int num_relations,
                      std::uint64_t seed)
{
    switch (variant) {
    case EncoderVariant::rgcn:
        for (int b = 0; b < num_bases; ++b)
            store.add_glorot(prefix + ".basis." + std::to_string(b), hidden, hidden, seed);
        store.add_glorot(prefix + ".coefficients", num_relations, num_bases, seed);
        store.add_glorot(prefix + ".self", hidden, hidden, seed);
        break;
    case EncoderVariant::gcn:
        store.add_glorot(prefix + ".weight", hidden, hidden, seed);
        store.add_glorot(prefix + ".self", hidden, hidden, seed);
        break;
    case EncoderVariant::gat:
        store.add_glorot(prefix + ".weight", hidden, hidden, seed);
        store.add_glorot(prefix + ".self", hidden, hidden, seed);
        store.add_glorot(prefix + ".attn_src", 1, hidden, seed);
        store.add_glorot(prefix + ".attn_dst", 1, hidden, seed);
        break;
    }
}

void add_encoder_params(num::ParameterStore& store, const std::string& prefix,
                        const EncoderConfig& c, int embedding_dim, int num_relations,
                        std::uint64_t seed)
{
    validate_encoder_config(c, num_relations);
    store.add_glorot(prefix + ".init.W_e", c.hidden_dim, embedding_dim, seed);
    for (int l = 0; l < c.num_layers; ++l)
        add_layer_params(store, prefix + ".layer" + std::to_string(l), c.variant, c.hidden_dim,
                         c.num_bases, num_relations, seed);
}

std::size_t layer_parameter_count(EncoderVariant variant, int hidden, int num_bases,
                                  int num_relations)
{
    const auto h = static_cast<std::size_t>(hidden);
    switch (variant) {
    case EncoderVariant::rgcn:
        return static_cast<std::size_t>(num_bases) * h * h +
               static_cast<std::size_t>(num_relations) * static_cast<std::size_t>(num_bases) + h * h;
    case EncoderVariant::gcn:
        return 2 * h * h;
    case EncoderVariant::gat:
        return 2 * h * h + 2 * h;
    }
    return 0;
}

Matrix averaging_matrix(const TokenAlignment& align, int num_pieces)
{
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(align.spans.size()), num_pieces);
    for (std::size_t t = 0; t < align.spans.size(); ++t) {
        const auto [first, last] = align.spans[t];
        if (first < 0 || last < first || last >= num_pieces)
            throw ValidationError("alignment range outside the embedding sequence");
        const double w = 1.0 / static_cast<double>(last - first + 1);
        for (int j = first; j <= last; ++j)
            m(static_cast<Eigen::Index>(t), j) = w;
    }
    return m;
}

Var init_node_embeddings(Var pieces, const TokenAlignment& align, Var w_e)
{
    num::Tape& tape = *pieces.tape();
    Var avg = tape.constant(averaging_matrix(align, static_cast<int>(pieces.rows())));
    return num::relu(num::linear(num::matmul(avg, pieces), w_e));
}

Var compose_relation_weight(Var coefficients, std::span<const Var> bases, int r)
{
    if (bases.empty())
        throw ShapeError("compose_relation_weight: no bases");
    if (r < 0 || r >= coefficients.rows() || coefficients.cols() != static_cast<Eigen::Index>(bases.size()))
        throw ShapeError("compose_relation_weight: relation or basis count mismatch");
    const auto rows = bases[0].rows(), cols = bases[0].cols();
    std::vector<Var> flat;
    for (Var v : bases)
        flat.push_back(num::reshape(v, 1, rows * cols));
    Var stacked = num::concat_rows(flat);                         // B × h²
    Var w = num::matmul(num::slice_rows(coefficients, r, 1), stacked);
    return num::reshape(w, rows, cols);
}

Matrix relation_adjacency(const AugmentedGraph& ag, int relation)
{
    const int n = ag.num_nodes();
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const auto& nb = ag.neighborhood(i, relation);
        for (int j : nb)
            a(i, j) = 1.0 / static_cast<double>(nb.size());
    }
    return a;
}

RgcnLayerParams bind_rgcn_layer(const num::Bind& bind, const std::string& prefix)
{
    RgcnLayerParams p;
    p.coefficients = bind(prefix + ".coefficients");
    for (Eigen::Index b = 0; b < p.coefficients.cols(); ++b)
        p.bases.push_back(bind(prefix + ".basis." + std::to_string(b)));
    p.self = bind(prefix + ".self");
    return p;
}

GcnLayerParams bind_gcn_layer(const num::Bind& bind, const std::string& prefix)
{
    return {bind(prefix + ".weight"), bind(prefix + ".self")};
}

GatLayerParams bind_gat_layer(const num::Bind& bind, const std::string& prefix)
{
    return {bind(prefix + ".weight"), bind(prefix + ".self"), bind(prefix + ".attn_src"),
            bind(prefix + ".attn_dst")};
}

Var rgcn_layer(const AugmentedGraph& ag, Var h, const RgcnLayerParams& p)
{
    if (h.rows() != ag.num_nodes())
        throw ShapeError("rgcn_layer: state rows differ from node count");
    if (p.coefficients.rows() != ag.num_relations())
        throw ShapeError("rgcn_layer: coefficient rows differ from relation count");
    num::Tape& tape = *h.tape();
    Var out = num::linear(h, p.self);
    for (int r : ag.active_relations()) {
        Var w_r = compose_relation_weight(p.coefficients, p.bases, r);
        Var msg = num::matmul(tape.constant(relation_adjacency(ag, r)), num::linear(h, w_r));
        out = num::add(out, msg);
    }
    return num::relu(out);
}

Var gcn_layer(const AugmentedGraph& ag, Var h, const GcnLayerParams& p)
{
    if (h.rows() != ag.num_nodes())
        throw ShapeError("gcn_layer: state rows differ from node count");
    num::Tape& tape = *h.tape();
    const int n = ag.num_nodes();
    const int labels = ag.num_relations() / 2;
    Var out = num::linear(h, p.self);
    Var z = num::linear(h, p.weight);
    for (int inverse = 0; inverse < 2; ++inverse) {
        Matrix a = Matrix::Zero(n, n);
        bool any = false;
        for (int i = 0; i < n; ++i) {
            std::vector<int> nb;
            for (int r = inverse * labels; r < (inverse + 1) * labels; ++r) {
                const auto& v = ag.neighborhood(i, r);
                nb.insert(nb.end(), v.begin(), v.end());
            }
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
            for (int j : nb)
                a(i, j) = 1.0 / static_cast<double>(nb.size());
            any = any || !nb.empty();
        }
        if (any)
            out = num::add(out, num::matmul(tape.constant(std::move(a)), z));
    }
    return num::relu(out);
}

Var gat_layer(const AugmentedGraph& ag, Var h, const GatLayerParams& p)
{
    if (h.rows() != ag.num_nodes())
        throw ShapeError("gat_layer: state rows differ from node count");
    num::Tape& tape = *h.tape();
    const int n = ag.num_nodes();
    Var out = num::linear(h, p.self);
    Matrix mask = Matrix::Zero(n, n);
    Matrix block = Matrix::Constant(n, n, -1e9);
    bool any = false;
    for (int i = 0; i < n; ++i)
        for (int j : ag.all_neighbors(i)) {
            mask(i, j) = 1.0;
            block(i, j) = 0.0;
            any = true;
        }
    if (!any)
        return num::relu(out);
    Var z = num::linear(h, p.weight);
    Var s_dst = num::linear(z, p.attn_dst);                 // n × 1
    Var s_src = num::transpose(num::linear(z, p.attn_src)); // 1 × n
    Var e = num::add_col(num::add_row(tape.constant(Matrix::Zero(n, n)), s_src), s_dst);
    e = num::add(num::leaky_relu(e, 0.2), tape.constant(std::move(block)));
    Var alpha = num::hadamard(num::softmax_rows(e), tape.constant(std::move(mask)));
    return num::relu(num::add(out, num::matmul(alpha, z)));
}

Var graph_layer(EncoderVariant variant, const AugmentedGraph& ag, Var h, const num::Bind& bind,
                const std::string& prefix)
{
    switch (variant) {
    case EncoderVariant::rgcn: return rgcn_layer(ag, h, bind_rgcn_layer(bind, prefix));
    case EncoderVariant::gcn: return gcn_layer(ag, h, bind_gcn_layer(bind, prefix));
    case EncoderVariant::gat: return gat_layer(ag, h, bind_gat_layer(bind, prefix));
    }
    throw ValidationError("unknown encoder variant");
}

Var encode(const AugmentedGraph& ag, Var pieces, const TokenAlignment& align,
           const EncoderConfig& c, const num::Bind& bind, const std::string& prefix,
           const EncodeOptions& opt)
{
    if (static_cast<int>(align.spans.size()) != ag.num_nodes())
        throw ShapeError("encode: alignment covers " + std::to_string(align.spans.size()) +
                         " tokens, graph has " + std::to_string(ag.num_nodes()));
    Var h = init_node_embeddings(pieces, align, bind(prefix + ".init.W_e"));
    for (int l = 0; l < c.num_layers; ++l) {
        if (l > 0)
            h = num::dropout(h, c.inter_layer_dropout, opt.train,
                             derive_seed(opt.dropout_seed, prefix + ".dropout" + std::to_string(l)));
        h = graph_layer(c.variant, ag, h, bind, prefix + ".layer" + std::to_string(l));
    }
    return num::dropout(h, c.final_dropout, opt.train,
                        derive_seed(opt.dropout_seed, prefix + ".final_dropout"));
}

} // namespace sift
