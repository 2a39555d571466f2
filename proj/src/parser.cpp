#include "sift/parser.h"

#include "sift/error.h"

namespace sift {

using num::Matrix;
using num::Var;

nlohmann::json parser_config_to_json(const ParserConfig& c)
{
    return {{"mode", c.mode == ParserMode::probe ? "probe" : "ceiling"},
            {"arc_mlp_dim", c.arc_mlp_dim},
            {"label_mlp_dim", c.label_mlp_dim},
            {"target", c.target == ParseTarget::graph ? "graph" : "tree"},
            {"freeze_backbone", c.backbone_frozen()},
            {"include_tops", c.include_tops}};
}

ParserConfig parser_config_from_json(const nlohmann::json& j)
{
    ParserConfig c;
    const std::string mode = j.value("mode", "ceiling");
    if (mode != "ceiling" && mode != "probe")
        throw ValidationError("parser mode must be ceiling or probe, got '" + mode + "'");
    c.mode = mode == "probe" ? ParserMode::probe : ParserMode::ceiling;
    const std::string target = j.value("target", "tree");
    if (target != "tree" && target != "graph")
        throw ValidationError("parser target must be tree or graph, got '" + target + "'");
    c.target = target == "graph" ? ParseTarget::graph : ParseTarget::tree;
    c.arc_mlp_dim = j.value("arc_mlp_dim", c.arc_mlp_dim);
    c.label_mlp_dim = j.value("label_mlp_dim", c.label_mlp_dim);
    c.freeze_backbone = j.value("freeze_backbone", c.freeze_backbone);
    c.include_tops = j.value("include_tops", c.include_tops);
    return c;
}

void add_parser_params(num::ParameterStore& store, const std::string& prefix,
                       const ParserConfig& c, int state_dim, int num_labels, std::uint64_t seed)
{
    if (num_labels < 1)
        throw ValidationError("parser: at least one label is required");
    const bool mlp = c.mode == ParserMode::ceiling;
    const int ka = mlp ? c.arc_mlp_dim : state_dim;
    const int kl = mlp ? c.label_mlp_dim : state_dim;
    if (mlp) {
        for (const char* role : {"arc_head", "arc_dep"}) {
            store.add_glorot(prefix + "." + role + ".W", ka, state_dim, seed);
            store.add_zeros(prefix + "." + role + ".b", 1, ka);
        }
        for (const char* role : {"label_head", "label_dep"}) {
            store.add_glorot(prefix + "." + role + ".W", kl, state_dim, seed);
            store.add_zeros(prefix + "." + role + ".b", 1, kl);
        }
    }
    store.add_glorot(prefix + ".arc.U", ka, ka, seed);
    store.add_glorot(prefix + ".arc.u", 1, ka, seed);
    store.add_zeros(prefix + ".arc.b", 1, 1);
    store.add_glorot(prefix + ".label.U", kl, num_labels * kl, seed);
    store.add_glorot(prefix + ".label.W", num_labels, 2 * kl, seed);
    store.add_zeros(prefix + ".label.b", 1, num_labels);
    if (c.target == ParseTarget::tree)
        store.add_glorot(prefix + ".root", 1, state_dim, seed);
    if (c.target == ParseTarget::graph && c.include_tops) {
        store.add_glorot(prefix + ".top.W", 1, state_dim, seed);
        store.add_zeros(prefix + ".top.b", 1, 1);
    }
}

ParseScoreVars score(Var states, const ParserConfig& c, const num::Bind& bind,
                     const std::string& prefix)
{
    ParseScoreVars out;
    Var h = states;
    if (c.target == ParseTarget::tree) {
        Var root = bind(prefix + ".root");
        if (root.cols() != states.cols())
            throw ShapeError("parser: state width differs from the root vector");
        h = num::concat_rows({root, states});
        out.rooted = true;
    }
    Var arc_h = h, arc_d = h, lab_h = h, lab_d = h;
    if (c.mode == ParserMode::ceiling) {
        auto mlp = [&](const char* role) {
            const std::string p = prefix + "." + role;
            return num::relu(num::linear(h, bind(p + ".W"), bind(p + ".b")));
        };
        arc_h = mlp("arc_head");
        arc_d = mlp("arc_dep");
        lab_h = mlp("label_head");
        lab_d = mlp("label_dep");
    }
    Var U = bind(prefix + ".arc.U");
    if (U.rows() != arc_h.cols())
        throw ShapeError("parser: state width differs from the arc scorer");
    out.arc = num::add_scalar(num::add_col(num::matmul(num::matmul(arc_h, U), num::transpose(arc_d)),
                                           num::linear(arc_h, bind(prefix + ".arc.u"))),
                              bind(prefix + ".arc.b"));

    Var LU = bind(prefix + ".label.U"), LW = bind(prefix + ".label.W"), Lb = bind(prefix + ".label.b");
    const auto k = lab_h.cols();
    const auto num_labels = LW.rows();
    Var t = num::matmul(lab_h, LU);
    Var lab_dt = num::transpose(lab_d);
    Var lin_h = num::linear(lab_h, num::slice_cols(LW, 0, k));           // n × L
    Var lin_d = num::transpose(num::linear(lab_d, num::slice_cols(LW, k, k)));  // L × n
    for (Eigen::Index l = 0; l < num_labels; ++l) {
        Var m = num::matmul(num::slice_cols(t, l * k, k), lab_dt);
        m = num::add_row(num::add_col(m, num::slice_cols(lin_h, l, 1)), num::slice_rows(lin_d, l, 1));
        out.labels.push_back(num::add_scalar(m, num::slice_cols(Lb, l, 1)));
    }
    if (c.target == ParseTarget::graph && c.include_tops)
        out.tops = num::linear(states, bind(prefix + ".top.W"), bind(prefix + ".top.b"));
    return out;
}

ParseScores values(const ParseScoreVars& s)
{
    ParseScores v;
    v.arc = s.arc.value();
    for (Var l : s.labels)
        v.labels.push_back(l.value());
    if (s.tops.valid())
        v.tops = s.tops.value();
    v.rooted = s.rooted;
    return v;
}

Var parsing_loss(const ParseScoreVars& s, const SemanticGraph& gold, const ParserConfig& c)
{
    num::Tape& tape = *s.arc.tape();
    const auto size = s.arc.rows();
    if (gold.num_nodes != size)
        throw ValidationError("parsing_loss: gold has " + std::to_string(gold.num_nodes) +
                              " nodes, scores cover " + std::to_string(size));
    const int num_labels = static_cast<int>(s.labels.size());
    std::vector<std::pair<int, int>> cells;
    std::vector<int> label_targets;
    for (const Edge& e : gold.edges) {
        if (e.source < 0 || e.target < 0 || e.source >= size || e.target >= size)
            throw ValidationError("parsing_loss: gold arc out of range");
        if (e.relation < 0 || e.relation >= num_labels)
            throw ValidationError("parsing_loss: gold label out of range");
        cells.emplace_back(e.source, e.target);
        label_targets.push_back(e.relation);
    }

    Var arc_loss;
    if (c.target == ParseTarget::tree) {
        const auto n = size - 1;
        std::vector<int> heads(static_cast<std::size_t>(n), -1);
        for (const Edge& e : gold.edges) {
            if (e.target == 0)
                throw ValidationError("parsing_loss: the root cannot be a dependent");
            if (heads[static_cast<std::size_t>(e.target - 1)] != -1)
                throw ValidationError("parsing_loss: token with multiple gold heads");
            heads[static_cast<std::size_t>(e.target - 1)] = e.source;
        }
        for (int h : heads)
            if (h < 0)
                throw ValidationError("parsing_loss: token without a gold head");
        Matrix mask = Matrix::Zero(n, size);
        for (Eigen::Index j = 0; j < n; ++j)
            mask(j, j + 1) = -1e9;
        Var logits = num::add(num::slice_rows(num::transpose(s.arc), 1, n), tape.constant(std::move(mask)));
        arc_loss = num::cross_entropy(logits, heads);
    } else {
        Matrix targets = Matrix::Zero(size, size);
        Matrix mask = Matrix::Ones(size, size);
        for (Eigen::Index i = 0; i < size; ++i)
            mask(i, i) = 0.0;
        for (const auto& [i, j] : cells)
            targets(i, j) = 1.0;
        arc_loss = num::binary_cross_entropy(s.arc, targets, mask);
        if (s.tops.valid()) {
            Matrix top_t = Matrix::Zero(size, 1);
            for (int t : gold.top_nodes)
                top_t(t, 0) = 1.0;
            arc_loss = num::add(arc_loss,
                                num::binary_cross_entropy(s.tops, top_t, Matrix::Ones(size, 1)));
        }
    }
    if (cells.empty())
        return arc_loss;
    Var label_logits = num::gather_cells(s.labels, cells);
    return num::add(arc_loss, num::cross_entropy(label_logits, label_targets));
}

} // namespace sift
