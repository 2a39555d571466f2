#pragma once

// Biaffine arc and label scorers in the style of Dozat & Manning.
//
// Scores are indexed [head][dependent]. Tree targets prepend a learned root
// vector, so a sentence of n tokens yields (n+1) × (n+1) matrices with the
// root at index 0; graph targets score the n × n token pairs directly.
//
// Parameters under <prefix>:
//   arc_head.W/b, arc_dep.W/b, label_head.W/b, label_dep.W/b   ceiling MLPs
//   arc.U (k × k), arc.u (1 × k), arc.b (1 × 1)
//   label.U (k × L·k), label.W (L × 2k), label.b (1 × L)
//   root (1 × d)            tree target
//   top.W (1 × d), top.b    graph target with tops

#include "sift/graph.h"
#include "sift/tensor.h"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace sift {

enum class ParserMode { ceiling, probe };
enum class ParseTarget { tree, graph };

struct ParserConfig {
    ParserMode mode = ParserMode::ceiling;
    int arc_mlp_dim = 512;
    int label_mlp_dim = 128;
    ParseTarget target = ParseTarget::tree;
    bool freeze_backbone = false;
    /// Graph target only: adds a per-token top classifier to score and loss.
    bool include_tops = false;

    bool backbone_frozen() const { return mode == ParserMode::probe || freeze_backbone; }
};

nlohmann::json parser_config_to_json(const ParserConfig& c);
ParserConfig parser_config_from_json(const nlohmann::json& j);

void add_parser_params(num::ParameterStore& store, const std::string& prefix,
                       const ParserConfig& c, int state_dim, int num_labels, std::uint64_t seed);

struct ParseScoreVars {
    num::Var arc;                   // heads × dependents
    std::vector<num::Var> labels;   // one matrix per label, same indexing
    num::Var tops;                  // n × 1 logits, graph target with tops
    bool rooted = false;
};

struct ParseScores {
    num::Matrix arc;
    std::vector<num::Matrix> labels;
    num::Matrix tops;
    bool rooted = false;
};

/// states: n × d token representations.
ParseScoreVars score(num::Var states, const ParserConfig& c, const num::Bind& bind,
                     const std::string& prefix);

ParseScores values(const ParseScoreVars& s);

/// Gold structure in score indexing: for trees an (n+1)-node graph with the
/// root at 0 (tree_to_graph), for graphs the n-node semantic graph.
/// Trees: mean head cross entropy per dependent (self-arcs masked) plus mean
/// label cross entropy on gold arcs. Graphs: mean binary cross entropy over
/// ordered pairs i ≠ j plus mean label cross entropy on gold arcs (plus top
/// binary cross entropy when enabled).
num::Var parsing_loss(const ParseScoreVars& s, const SemanticGraph& gold, const ParserConfig& c);

} // namespace sift
