#pragma once

// Downstream task models for every training mode.
//
//   baseline    linear classifier on the (adapted) sequence summary
//   sift        graph encoder → [pair attention → composition] → pooling → classifier
//   gcn / gat   sift with the corresponding encoder variant
//   sift_light  sift head and baseline head on one backbone pass; loss
//               w_g·L_graph + w_m·L_main, predictions from the main head only
//   scaffold    baseline head plus an auxiliary graph parser on token states;
//               loss w_m·L_main + w_s·L_parse
//
// Parameter prefixes: adapter, enc, pair, compose, pool, graph_head, head,
// scaffold.

#include "sift/corpus_io.h"
#include "sift/graph.h"
#include "sift/optimizer.h"
#include "sift/parser.h"
#include "sift/rgcn.h"
#include "sift/tensor.h"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sift {

enum class RunMode { baseline, sift, sift_light, scaffold, gcn, gat };

std::string mode_name(RunMode m);
RunMode parse_mode(const std::string& name);
bool uses_graphs(RunMode m);

struct Ablations {
    bool attention = true;  // pair tasks: cross-graph attention
    bool concat = true;     // pooling: append the sequence summary
};

struct RunConfig {
    RunMode mode = RunMode::sift;
    EncoderConfig encoder;
    /// Composition layers after pair attention; negative means encoder.num_layers.
    int composition_layers = -1;
    Ablations ablations;
    /// Pair tasks: "both" concatenates the two summaries, "first" uses a's.
    std::string pair_summary = "both";
    bool train_adapter = true;
    double head_dropout = 0.0;
    double graph_loss_weight = 0.2;
    double main_loss_weight = 0.8;
    double scaffold_weight = 0.2;
    ParserConfig scaffold_parser{ParserMode::ceiling, 64, 32, ParseTarget::graph, false, false};
    std::vector<std::uint64_t> seeds{1};
    OptimizerConfig optimizer;

    EncoderVariant variant() const;
    int composition() const { return composition_layers < 0 ? encoder.num_layers : composition_layers; }
};

nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

/// One sentence ready for the model: pieces, summary, alignment and graph.
struct PreparedSide {
    num::Matrix pieces;
    num::RowVector summary;
    TokenAlignment align;
    std::optional<AugmentedGraph> graph;
};

struct PreparedExample {
    PreparedSide a;
    std::optional<PreparedSide> b;
    int label = -1;
    double target = 0.0;
    std::string category;
};

/// Throws ValidationError when a side lacks an embedding, or lacks a graph
/// while need_graph is set.
PreparedSide prepare_side(const TaskSide& side, const RelationVocab& vocab, bool need_graph);
std::vector<PreparedExample> prepare_examples(const TaskDataset& data, bool need_graph);

struct ForwardResult {
    num::Var output;       // 1 × output_dim; the head used for prediction
    num::Var loss;         // 1 × 1 training objective
    num::Var main_loss;
    num::Var graph_loss;   // sift_light graph head
    num::Var aux_loss;     // scaffold parser
};

struct ForwardOptions {
    bool train = false;
    std::uint64_t dropout_seed = 0;
    /// Scaffold: parse target; defaults to the example's own graphs.
    const PreparedSide* scaffold_side = nullptr;
};

class DownstreamModel {
  public:
    DownstreamModel() = default;
    DownstreamModel(const RunConfig& run, const TaskSchema& schema, const RelationVocab& relations,
                    int embedding_dim, std::uint64_t seed);

    const RunConfig& run() const { return run_; }
    const TaskSchema& schema() const { return schema_; }
    const RelationVocab& relations() const { return relations_; }
    int embedding_dim() const { return embedding_dim_; }
    num::ParameterStore& params() { return params_; }
    const num::ParameterStore& params() const { return params_; }

    ForwardResult forward(num::Tape& tape, const PreparedExample& ex,
                          const ForwardOptions& opt = {});

    /// Class index (classification) or value (regression) from an output row.
    double predict(const num::Matrix& output) const;

    nlohmann::json header() const;
    static DownstreamModel from_checkpoint(const nlohmann::json& header, num::ParameterStore params);

  private:
    num::Var summary(num::Tape& tape, const PreparedExample& ex, const num::Bind& bind);
    num::Var pieces(num::Tape& tape, const PreparedSide& s, const num::Bind& bind);
    num::Var graph_features(num::Tape& tape, const PreparedExample& ex, num::Var summary,
                            const num::Bind& bind, const ForwardOptions& opt);
    num::Var task_loss(num::Var output, const PreparedExample& ex);
    num::Var scaffold_loss(num::Tape& tape, const PreparedSide& side, const num::Bind& bind);
    int summary_dim() const;

    RunConfig run_;
    TaskSchema schema_;
    RelationVocab relations_;
    int embedding_dim_ = 0;
    num::ParameterStore params_;
};

} // namespace sift
