#pragma once

// Training and experiment harness: downstream finetuning in every mode,
// parser training (ceiling and probe), the probe experiment, subsampling
// and parameter counting.

#include "sift/corpus_io.h"
#include "sift/metrics.h"
#include "sift/models.h"
#include "sift/optimizer.h"
#include "sift/parser.h"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sift {

struct TrainOptions {
    int threads = 1;
    /// Evaluate on the training set after each epoch.
    bool eval_train = true;
    /// Stop once training accuracy reaches 1 (classification only).
    bool stop_at_perfect_train = false;
    /// Scaffold mode: auxiliary parsing corpus, cycled by example order.
    const std::vector<PreparedSide>* scaffold_corpus = nullptr;
    /// Called after every epoch with its JSON log line.
    std::function<void(const nlohmann::json&)> on_epoch;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<EvalReport> train;
    std::optional<EvalReport> dev;
};

nlohmann::json epoch_log_to_json(const EpochLog& e);

struct TrainResult {
    DownstreamModel model;
    std::vector<EpochLog> epochs;
    int best_epoch = 0;   // by dev accuracy (or Pearson), 1-based; 0 without dev
};

/// Runs run.optimizer.epochs epochs of AdamW over `train`; gradients are
/// averaged over each effective batch and reduced in example order, so
/// results do not depend on the thread count. Throws ValidationError when
/// a graph mode meets an example without a graph.
TrainResult train_downstream(const TaskDataset& train, const TaskDataset* dev, const RunConfig& run,
                             std::uint64_t seed, const TrainOptions& opt = {});

struct Predictions {
    std::vector<double> values;  // class index or regression value
    double mean_loss = 0.0;
};

Predictions predict(DownstreamModel& model, const std::vector<PreparedExample>& data, int threads = 1);

/// Accuracy, R_K and per-category accuracy (classification) or Pearson and
/// MSE (regression).
EvalReport evaluate(DownstreamModel& model, const std::vector<PreparedExample>& data,
                    int threads = 1);

// --- parsers ---------------------------------------------------------------

struct ParserRunConfig {
    ParserConfig parser;
    /// "context": trainable windowed backbone over token vectors (frozen in
    /// probe mode). "none": the parser reads token vectors directly.
    std::string backbone = "context";
    int backbone_dim = 32;
    int max_positions = 64;
    OptimizerConfig optimizer{1e-3, 0.1, 0.06, 0.9, 0.999, 1e-8, 10, 8, 0};
};

nlohmann::json parser_run_to_json(const ParserRunConfig& c);
ParserRunConfig parser_run_from_json(const nlohmann::json& j, ParserRunConfig base = {});

struct ParserResult {
    num::ParameterStore params;
    RelationVocab labels;
    EvalReport dev;
    std::vector<double> epoch_losses;
};

/// Trees need records with `tree` set; graphs use each record's graph.
/// The backbone is initialized from the seed alone, so ceiling and probe
/// runs with one seed start from the same backbone.
ParserResult train_parser(const Corpus& train, const Corpus& dev, const ParserRunConfig& cfg,
                          std::uint64_t seed, int threads = 1);

/// Decodes and scores `data` with trained parser parameters.
EvalReport evaluate_parser(num::ParameterStore& params, const RelationVocab& labels,
                           const Corpus& data, const ParserRunConfig& cfg, int threads = 1);

struct ProbeRow {
    std::string target;   // "tree" or "graph"
    std::string metric;   // LAS, labeled F1, LEM, UEM
    double ceiling = 0.0;
    double probe = 0.0;
    Delta delta;
};

struct ProbeReport {
    std::vector<ProbeRow> rows;
    std::size_t train_size = 0;
    std::size_t dev_size = 0;
};

struct ProbeExperimentConfig {
    ParserRunConfig ceiling;
    ParserRunConfig probe;
    double dev_fraction = 0.2;
};

ProbeExperimentConfig probe_experiment_from_json(const nlohmann::json& j);
nlohmann::json probe_experiment_to_json(const ProbeExperimentConfig& c);

/// Splits the corpus deterministically, then trains ceiling and probe
/// parsers on trees (when every record has one) and on graphs (when any
/// record has edges).
ProbeReport run_probe_experiment(const Corpus& corpus, const ProbeExperimentConfig& cfg,
                                 std::uint64_t seed, bool include_tops, int threads = 1);

nlohmann::json probe_report_to_json(const ProbeReport& r);
/// Aligned table: target, metric, ceiling, probe, absolute and relative delta.
std::string format_probe_table(const ProbeReport& r);

// --- data utilities --------------------------------------------------------

/// floor(n · fraction) indices drawn uniformly without replacement,
/// ascending. Throws ValidationError unless 0 < fraction <= 1 and the
/// result is non-empty.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);
TaskDataset subsample(const TaskDataset& data, double fraction, std::uint64_t seed);

/// Deterministic split: a seeded permutation, the last dev_fraction to dev.
std::pair<Corpus, Corpus> split_corpus(const Corpus& c, double dev_fraction, std::uint64_t seed);

struct ParameterCount {
    std::size_t total = 0;
    std::map<std::string, std::size_t> by_component;
};

/// Symbolic count from the configuration dimensions.
ParameterCount count_parameters(const RunConfig& run, const TaskSchema& schema, int num_labels,
                                int embedding_dim);

} // namespace sift
