#include "sift/training.h"

#include "sift/backbone.h"
#include "sift/decoders.h"
#include "sift/error.h"
#include "sift/random.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace sift {

using num::Matrix;
using num::Var;

namespace {

/// Runs body(i) for i in [0, n) on up to `threads` workers. The first
/// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body)
{
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

/// Sums per-example gradients in example order into store order.
class GradientSum {
  public:
    explicit GradientSum(num::ParameterStore& store) : store_{store}
    {
        for (std::size_t i = 0; i < store.size(); ++i)
            index_.emplace(&store[i], i);
        sums_.resize(store.size());
    }

    void add(const num::ParameterGradients& grads)
    {
        for (const auto& [p, g] : grads) {
            Matrix& s = sums_[index_.at(p)];
            if (s.size() == 0)
                s = g;
            else
                s += g;
        }
    }

    num::ParameterGradients mean(double count)
    {
        num::ParameterGradients out;
        for (std::size_t i = 0; i < sums_.size(); ++i)
            if (sums_[i].size() != 0)
                out.emplace_back(&store_[i], sums_[i] / count);
        return out;
    }

    void clear()
    {
        for (auto& s : sums_)
            s.resize(0, 0);
    }

  private:
    num::ParameterStore& store_;
    std::unordered_map<const num::Parameter*, std::size_t> index_;
    std::vector<Matrix> sums_;
};

struct ExampleGrad {
    double loss = 0.0;
    num::ParameterGradients grads;
};

/// One optimizer step per effective batch over `order`. compute(i) returns
/// the loss and gradients for example i.
double run_epoch(num::ParameterStore& store, const std::vector<std::size_t>& order,
                 const OptimizerConfig& oc, AdamState& state, long& step, long total_steps,
                 int threads, const std::function<ExampleGrad(std::size_t)>& compute)
{
    GradientSum sum(store);
    double loss_total = 0.0;
    const std::size_t batch = static_cast<std::size_t>(oc.batch_size);
    const std::size_t micro = oc.micro_batch > 0 ? static_cast<std::size_t>(oc.micro_batch) : batch;
    for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t end = std::min(order.size(), start + batch);
        sum.clear();
        for (std::size_t m0 = start; m0 < end; m0 += micro) {
            const std::size_t m1 = std::min(end, m0 + micro);
            std::vector<ExampleGrad> results(m1 - m0);
            parallel_for(results.size(), threads,
                         [&](std::size_t i) { results[i] = compute(order[m0 + i]); });
            for (const auto& r : results) {
                loss_total += r.loss;
                sum.add(r.grads);
            }
        }
        adamw_step(sum.mean(static_cast<double>(end - start)), state, oc, step, total_steps);
        ++step;
    }
    return order.empty() ? 0.0 : loss_total / static_cast<double>(order.size());
}

void shuffle(std::vector<std::size_t>& v, std::uint64_t seed)
{
    Rng rng(seed);
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
}

long steps_per_epoch(std::size_t n, int batch)
{
    return static_cast<long>((n + static_cast<std::size_t>(batch) - 1) / static_cast<std::size_t>(batch));
}

} // namespace

nlohmann::json epoch_log_to_json(const EpochLog& e)
{
    nlohmann::json j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}};
    if (e.train)
        j["train"] = report_to_json(*e.train);
    if (e.dev)
        j["dev"] = report_to_json(*e.dev);
    return j;
}

Predictions predict(DownstreamModel& model, const std::vector<PreparedExample>& data, int threads)
{
    Predictions p;
    p.values.resize(data.size());
    std::vector<double> losses(data.size());
    parallel_for(data.size(), threads, [&](std::size_t i) {
        num::Tape tape;
        const ForwardResult r = model.forward(tape, data[i]);
        p.values[i] = model.predict(r.output.value());
        losses[i] = r.loss.scalar();
    });
    double total = 0.0;
    for (double l : losses)
        total += l;
    p.mean_loss = data.empty() ? 0.0 : total / static_cast<double>(data.size());
    return p;
}

EvalReport evaluate(DownstreamModel& model, const std::vector<PreparedExample>& data, int threads)
{
    const Predictions p = predict(model, data, threads);
    EvalReport r;
    r.loss = p.mean_loss;
    if (model.schema().type == TaskType::regression) {
        std::vector<double> gold;
        double se = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            gold.push_back(data[i].target);
            se += (p.values[i] - data[i].target) * (p.values[i] - data[i].target);
        }
        r.mse = data.empty() ? 0.0 : se / static_cast<double>(data.size());
        if (data.size() >= 2)
            r.pearson = pearson(p.values, gold);
        return r;
    }
    std::vector<int> pred, gold;
    std::vector<std::string> cats;
    for (std::size_t i = 0; i < data.size(); ++i) {
        pred.push_back(static_cast<int>(p.values[i]));
        gold.push_back(data[i].label);
        cats.push_back(data[i].category);
    }
    const CategoryAccuracy ca = accuracy_by_category(cats, pred, gold);
    r.accuracy = ca.overall;
    r.r_k = r_k_correlation(pred, gold, model.schema().num_classes());
    r.per_category = ca.per_category;
    r.category_counts = ca.counts;
    return r;
}

TrainResult train_downstream(const TaskDataset& train, const TaskDataset* dev, const RunConfig& run,
                             std::uint64_t seed, const TrainOptions& opt)
{
    validate_optimizer_config(run.optimizer);
    if (train.examples.empty())
        throw ValidationError("training set is empty");
    const bool need_graph = uses_graphs(run.mode) &&
                            !(run.mode == RunMode::scaffold && opt.scaffold_corpus);
    const auto data = prepare_examples(train, need_graph);
    std::vector<PreparedExample> dev_data;
    if (dev) {
        if (!(dev->schema == train.schema))
            throw ValidationError("dev schema differs from the training schema");
        if (!(dev->relations == train.relations))
            throw ValidationError("dev relation labels differ from the training labels");
        dev_data = prepare_examples(*dev, need_graph);
    }
    if (run.mode == RunMode::scaffold && opt.scaffold_corpus && opt.scaffold_corpus->empty())
        throw ValidationError("scaffold corpus is empty");

    TrainResult result{DownstreamModel(run, train.schema, train.relations,
                                       static_cast<int>(data.front().a.pieces.cols()), seed),
                       {}, 0};
    DownstreamModel& model = result.model;
    const OptimizerConfig& oc = run.optimizer;
    const long total = steps_per_epoch(data.size(), oc.batch_size) * oc.epochs;
    AdamState state;
    long step = 0;
    std::vector<std::size_t> order(data.size());
    double best = -std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= oc.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        shuffle(order, derive_seed(seed, "shuffle:" + std::to_string(epoch)));
        const std::uint64_t dropout_seed = derive_seed(seed, "dropout:" + std::to_string(epoch));
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = run_epoch(model.params(), order, oc, state, step, total, opt.threads,
                                   [&](std::size_t i) {
                                       num::Tape tape;
                                       ForwardOptions fo{true, derive_seed(dropout_seed, i), nullptr};
                                       if (opt.scaffold_corpus)
                                           fo.scaffold_side =
                                               &(*opt.scaffold_corpus)[i % opt.scaffold_corpus->size()];
                                       const ForwardResult r = model.forward(tape, data[i], fo);
                                       tape.backward(r.loss);
                                       return ExampleGrad{r.loss.scalar(), tape.parameter_gradients()};
                                   });
        if (opt.eval_train)
            log.train = evaluate(model, data, opt.threads);
        if (dev) {
            log.dev = evaluate(model, dev_data, opt.threads);
            const double score = log.dev->accuracy ? *log.dev->accuracy
                                                   : log.dev->pearson.value_or(-*log.dev->mse);
            if (score > best) {
                best = score;
                result.best_epoch = epoch;
            }
        }
        if (opt.on_epoch)
            opt.on_epoch(epoch_log_to_json(log));
        result.epochs.push_back(log);
        if (opt.stop_at_perfect_train && log.train && log.train->accuracy && *log.train->accuracy == 1.0)
            break;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Parsers

nlohmann::json parser_run_to_json(const ParserRunConfig& c)
{
    return {{"parser", parser_config_to_json(c.parser)},
            {"backbone", c.backbone},
            {"backbone_dim", c.backbone_dim},
            {"max_positions", c.max_positions},
            {"optimizer", optimizer_config_to_json(c.optimizer)}};
}

ParserRunConfig parser_run_from_json(const nlohmann::json& j, ParserRunConfig c)
{
    try {
        if (j.contains("parser"))
            c.parser = parser_config_from_json(j.at("parser"));
        c.backbone = j.value("backbone", c.backbone);
        c.backbone_dim = j.value("backbone_dim", c.backbone_dim);
        c.max_positions = j.value("max_positions", c.max_positions);
        if (j.contains("optimizer"))
            c.optimizer = optimizer_config_from_json(j.at("optimizer"), c.optimizer);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("parser config: ") + e.what());
    }
    if (c.backbone != "context" && c.backbone != "none")
        throw ValidationError("parser config: backbone must be context or none");
    if (c.backbone_dim < 1 || c.max_positions < 1)
        throw ValidationError("parser config: backbone_dim and max_positions must be positive");
    return c;
}

namespace {

struct ParseItem {
    Matrix tokens;          // n × embedding_dim
    SemanticGraph gold;     // score indexing
    DependencyTree tree;    // trees
};

RelationVocab tree_labels(const Corpus& a, const Corpus& b)
{
    RelationVocab v;
    for (const Corpus* c : {&a, &b})
        for (const auto& r : c->records)
            if (r.tree)
                for (const auto& l : r.tree->labels)
                    v.add(l);
    return v;
}

std::vector<ParseItem> prepare_parse_items(const Corpus& corpus, const RelationVocab& labels,
                                           ParseTarget target)
{
    std::vector<ParseItem> items;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const CorpusRecord& r = corpus.records[i];
        const std::string where = "record " + std::to_string(i) + ": ";
        if (!r.embedding)
            throw ValidationError(where + "no embedding");
        const TokenAlignment align = align_tokens(r.sentence, r.embedding->wordpieces());
        ParseItem it;
        it.tokens = averaging_matrix(align, static_cast<int>(r.embedding->vectors.rows())) *
                    r.embedding->vectors;
        if (target == ParseTarget::tree) {
            if (!r.tree)
                throw ValidationError(where + "no dependency tree");
            if (r.tree->heads.size() != r.sentence.tokens.size())
                throw ValidationError(where + "tree size differs from token count");
            RelationVocab v = labels;
            it.gold = tree_to_graph(*r.tree, v);
            it.tree = *r.tree;
        } else {
            it.gold = r.graph;
        }
        items.push_back(std::move(it));
    }
    return items;
}

void add_parser_model(num::ParameterStore& store, const ParserRunConfig& cfg, int embedding_dim,
                      int num_labels, std::uint64_t seed)
{
    int state_dim = embedding_dim;
    if (cfg.backbone == "context") {
        add_context_backbone_params(store, "backbone", embedding_dim, cfg.backbone_dim,
                                    cfg.max_positions, derive_seed(seed, "backbone"));
        state_dim = cfg.backbone_dim;
    }
    add_parser_params(store, "parser", cfg.parser, state_dim, num_labels, derive_seed(seed, "parser"));
}

ParseScoreVars parser_forward(num::Tape& tape, num::ParameterStore& store, const ParserRunConfig& cfg,
                              const Matrix& tokens)
{
    Var states = tape.constant(tokens);
    if (cfg.backbone == "context")
        states = context_backbone(states, num::Bind{tape, store, cfg.parser.backbone_frozen()},
                                  "backbone");
    return score(states, cfg.parser, num::Bind{tape, store, false}, "parser");
}

} // namespace

ParserResult train_parser(const Corpus& train, const Corpus& dev, const ParserRunConfig& cfg,
                          std::uint64_t seed, int threads)
{
    validate_optimizer_config(cfg.optimizer);
    if (train.records.empty())
        throw ValidationError("parser training corpus is empty");
    ParserResult result;
    result.labels = cfg.parser.target == ParseTarget::tree ? tree_labels(train, dev) : train.relations;
    if (result.labels.size() == 0)
        throw ValidationError("parser corpus has no labels");
    const auto items = prepare_parse_items(train, result.labels, cfg.parser.target);
    const int dim = static_cast<int>(items.front().tokens.cols());
    add_parser_model(result.params, cfg, dim, result.labels.size(), seed);

    const OptimizerConfig& oc = cfg.optimizer;
    const long total = steps_per_epoch(items.size(), oc.batch_size) * oc.epochs;
    AdamState state;
    long step = 0;
    std::vector<std::size_t> order(items.size());
    for (int epoch = 1; epoch <= oc.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        shuffle(order, derive_seed(seed, "parser-shuffle:" + std::to_string(epoch)));
        result.epoch_losses.push_back(run_epoch(
            result.params, order, oc, state, step, total, threads, [&](std::size_t i) {
                num::Tape tape;
                const ParseScoreVars s = parser_forward(tape, result.params, cfg, items[i].tokens);
                Var loss = parsing_loss(s, items[i].gold, cfg.parser);
                tape.backward(loss);
                return ExampleGrad{loss.scalar(), tape.parameter_gradients()};
            }));
    }
    if (!dev.records.empty())
        result.dev = evaluate_parser(result.params, result.labels, dev, cfg, threads);
    return result;
}

EvalReport evaluate_parser(num::ParameterStore& params, const RelationVocab& labels,
                           const Corpus& data, const ParserRunConfig& cfg, int threads)
{
    const auto items = prepare_parse_items(data, labels, cfg.parser.target);
    EvalReport r;
    if (cfg.parser.target == ParseTarget::tree) {
        std::vector<DependencyTree> pred(items.size()), gold(items.size());
        parallel_for(items.size(), threads, [&](std::size_t i) {
            num::Tape tape;
            const ParseScores s = values(parser_forward(tape, params, cfg, items[i].tokens));
            const DecodedTree t = assign_labels(chu_liu_edmonds(s.arc), s.labels);
            pred[i].heads = t.heads;
            for (int l : t.labels)
                pred[i].labels.push_back(labels.name(l));
            gold[i] = items[i].tree;
        });
        r.las = las(pred, gold);
        r.uas = uas(pred, gold);
        r.lem = exact_match(pred, gold, true);
        r.uem = exact_match(pred, gold, false);
    } else {
        std::vector<SemanticGraph> pred(items.size()), gold(items.size());
        parallel_for(items.size(), threads, [&](std::size_t i) {
            num::Tape tape;
            const ParseScores s = values(parser_forward(tape, params, cfg, items[i].tokens));
            pred[i] = greedy_graph_decode(s.arc, s.labels, 0.0, s.tops);
            gold[i] = items[i].gold;
        });
        const bool tops = cfg.parser.include_tops;
        r.labeled_f1 = labeled_f1(pred, gold, tops);
        r.lem = exact_match(pred, gold, true, tops);
        r.uem = exact_match(pred, gold, false, tops);
    }
    return r;
}

ProbeExperimentConfig probe_experiment_from_json(const nlohmann::json& j)
{
    ProbeExperimentConfig c;
    c.probe.parser.mode = ParserMode::probe;
    const nlohmann::json empty = nlohmann::json::object();
    const nlohmann::json& shared = j.contains("parser") ? j.at("parser") : empty;
    c.ceiling = parser_run_from_json(shared, c.ceiling);
    c.probe = parser_run_from_json(shared, c.probe);
    if (j.contains("ceiling"))
        c.ceiling = parser_run_from_json(j.at("ceiling"), c.ceiling);
    if (j.contains("probe"))
        c.probe = parser_run_from_json(j.at("probe"), c.probe);
    c.ceiling.parser.mode = ParserMode::ceiling;
    c.probe.parser.mode = ParserMode::probe;
    c.dev_fraction = j.value("dev_fraction", c.dev_fraction);
    if (!(c.dev_fraction > 0.0 && c.dev_fraction < 1.0))
        throw ValidationError("probe config: dev_fraction must lie in (0, 1)");
    return c;
}

nlohmann::json probe_experiment_to_json(const ProbeExperimentConfig& c)
{
    return {{"ceiling", parser_run_to_json(c.ceiling)},
            {"probe", parser_run_to_json(c.probe)},
            {"dev_fraction", c.dev_fraction}};
}

ProbeReport run_probe_experiment(const Corpus& corpus, const ProbeExperimentConfig& cfg,
                                 std::uint64_t seed, bool include_tops, int threads)
{
    auto [train, dev] = split_corpus(corpus, cfg.dev_fraction, derive_seed(seed, "split"));
    ProbeReport report;
    report.train_size = train.records.size();
    report.dev_size = dev.records.size();
    const bool trees = std::all_of(corpus.records.begin(), corpus.records.end(),
                                   [](const CorpusRecord& r) { return r.tree.has_value(); });
    const bool graphs = std::any_of(corpus.records.begin(), corpus.records.end(),
                                    [](const CorpusRecord& r) { return !r.graph.edges.empty(); });
    if (!trees && !graphs)
        throw ValidationError("probe: corpus has neither trees nor graph edges");
    auto run = [&](ParseTarget target) {
        ParserRunConfig c = cfg.ceiling, p = cfg.probe;
        c.parser.target = p.parser.target = target;
        c.parser.include_tops = p.parser.include_tops = include_tops && target == ParseTarget::graph;
        const EvalReport rc = train_parser(train, dev, c, seed, threads).dev;
        const EvalReport rp = train_parser(train, dev, p, seed, threads).dev;
        const std::string name = target == ParseTarget::tree ? "tree" : "graph";
        auto row = [&](const std::string& metric, double vc, double vp) {
            vc *= 100.0;
            vp *= 100.0;
            // A zero ceiling leaves the relative delta undefined.
            const Delta d = vc == 0.0 ? Delta{vp, std::numeric_limits<double>::quiet_NaN()} : probe_delta(vp, vc);
            report.rows.push_back({name, metric, vc, vp, d});
        };
        if (target == ParseTarget::tree)
            row("LAS", *rc.las, *rp.las);
        else
            row("labeled F1", rc.labeled_f1->f1, rp.labeled_f1->f1);
        row("LEM", *rc.lem, *rp.lem);
        row("UEM", *rc.uem, *rp.uem);
    };
    if (trees)
        run(ParseTarget::tree);
    if (graphs)
        run(ParseTarget::graph);
    return report;
}

nlohmann::json probe_report_to_json(const ProbeReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"target", row.target},
                        {"metric", row.metric},
                        {"ceiling", row.ceiling},
                        {"probe", row.probe},
                        {"absolute", row.delta.absolute},
                        {"relative", std::isnan(row.delta.relative) ? nlohmann::json(nullptr)
                                                                    : nlohmann::json(row.delta.relative)}});
    return {{"train_size", r.train_size}, {"dev_size", r.dev_size}, {"rows", rows}};
}

std::string format_probe_table(const ProbeReport& r)
{
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-11s %8s %8s %8s %9s\n", "target", "metric", "ceiling",
                  "probe", "abs", "rel");
    os << line;
    for (const auto& row : r.rows) {
        char rel[32] = "n/a";
        if (!std::isnan(row.delta.relative))
            std::snprintf(rel, sizeof rel, "%+.1f%%", 100.0 * row.delta.relative);
        std::snprintf(line, sizeof line, "%-6s %-11s %8.1f %8.1f %+8.1f %9s\n", row.target.c_str(),
                      row.metric.c_str(), row.ceiling, row.probe, row.delta.absolute, rel);
        os << line;
    }
    os << "train " << r.train_size << ", dev " << r.dev_size << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Data utilities

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ValidationError("subsample: fraction must lie in (0, 1]");
    // The guard keeps products like 0.29 · 100 from flooring to 28.
    const auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
    if (k == 0)
        throw ValidationError("subsample: result would be empty");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    Rng rng(derive_seed(seed, "subsample"));
    for (std::size_t i = 0; i < k; ++i)
        std::swap(idx[i], idx[i + static_cast<std::size_t>(rng.below(n - i))]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

TaskDataset subsample(const TaskDataset& data, double fraction, std::uint64_t seed)
{
    TaskDataset out;
    out.schema = data.schema;
    out.relations = data.relations;
    for (std::size_t i : subsample_indices(data.examples.size(), fraction, seed))
        out.examples.push_back(data.examples[i]);
    return out;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& c, double dev_fraction, std::uint64_t seed)
{
    const std::size_t n = c.records.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    shuffle(order, seed);
    auto n_dev = static_cast<std::size_t>(std::floor(static_cast<double>(n) * dev_fraction));
    if (n >= 2)
        n_dev = std::clamp<std::size_t>(n_dev, 1, n - 1);
    Corpus train{c.relations, {}}, dev{c.relations, {}};
    for (std::size_t i = 0; i < n; ++i)
        (i < n - n_dev ? train : dev).records.push_back(c.records[order[i]]);
    return {std::move(train), std::move(dev)};
}

ParameterCount count_parameters(const RunConfig& run, const TaskSchema& schema, int num_labels,
                                int embedding_dim)
{
    using S = std::size_t;
    ParameterCount pc;
    const S d = static_cast<S>(embedding_dim);
    const S out = static_cast<S>(schema.output_dim());
    const S summary = schema.pair && run.pair_summary == "both" ? 2 * d : d;
    const int relations = 2 * num_labels;
    pc.by_component["adapter"] = d * d + d;
    const RunMode m = run.mode;
    if (m == RunMode::baseline || m == RunMode::sift_light || m == RunMode::scaffold)
        pc.by_component["head"] = out * summary + out;
    if (m == RunMode::sift || m == RunMode::sift_light || m == RunMode::gcn || m == RunMode::gat) {
        const EncoderVariant v = run.variant();
        const S h = static_cast<S>(run.encoder.hidden_dim);
        pc.by_component["enc"] =
            h * d + static_cast<S>(run.encoder.num_layers) *
                        layer_parameter_count(v, run.encoder.hidden_dim, run.encoder.num_bases, relations);
        S pool = h;
        if (schema.pair) {
            if (run.ablations.attention)
                pc.by_component["pair"] = h * h + 2 * h + 1 + 4 * h * h;
            pc.by_component["compose"] =
                static_cast<S>(run.composition()) *
                layer_parameter_count(v, run.encoder.hidden_dim, run.encoder.num_bases, relations);
            pool = 2 * h;
        }
        if (run.ablations.concat)
            pool += summary;
        pc.by_component["pool"] = 2 * pool;
        pc.by_component["graph_head"] = out * pool + out;
    }
    if (m == RunMode::scaffold) {
        const ParserConfig& p = run.scaffold_parser;
        const S L = static_cast<S>(std::max(1, num_labels));
        const bool mlp = p.mode == ParserMode::ceiling;
        const S ka = mlp ? static_cast<S>(p.arc_mlp_dim) : d;
        const S kl = mlp ? static_cast<S>(p.label_mlp_dim) : d;
        S n = ka * ka + ka + 1 + kl * L * kl + L * 2 * kl + L;
        if (mlp)
            n += 2 * (ka * d + ka) + 2 * (kl * d + kl);
        if (p.include_tops)
            n += d + 1;
        pc.by_component["scaffold"] = n;
    }
    for (const auto& [_, n] : pc.by_component)
        pc.total += n;
    return pc;
}

} // namespace sift
