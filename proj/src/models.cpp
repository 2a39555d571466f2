#include "sift/models.h"

#include "sift/backbone.h"
#include "sift/error.h"
#include "sift/pair_attention.h"
#include "sift/random.h"

namespace sift {

using num::Matrix;
using num::Var;

std::string mode_name(RunMode m)
{
    switch (m) {
    case RunMode::baseline: return "baseline";
    case RunMode::sift: return "sift";
    case RunMode::sift_light: return "sift_light";
    case RunMode::scaffold: return "scaffold";
    case RunMode::gcn: return "gcn";
    case RunMode::gat: return "gat";
    }
    return "sift";
}

RunMode parse_mode(const std::string& name)
{
    for (RunMode m : {RunMode::baseline, RunMode::sift, RunMode::sift_light, RunMode::scaffold,
                      RunMode::gcn, RunMode::gat})
        if (mode_name(m) == name)
            return m;
    throw ValidationError("unknown mode '" + name +
                          "' (expected baseline, sift, sift_light, scaffold, gcn or gat)");
}

bool uses_graphs(RunMode m)
{
    return m != RunMode::baseline;
}

EncoderVariant RunConfig::variant() const
{
    if (mode == RunMode::gcn)
        return EncoderVariant::gcn;
    if (mode == RunMode::gat)
        return EncoderVariant::gat;
    return encoder.variant;
}

nlohmann::json run_config_to_json(const RunConfig& c)
{
    return {{"mode", mode_name(c.mode)},
            {"encoder", encoder_config_to_json(c.encoder)},
            {"composition_layers", c.composition()},
            {"ablations", {{"attention", c.ablations.attention}, {"concat", c.ablations.concat}}},
            {"pair_summary", c.pair_summary},
            {"train_adapter", c.train_adapter},
            {"head_dropout", c.head_dropout},
            {"graph_loss_weight", c.graph_loss_weight},
            {"main_loss_weight", c.main_loss_weight},
            {"scaffold_weight", c.scaffold_weight},
            {"scaffold_parser", parser_config_to_json(c.scaffold_parser)},
            {"seeds", c.seeds},
            {"optimizer", optimizer_config_to_json(c.optimizer)}};
}

RunConfig run_config_from_json(const nlohmann::json& j)
{
    static const std::vector<std::string> known = {
        "mode", "encoder", "composition_layers", "ablations", "pair_summary", "train_adapter",
        "head_dropout", "graph_loss_weight", "main_loss_weight", "scaffold_weight",
        "scaffold_parser", "seeds", "optimizer", "grammar", "sentences", "dev_sentences"};
    if (!j.is_object())
        throw ValidationError("run config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError("run config: unknown field '" + key + "'");
    RunConfig c;
    try {
        if (j.contains("mode"))
            c.mode = parse_mode(j.at("mode").get<std::string>());
        if (j.contains("encoder"))
            c.encoder = encoder_config_from_json(j.at("encoder"));
        c.composition_layers = j.value("composition_layers", c.composition_layers);
        if (j.contains("ablations")) {
            c.ablations.attention = j.at("ablations").value("attention", true);
            c.ablations.concat = j.at("ablations").value("concat", true);
        }
        c.pair_summary = j.value("pair_summary", c.pair_summary);
        if (c.pair_summary != "both" && c.pair_summary != "first")
            throw ValidationError("run config: pair_summary must be both or first");
        c.train_adapter = j.value("train_adapter", c.train_adapter);
        c.head_dropout = j.value("head_dropout", c.head_dropout);
        c.graph_loss_weight = j.value("graph_loss_weight", c.graph_loss_weight);
        c.main_loss_weight = j.value("main_loss_weight", c.main_loss_weight);
        c.scaffold_weight = j.value("scaffold_weight", c.scaffold_weight);
        if (j.contains("scaffold_parser")) {
            c.scaffold_parser = parser_config_from_json(j.at("scaffold_parser"));
            c.scaffold_parser.target = ParseTarget::graph;
        }
        c.seeds = j.value("seeds", c.seeds);
        if (j.contains("optimizer"))
            c.optimizer = optimizer_config_from_json(j.at("optimizer"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("run config: ") + e.what());
    }
    if (c.seeds.empty())
        throw ValidationError("run config: seeds must not be empty");
    if (!(c.head_dropout >= 0.0 && c.head_dropout < 1.0))
        throw ValidationError("run config: head_dropout must lie in [0, 1)");
    return c;
}

PreparedSide prepare_side(const TaskSide& side, const RelationVocab& vocab, bool need_graph)
{
    if (!side.embedding)
        throw ValidationError("sentence '" + side.sentence.text + "' has no embedding");
    PreparedSide p;
    p.pieces = side.embedding->vectors;
    p.summary = side.embedding->pooled;
    p.align = align_tokens(side.sentence, side.embedding->wordpieces());
    if (side.graph) {
        if (side.graph->num_nodes != static_cast<int>(side.sentence.tokens.size()))
            throw ValidationError("graph node count differs from token count for '" +
                                  side.sentence.text + "'");
        p.graph = augment_with_inverse_relations(*side.graph, vocab);
    } else if (need_graph) {
        throw ValidationError("missing graph for '" + side.sentence.text + "'");
    }
    return p;
}

std::vector<PreparedExample> prepare_examples(const TaskDataset& data, bool need_graph)
{
    std::vector<PreparedExample> out;
    out.reserve(data.examples.size());
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        const TaskExample& ex = data.examples[i];
        PreparedExample p;
        try {
            p.a = prepare_side(ex.a, data.relations, need_graph);
            if (ex.b)
                p.b = prepare_side(*ex.b, data.relations, need_graph);
        } catch (const ValidationError& e) {
            throw ValidationError("example " + std::to_string(i) + ": " + e.what());
        }
        if (data.schema.pair && !p.b)
            throw ValidationError("example " + std::to_string(i) + ": missing sentence_b");
        p.label = ex.label;
        p.target = ex.target;
        p.category = ex.category;
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

bool has_graph_head(RunMode m)
{
    return m == RunMode::sift || m == RunMode::sift_light || m == RunMode::gcn ||
           m == RunMode::gat;
}

bool has_main_head(RunMode m)
{
    return m == RunMode::baseline || m == RunMode::sift_light || m == RunMode::scaffold;
}

} // namespace

DownstreamModel::DownstreamModel(const RunConfig& run, const TaskSchema& schema,
                                 const RelationVocab& relations, int embedding_dim,
                                 std::uint64_t seed)
    : run_{run}, schema_{schema}, relations_{relations}, embedding_dim_{embedding_dim}
{
    if (embedding_dim <= 0)
        throw ValidationError("embedding dimension must be positive");
    if (schema.output_dim() < 1 ||
        (schema.type == TaskType::classification && schema.num_classes() < 2))
        throw ValidationError("classification tasks need at least two labels");
    const std::uint64_t s = derive_seed(seed, "params");
    const int out = schema.output_dim();
    add_adapter_params(params_, "adapter", embedding_dim);
    if (has_main_head(run.mode)) {
        params_.add_glorot("head.W", out, summary_dim(), s);
        params_.add_zeros("head.b", 1, out);
    }
    if (has_graph_head(run.mode)) {
        EncoderConfig enc = run.encoder;
        enc.variant = run.variant();
        const int r = relations.augmented_size();
        if (r == 0 && enc.variant == EncoderVariant::rgcn)
            throw ValidationError("rgcn encoder needs at least one relation label");
        add_encoder_params(params_, "enc", enc, embedding_dim, r, s);
        const int h = enc.hidden_dim;
        int pool = h;
        if (schema.pair) {
            if (run.ablations.attention)
                add_pair_attention_params(params_, "pair", h, s);
            for (int l = 0; l < run.composition(); ++l)
                add_layer_params(params_, "compose.layer" + std::to_string(l), enc.variant, h,
                                 enc.num_bases, r, s);
            pool = 2 * h;
        }
        if (run.ablations.concat)
            pool += summary_dim();
        add_pooling_params(params_, "pool", pool);
        params_.add_glorot("graph_head.W", out, pool, s);
        params_.add_zeros("graph_head.b", 1, out);
    }
    if (run.mode == RunMode::scaffold) {
        ParserConfig pc = run.scaffold_parser;
        pc.target = ParseTarget::graph;
        add_parser_params(params_, "scaffold", pc, embedding_dim, std::max(1, relations.size()), s);
    }
}

int DownstreamModel::summary_dim() const
{
    return schema_.pair && run_.pair_summary == "both" ? 2 * embedding_dim_ : embedding_dim_;
}

Var DownstreamModel::pieces(num::Tape& tape, const PreparedSide& s, const num::Bind& bind)
{
    if (s.pieces.cols() != embedding_dim_)
        throw ValidationError("embedding width " + std::to_string(s.pieces.cols()) +
                              " differs from the model's " + std::to_string(embedding_dim_));
    const num::Bind adapter{tape, params_, bind.frozen || !run_.train_adapter};
    return apply_adapter(tape.constant(s.pieces), adapter, "adapter");
}

Var DownstreamModel::summary(num::Tape& tape, const PreparedExample& ex, const num::Bind& bind)
{
    const num::Bind adapter{tape, params_, bind.frozen || !run_.train_adapter};
    auto one = [&](const PreparedSide& s) {
        if (s.summary.cols() != embedding_dim_)
            throw ValidationError("summary width differs from the model's embedding width");
        return apply_adapter(tape.constant(s.summary), adapter, "adapter");
    };
    Var sa = one(ex.a);
    if (schema_.pair && run_.pair_summary == "both") {
        if (!ex.b)
            throw ValidationError("pair task example without sentence_b");
        return num::concat_cols({sa, one(*ex.b)});
    }
    return sa;
}

Var DownstreamModel::graph_features(num::Tape& tape, const PreparedExample& ex, Var summary,
                                    const num::Bind& bind, const ForwardOptions& opt)
{
    EncoderConfig enc = run_.encoder;
    enc.variant = run_.variant();
    auto side = [&](const PreparedSide& s, const char* tag) {
        if (!s.graph)
            throw ValidationError("missing graph in a graph mode");
        EncodeOptions eo{opt.train, derive_seed(opt.dropout_seed, tag)};
        return encode(*s.graph, pieces(tape, s, bind), s.align, enc, bind, "enc", eo);
    };
    Var gain = bind("pool.gain"), offset = bind("pool.offset");
    Var pooled_summary = run_.ablations.concat ? summary : Var{};
    if (!schema_.pair)
        return pool_single(side(ex.a, "a"), pooled_summary, gain, offset);
    if (!ex.b)
        throw ValidationError("pair task example without sentence_b");
    Var ha = side(ex.a, "a");
    Var hb = side(*ex.b, "b");
    if (run_.ablations.attention)
        std::tie(ha, hb) = cross_graph_update(ha, hb, bind_pair_attention(bind, "pair"));
    std::tie(ha, hb) = compose_after_attention(*ex.a.graph, ha, *ex.b->graph, hb, enc.variant,
                                               run_.composition(), bind, "compose");
    return pool_pair(ha, hb, pooled_summary, gain, offset);
}

Var DownstreamModel::task_loss(Var output, const PreparedExample& ex)
{
    if (schema_.type == TaskType::regression) {
        return num::mean_squared_error(output, Matrix::Constant(1, 1, ex.target));
    }
    if (ex.label < 0 || ex.label >= schema_.num_classes())
        throw ValidationError("label index outside the declared label set");
    const int target[] = {ex.label};
    return num::cross_entropy(output, target);
}

Var DownstreamModel::scaffold_loss(num::Tape& tape, const PreparedSide& side, const num::Bind& bind)
{
    if (!side.graph)
        throw ValidationError("scaffold mode needs graphs for the parsing objective");
    ParserConfig pc = run_.scaffold_parser;
    pc.target = ParseTarget::graph;
    Var tokens = num::matmul(tape.constant(averaging_matrix(side.align, static_cast<int>(side.pieces.rows()))),
                             pieces(tape, side, bind));
    const ParseScoreVars s = score(tokens, pc, bind, "scaffold");
    return parsing_loss(s, side.graph->base(), pc);
}

ForwardResult DownstreamModel::forward(num::Tape& tape, const PreparedExample& ex,
                                       const ForwardOptions& opt)
{
    const num::Bind bind{tape, params_, false};
    ForwardResult r;
    Var summ = summary(tape, ex, bind);
    auto head = [&](const char* prefix, Var features, const char* tag) {
        features = num::dropout(features, run_.head_dropout, opt.train,
                                derive_seed(opt.dropout_seed, tag));
        return num::linear(features, bind(std::string(prefix) + ".W"),
                           bind(std::string(prefix) + ".b"));
    };
    switch (run_.mode) {
    case RunMode::baseline:
        r.output = head("head", summ, "head");
        r.main_loss = task_loss(r.output, ex);
        r.loss = r.main_loss;
        break;
    case RunMode::sift:
    case RunMode::gcn:
    case RunMode::gat:
        r.output = head("graph_head", graph_features(tape, ex, summ, bind, opt), "graph_head");
        r.graph_loss = task_loss(r.output, ex);
        r.loss = r.graph_loss;
        break;
    case RunMode::sift_light: {
        r.output = head("head", summ, "head");
        r.main_loss = task_loss(r.output, ex);
        if (opt.train) {
            Var g = head("graph_head", graph_features(tape, ex, summ, bind, opt), "graph_head");
            r.graph_loss = task_loss(g, ex);
            r.loss = num::add(num::scale(r.graph_loss, run_.graph_loss_weight),
                              num::scale(r.main_loss, run_.main_loss_weight));
        } else {
            r.loss = r.main_loss;
        }
        break;
    }
    case RunMode::scaffold: {
        r.output = head("head", summ, "head");
        r.main_loss = task_loss(r.output, ex);
        r.loss = r.main_loss;
        if (opt.train) {
            if (opt.scaffold_side) {
                r.aux_loss = scaffold_loss(tape, *opt.scaffold_side, bind);
            } else {
                r.aux_loss = scaffold_loss(tape, ex.a, bind);
                if (ex.b)
                    r.aux_loss = num::scale(num::add(r.aux_loss, scaffold_loss(tape, *ex.b, bind)), 0.5);
            }
            r.loss = num::add(num::scale(r.main_loss, run_.main_loss_weight),
                              num::scale(r.aux_loss, run_.scaffold_weight));
        }
        break;
    }
    }
    return r;
}

double DownstreamModel::predict(const Matrix& output) const
{
    if (schema_.type == TaskType::regression)
        return output(0, 0);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < output.cols(); ++k)
        if (output(0, k) > output(0, best))
            best = k;
    return static_cast<double>(best);
}

nlohmann::json DownstreamModel::header() const
{
    return {{"kind", "downstream"},
            {"run_config", run_config_to_json(run_)},
            {"schema", format_schema_directive(schema_)},
            {"relations", relations_.labels()},
            {"embedding_dim", embedding_dim_},
            {"num_classes", schema_.output_dim()}};
}

DownstreamModel DownstreamModel::from_checkpoint(const nlohmann::json& header,
                                                 num::ParameterStore params)
{
    if (header.value("kind", "") != "downstream")
        throw ValidationError("checkpoint does not hold a downstream model");
    DownstreamModel m(run_config_from_json(header.at("run_config")),
                      parse_schema_directive(header.at("schema").get<std::string>()),
                      RelationVocab(header.at("relations").get<std::vector<std::string>>()),
                      header.at("embedding_dim").get<int>(), 0);
    if (m.params_.size() != params.size())
        throw ValidationError("checkpoint tensor set differs from the configured model");
    for (std::size_t i = 0; i < params.size(); ++i) {
        num::Parameter& dst = m.params_.at(params[i].name);
        if (dst.value.rows() != params[i].value.rows() || dst.value.cols() != params[i].value.cols())
            throw ValidationError("checkpoint tensor " + params[i].name + " has the wrong shape");
        dst.value = params[i].value;
    }
    return m;
}

} // namespace sift
