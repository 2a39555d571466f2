#include "sift/gradient_suite.h"

#include "sift/backbone.h"
#include "sift/error.h"
#include "sift/models.h"
#include "sift/parser.h"

#include <functional>

namespace sift {

using num::Matrix;
using num::Parameter;
using num::ParameterStore;
using num::Tape;
using num::Var;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -2.0, double hi = 2.0)
{
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.uniform(lo, hi);
    return m;
}

std::vector<Parameter*> all_params(ParameterStore& s)
{
    std::vector<Parameter*> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        out.push_back(&s[i]);
    return out;
}

/// Contracts an arbitrary output with fixed random weights so every output
/// coordinate contributes to the checked scalar.
Var contract(Var out, std::uint64_t seed)
{
    Rng rng(seed);
    return num::sum(num::hadamard(out, out.tape()->constant(random_matrix(rng, out.rows(), out.cols()))));
}

} // namespace

TaskSide random_side(Rng& rng, int n, int labels, int dim, bool with_graph)
{
    if (n < 1 || n > 10)
        throw ValidationError("random_side: 1 to 10 tokens");
    std::vector<std::string> forms;
    for (int i = 0; i < n; ++i)
        forms.push_back("w" + std::to_string(i));
    TaskSide side;
    side.sentence = sentence_from_forms(forms);
    EmbeddingSequence emb;
    emb.dim = dim;
    emb.pieces.push_back({"<s>", 0, 0});
    for (int i = 0; i < n; ++i) {
        const Token& t = side.sentence.tokens[static_cast<std::size_t>(i)];
        if (i == 0) {
            emb.pieces.push_back({"w", t.start, t.start + 1});
            emb.pieces.push_back({"##" + forms[0].substr(1), t.start + 1, t.end});
        } else {
            emb.pieces.push_back({t.form, t.start, t.end});
        }
    }
    const int len = static_cast<int>(side.sentence.text.size());
    emb.pieces.push_back({"</s>", len, len});
    emb.vectors = random_matrix(rng, static_cast<Eigen::Index>(emb.pieces.size()), dim, -1.0, 1.0);
    emb.pooled = random_matrix(rng, 1, dim, -1.0, 1.0);
    side.embedding = std::move(emb);
    if (with_graph) {
        SemanticGraph g;
        g.num_nodes = n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j && rng.bernoulli(0.35))
                    g.edges.push_back({i, j, static_cast<int>(rng.below(static_cast<std::uint64_t>(labels)))});
        if (g.edges.empty() && n > 1)
            g.edges.push_back({0, 1, 0});
        g.top_nodes = {static_cast<int>(rng.below(static_cast<std::uint64_t>(n)))};
        side.graph = std::move(g);
    }
    return side;
}

std::vector<GradCase> primitive_gradient_suite(std::uint64_t seed)
{
    std::vector<GradCase> out;
    Rng rng(derive_seed(seed, "primitives"));
    auto check = [&](const std::string& name, std::vector<std::pair<int, int>> shapes,
                     const std::function<Var(Tape&, std::vector<Var>&)>& body) {
        ParameterStore store;
        for (std::size_t i = 0; i < shapes.size(); ++i)
            store.add("x" + std::to_string(i), random_matrix(rng, shapes[i].first, shapes[i].second));
        auto inputs = all_params(store);
        const std::uint64_t contract_seed = derive_seed(seed, name);
        auto f = [&](Tape& t) {
            std::vector<Var> xs;
            for (Parameter* p : inputs)
                xs.push_back(t.param(*p));
            Var y = body(t, xs);
            return y.rows() == 1 && y.cols() == 1 ? y : contract(y, contract_seed);
        };
        out.push_back({name, num::grad_check(f, inputs)});
    };
    using V = std::vector<Var>;
    check("matmul", {{2, 3}, {3, 4}}, [](Tape&, V& x) { return num::matmul(x[0], x[1]); });
    check("add", {{2, 3}, {2, 3}}, [](Tape&, V& x) { return num::add(x[0], x[1]); });
    check("sub", {{2, 3}, {2, 3}}, [](Tape&, V& x) { return num::sub(x[0], x[1]); });
    check("scale", {{2, 3}}, [](Tape&, V& x) { return num::scale(x[0], -1.7); });
    check("scale_var", {{2, 3}, {1, 1}}, [](Tape&, V& x) { return num::scale(x[0], x[1]); });
    check("hadamard", {{3, 2}, {3, 2}}, [](Tape&, V& x) { return num::hadamard(x[0], x[1]); });
    check("transpose", {{2, 3}}, [](Tape&, V& x) { return num::transpose(x[0]); });
    check("add_row", {{3, 4}, {1, 4}}, [](Tape&, V& x) { return num::add_row(x[0], x[1]); });
    check("add_col", {{3, 4}, {3, 1}}, [](Tape&, V& x) { return num::add_col(x[0], x[1]); });
    check("mul_row", {{3, 4}, {1, 4}}, [](Tape&, V& x) { return num::mul_row(x[0], x[1]); });
    check("add_scalar", {{3, 2}, {1, 1}}, [](Tape&, V& x) { return num::add_scalar(x[0], x[1]); });
    check("relu", {{3, 4}}, [](Tape&, V& x) { return num::relu(x[0]); });
    check("leaky_relu", {{3, 4}}, [](Tape&, V& x) { return num::leaky_relu(x[0], 0.2); });
    check("sigmoid", {{3, 4}}, [](Tape&, V& x) { return num::sigmoid(x[0]); });
    check("softmax_rows", {{3, 4}}, [](Tape&, V& x) { return num::softmax_rows(x[0]); });
    check("log_softmax_rows", {{3, 4}}, [](Tape&, V& x) { return num::log_softmax_rows(x[0]); });
    check("layer_norm", {{3, 4}}, [](Tape&, V& x) { return num::layer_norm(x[0]); });
    check("layer_norm_affine", {{3, 4}, {1, 4}, {1, 4}},
          [](Tape&, V& x) { return num::layer_norm(x[0], x[1], x[2]); });
    check("dropout", {{3, 4}}, [](Tape&, V& x) { return num::dropout(x[0], 0.3, true, 17); });
    check("concat_cols", {{2, 3}, {2, 2}}, [](Tape&, V& x) { return num::concat_cols({x[0], x[1]}); });
    check("concat_rows", {{2, 3}, {1, 3}}, [](Tape&, V& x) { return num::concat_rows({x[0], x[1]}); });
    check("row_mean", {{4, 3}}, [](Tape&, V& x) { return num::row_mean(x[0], 1, 3); });
    check("row_max_pool", {{4, 3}}, [](Tape&, V& x) { return num::row_max_pool(x[0]); });
    check("lookup_rows", {{4, 3}}, [](Tape&, V& x) {
        const int idx[] = {2, 0, 2};
        return num::lookup_rows(x[0], idx);
    });
    check("reshape", {{2, 6}}, [](Tape&, V& x) { return num::reshape(x[0], 3, 4); });
    check("sum", {{2, 3}}, [](Tape&, V& x) { return num::sum(x[0]); });
    check("slice_cols", {{3, 5}}, [](Tape&, V& x) { return num::slice_cols(x[0], 1, 3); });
    check("slice_rows", {{5, 3}}, [](Tape&, V& x) { return num::slice_rows(x[0], 2, 2); });
    check("gather_cells", {{3, 3}, {3, 3}}, [](Tape&, V& x) {
        const std::pair<int, int> cells[] = {{0, 1}, {2, 2}, {1, 0}};
        return num::gather_cells(std::span<const Var>(x.data(), 2), cells);
    });
    check("cross_entropy", {{3, 4}}, [](Tape&, V& x) {
        const int t[] = {1, 3, 0};
        return num::cross_entropy(x[0], t);
    });
    check("mean_squared_error", {{2, 3}}, [](Tape&, V& x) {
        Matrix target(2, 3);
        target << 0.5, -1.0, 0.0, 1.5, 0.25, -0.75;
        return num::mean_squared_error(x[0], target);
    });
    check("binary_cross_entropy", {{3, 3}}, [](Tape&, V& x) {
        Matrix t = Matrix::Zero(3, 3), m = Matrix::Ones(3, 3);
        t(0, 1) = t(2, 0) = 1.0;
        m(1, 1) = 0.0;
        return num::binary_cross_entropy(x[0], t, m);
    });
    check("linear", {{3, 4}, {2, 4}, {1, 2}}, [](Tape&, V& x) { return num::linear(x[0], x[1], x[2]); });
    return out;
}

namespace {

std::vector<GradCase> downstream_cases(RunMode mode, std::uint64_t seed)
{
    std::vector<GradCase> out;
    const int labels = 3, dim = 6;
    RelationVocab vocab({"L0", "L1", "L2"});
    for (int pair = 0; pair < 2; ++pair) {
        for (int regression = 0; regression < (pair ? 1 : 2); ++regression) {
            Rng rng(derive_seed(seed, mode_name(mode) + std::to_string(pair) + std::to_string(regression)));
            RunConfig run;
            run.mode = mode;
            run.encoder.hidden_dim = 8;
            run.encoder.num_layers = 2;
            run.encoder.num_bases = 3;
            run.composition_layers = 1;
            run.scaffold_parser = {ParserMode::ceiling, 6, 4, ParseTarget::graph, false, true};
            TaskSchema schema;
            schema.pair = pair == 1;
            if (regression) {
                schema.type = TaskType::regression;
            } else {
                schema.labels = {"a", "b", "c"};
            }
            TaskExample ex;
            ex.a = random_side(rng, 3 + static_cast<int>(rng.below(3)), labels, dim);
            if (schema.pair)
                ex.b = random_side(rng, 3 + static_cast<int>(rng.below(3)), labels, dim);
            ex.label = static_cast<int>(rng.below(3));
            ex.target = rng.uniform(-1.0, 1.0);
            TaskDataset data{schema, vocab, {ex}};
            const auto prepared = prepare_examples(data, true);
            DownstreamModel model(run, schema, vocab, dim, seed);
            // Move biases and gains off their constant initial values.
            for (std::size_t i = 0; i < model.params().size(); ++i) {
                Matrix& v = model.params()[i].value;
                v += random_matrix(rng, v.rows(), v.cols(), -0.1, 0.1);
            }
            auto inputs = all_params(model.params());
            auto f = [&](Tape& t) {
                // Training-time objective with dropout disabled (all rates 0).
                return model.forward(t, prepared[0], {true, 0, nullptr}).loss;
            };
            std::string name = mode_name(mode) + (schema.pair ? "/pair" : "/single");
            if (regression)
                name += "/regression";
            out.push_back({name, num::grad_check(f, inputs)});
        }
    }
    return out;
}

std::vector<GradCase> parser_cases(std::uint64_t seed)
{
    std::vector<GradCase> out;
    const int dim = 6, labels = 3;
    for (ParserMode mode : {ParserMode::ceiling, ParserMode::probe}) {
        for (ParseTarget target : {ParseTarget::tree, ParseTarget::graph}) {
            Rng rng(derive_seed(seed, std::string("parser") + (mode == ParserMode::probe ? "p" : "c") +
                                          (target == ParseTarget::tree ? "t" : "g")));
            ParserConfig pc{mode, 6, 4, target, false, target == ParseTarget::graph};
            ParameterStore store;
            add_context_backbone_params(store, "backbone", dim, 5, 8, seed);
            const std::size_t backbone_count = store.size();
            add_parser_params(store, "parser", pc, 5, labels, seed);
            for (std::size_t i = 0; i < store.size(); ++i) {
                Matrix& v = store[i].value;
                v += random_matrix(rng, v.rows(), v.cols(), -0.1, 0.1);
            }
            const int n = 3 + static_cast<int>(rng.below(3));
            const Matrix tokens = random_matrix(rng, n, dim, -1.0, 1.0);
            SemanticGraph gold;
            if (target == ParseTarget::tree) {
                gold.num_nodes = n + 1;
                for (int i = 1; i <= n; ++i)
                    gold.edges.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(i))), i,
                                          static_cast<int>(rng.below(labels))});
            } else {
                gold = *random_side(rng, n, labels, dim).graph;
            }
            std::vector<Parameter*> inputs;
            for (std::size_t i = pc.backbone_frozen() ? backbone_count : 0; i < store.size(); ++i)
                inputs.push_back(&store[i]);
            auto f = [&](Tape& t) {
                Var states = context_backbone(t.constant(tokens), num::Bind{t, store, pc.backbone_frozen()},
                                              "backbone");
                return parsing_loss(score(states, pc, num::Bind{t, store, false}, "parser"), gold, pc);
            };
            const std::string name = std::string("parser/") +
                                     (mode == ParserMode::probe ? "probe" : "ceiling") + "/" +
                                     (target == ParseTarget::tree ? "tree" : "graph");
            out.push_back({name, num::grad_check(f, inputs)});
        }
    }
    return out;
}

} // namespace

std::vector<GradCase> model_gradient_suite(const std::string& model, std::uint64_t seed)
{
    if (model == "parser")
        return parser_cases(seed);
    return downstream_cases(parse_mode(model), seed);
}

const std::vector<std::string>& gradient_suite_names()
{
    static const std::vector<std::string> names = {"primitives", "baseline", "sift",
                                                   "sift_light", "scaffold", "gcn",
                                                   "gat",        "parser",   "all"};
    return names;
}

std::vector<GradCase> run_gradient_suite(const std::string& name, std::uint64_t seed)
{
    if (name == "primitives")
        return primitive_gradient_suite(seed);
    if (name == "all") {
        std::vector<GradCase> out = primitive_gradient_suite(seed);
        for (const auto& n : gradient_suite_names()) {
            if (n == "primitives" || n == "all")
                continue;
            auto more = model_gradient_suite(n, seed);
            out.insert(out.end(), more.begin(), more.end());
        }
        return out;
    }
    if (std::find(gradient_suite_names().begin(), gradient_suite_names().end(), name) ==
        gradient_suite_names().end())
        throw ValidationError("unknown gradient suite '" + name + "'");
    return model_gradient_suite(name, seed);
}

} // namespace sift
