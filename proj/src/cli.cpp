#include "sift/cli.h"

#include "sift/checkpoint.h"
#include "sift/corpus_io.h"
#include "sift/error.h"
#include "sift/gradient_suite.h"
#include "sift/metrics.h"
#include "sift/models.h"
#include "sift/synthetic.h"
#include "sift/training.h"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sift::cli {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string corpus;
    std::string dataset;
    std::string config;
    std::string mode;
    std::uint64_t seed = 1;
    bool seed_given = false;
    int threads = 1;
    std::string out;
    double fraction = 1.0;
    double tol = 1e-5;
    bool include_tops = false;
    std::string model = "all";
    std::string checkpoint;
};

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

nlohmann::json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open config " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << text;
}

void require(const std::string& value, const char* flag, const char* command)
{
    if (value.empty())
        throw ValidationError(std::string(command) + ": " + flag + " is required");
}

// --- convert ---------------------------------------------------------------

int cmd_convert(const Flags& f, std::ostream& out)
{
    require(f.corpus, "--corpus", "convert");
    require(f.out, "--out", "convert");
    Corpus c;
    if (ends_with(f.corpus, ".sdp"))
        c = read_sdp(f.corpus);
    else if (ends_with(f.corpus, ".jsonl"))
        c = read_jsonl(f.corpus);
    else if (ends_with(f.corpus, ".conll") || ends_with(f.corpus, ".conllu"))
        c = read_dependency_trees(f.corpus);
    else
        throw ValidationError("convert: input must end in .sdp, .jsonl, .conll or .conllu");
    if (ends_with(f.out, ".sdp"))
        write_sdp(f.out, c);
    else if (ends_with(f.out, ".jsonl"))
        write_jsonl(f.out, c);
    else
        throw ValidationError("convert: output must end in .sdp or .jsonl");
    out << "converted " << c.records.size() << " sentences, " << c.relations.size()
        << " relation labels\n";
    return 0;
}

// --- synth -----------------------------------------------------------------

int cmd_synth(const Flags& f, std::ostream& out)
{
    require(f.out, "--out", "synth");
    const nlohmann::json cfg = f.config.empty() ? nlohmann::json::object() : read_json_file(f.config);
    GrammarConfig grammar;
    int sentences = 64, dev_sentences = 64;
    try {
        grammar = grammar_from_json(cfg.value("grammar", nlohmann::json::object()));
        sentences = cfg.value("sentences", sentences);
        dev_sentences = cfg.value("dev_sentences", dev_sentences);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("synth config: ") + e.what());
    }
    if (sentences < 0 || dev_sentences < 0)
        throw ValidationError("synth: sentence counts must be non-negative");
    const std::string mode = f.mode.empty() ? "corpus" : f.mode;
    if (mode == "corpus") {
        const SyntheticCorpus s = generate_synthetic_corpus(f.seed, sentences, grammar);
        write_jsonl(f.out, s.corpus);
        out << "wrote " << s.corpus.records.size() << " sentences to " << f.out << '\n';
        return 0;
    }
    if (mode != "task")
        throw ValidationError("synth: --mode must be corpus or task");
    const TaskDataset all = generate_synthetic_task(f.seed, sentences + dev_sentences, grammar);
    TaskDataset train{all.schema, all.relations, {}}, dev{all.schema, all.relations, {}};
    for (std::size_t i = 0; i < all.examples.size(); ++i)
        (static_cast<int>(i) < sentences ? train : dev).examples.push_back(all.examples[i]);
    fs::create_directories(f.out);
    write_task_dataset((fs::path(f.out) / "train.tsv").string(), train);
    write_task_dataset((fs::path(f.out) / "dev.tsv").string(), dev);
    out << "wrote " << train.examples.size() << " train and " << dev.examples.size()
        << " dev examples to " << f.out << '\n';
    return 0;
}

// --- probe -----------------------------------------------------------------

int cmd_probe(const Flags& f, std::ostream& out)
{
    require(f.corpus, "--corpus", "probe");
    const ProbeExperimentConfig cfg =
        probe_experiment_from_json(f.config.empty() ? nlohmann::json::object() : read_json_file(f.config));
    const Corpus corpus = read_jsonl(f.corpus);
    const ProbeReport report = run_probe_experiment(corpus, cfg, f.seed, f.include_tops, f.threads);
    out << format_probe_table(report);
    if (!f.out.empty())
        write_text(f.out, probe_report_to_json(report).dump(2) + "\n");
    return 0;
}

// --- finetune / evaluate / diagnose ------------------------------------------

std::pair<std::string, std::string> dataset_paths(const std::string& dataset)
{
    if (fs::is_directory(dataset)) {
        const auto train = fs::path(dataset) / "train.tsv";
        const auto dev = fs::path(dataset) / "dev.tsv";
        if (!fs::exists(train))
            throw ValidationError("dataset directory " + dataset + " has no train.tsv");
        return {train.string(), fs::exists(dev) ? dev.string() : std::string()};
    }
    if (!fs::exists(dataset))
        throw ValidationError("dataset " + dataset + " does not exist");
    return {dataset, {}};
}

std::string format_report_line(const EvalReport& r)
{
    std::ostringstream os;
    if (r.accuracy)
        os << " acc " << format_fixed(*r.accuracy, 4);
    if (r.r_k)
        os << " r_k " << format_fixed(*r.r_k, 4);
    if (r.pearson)
        os << " pearson " << format_fixed(*r.pearson, 4);
    if (r.mse)
        os << " mse " << format_fixed(*r.mse, 4);
    return os.str();
}

int cmd_finetune(const Flags& f, std::ostream& out)
{
    require(f.dataset, "--dataset", "finetune");
    RunConfig run = f.config.empty() ? RunConfig{} : run_config_from_json(read_json_file(f.config));
    if (!f.mode.empty())
        run.mode = parse_mode(f.mode);
    if (f.seed_given)
        run.seeds = {f.seed};
    const auto [train_path, dev_path] = dataset_paths(f.dataset);
    const TaskDataset train = read_task_dataset(train_path);
    std::optional<TaskDataset> dev;
    if (!dev_path.empty())
        dev = read_task_dataset(dev_path, train.schema, &train.relations);

    std::vector<PreparedSide> scaffold;
    if (!f.corpus.empty()) {
        if (run.mode != RunMode::scaffold)
            throw ValidationError("finetune: --corpus is only used in scaffold mode");
        const Corpus aux = read_jsonl(f.corpus, train.relations);
        for (const auto& r : aux.records)
            scaffold.push_back(prepare_side({r.sentence, r.graph, r.embedding}, train.relations, true));
    }

    for (std::uint64_t seed : run.seeds) {
        TrainOptions opt;
        opt.threads = f.threads;
        if (!scaffold.empty())
            opt.scaffold_corpus = &scaffold;
        std::ofstream metrics;
        fs::path dir;
        if (!f.out.empty()) {
            dir = run.seeds.size() > 1 ? fs::path(f.out) / ("seed-" + std::to_string(seed)) : fs::path(f.out);
            fs::create_directories(dir);
            metrics.open(dir / "metrics.jsonl", std::ios::binary);
            opt.on_epoch = [&metrics](const nlohmann::json& j) { metrics << j.dump() << '\n'; };
        }
        TrainResult res = train_downstream(train, dev ? &*dev : nullptr, run, seed, opt);
        const EpochLog& last = res.epochs.back();
        out << "seed " << seed << " mode " << mode_name(run.mode) << " epochs " << last.epoch
            << " loss " << format_fixed(last.train_loss, 6);
        if (last.train)
            out << " | train" << format_report_line(*last.train);
        if (last.dev)
            out << " | dev" << format_report_line(*last.dev) << " | best epoch " << res.best_epoch;
        out << '\n';
        if (!f.out.empty()) {
            save_checkpoint((dir / "checkpoint.jsonl").string(), res.model.header(), res.model.params());
            nlohmann::json report = {{"seed", seed}, {"final", epoch_log_to_json(last)},
                                     {"best_epoch", res.best_epoch}};
            write_text((dir / "report.json").string(), report.dump(2) + "\n");
        }
    }
    return 0;
}

DownstreamModel load_model(const std::string& path)
{
    Checkpoint ck = load_checkpoint(path);
    return DownstreamModel::from_checkpoint(ck.header, std::move(ck.params));
}

TaskDataset load_eval_dataset(const std::string& path, const DownstreamModel& model)
{
    const auto [file, dev] = dataset_paths(path);
    const std::string target = fs::is_directory(path) && !dev.empty() ? dev : file;
    return read_task_dataset(target, model.schema(), &model.relations());
}

int cmd_evaluate(const Flags& f, std::ostream& out)
{
    require(f.checkpoint, "--checkpoint", "evaluate");
    require(f.dataset, "--dataset", "evaluate");
    DownstreamModel model = load_model(f.checkpoint);
    const TaskDataset data = load_eval_dataset(f.dataset, model);
    const bool need_graph = uses_graphs(model.run().mode) && model.run().mode != RunMode::sift_light &&
                            model.run().mode != RunMode::scaffold;
    const EvalReport r = evaluate(model, prepare_examples(data, need_graph), f.threads);
    const std::string text = report_to_json(r).dump(2) + "\n";
    out << text;
    if (!f.out.empty())
        write_text(f.out, text);
    return 0;
}

int cmd_diagnose(const Flags& f, std::ostream& out)
{
    require(f.checkpoint, "--checkpoint", "diagnose");
    require(f.dataset, "--dataset", "diagnose");
    DownstreamModel model = load_model(f.checkpoint);
    if (model.schema().type != TaskType::classification)
        throw ValidationError("diagnose: classification checkpoints only");
    const TaskDataset data = load_eval_dataset(f.dataset, model);
    const bool need_graph = uses_graphs(model.run().mode) && model.run().mode != RunMode::sift_light &&
                            model.run().mode != RunMode::scaffold;
    const auto prepared = prepare_examples(data, need_graph);
    const Predictions p = predict(model, prepared, f.threads);
    // Tag × gold label cells, the layout of heuristic/label diagnostic tables.
    std::vector<std::string> cells;
    std::vector<int> pred, gold;
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        const std::string tag = prepared[i].category.empty() ? kDefaultCategory : prepared[i].category;
        cells.push_back(tag + " | " + model.schema().labels[static_cast<std::size_t>(prepared[i].label)]);
        pred.push_back(static_cast<int>(p.values[i]));
        gold.push_back(prepared[i].label);
    }
    const CategoryAccuracy by_cell = accuracy_by_category(cells, pred, gold);
    std::vector<std::string> tags;
    for (const auto& ex : prepared)
        tags.push_back(ex.category);
    const CategoryAccuracy by_tag = accuracy_by_category(tags, pred, gold);

    std::ostringstream os;
    char line[200];
    std::snprintf(line, sizeof line, "%-40s %8s %9s\n", "category | gold label", "count", "accuracy");
    os << line;
    for (const auto& [cell, acc] : by_cell.per_category) {
        std::snprintf(line, sizeof line, "%-40s %8d %9.4f\n", cell.c_str(), by_cell.counts.at(cell), acc);
        os << line;
    }
    os << '\n';
    std::snprintf(line, sizeof line, "%-40s %8s %9s\n", "category", "count", "accuracy");
    os << line;
    for (const auto& [tag, acc] : by_tag.per_category) {
        std::snprintf(line, sizeof line, "%-40s %8d %9.4f\n", tag.c_str(), by_tag.counts.at(tag), acc);
        os << line;
    }
    std::snprintf(line, sizeof line, "%-40s %8zu %9.4f\n", "overall", prepared.size(), by_tag.overall);
    os << line;
    std::snprintf(line, sizeof line, "%-40s %8s %9.4f\n",
                  ("R_" + std::to_string(model.schema().num_classes())).c_str(), "",
                  r_k_correlation(pred, gold, model.schema().num_classes()));
    os << line;
    out << os.str();
    if (!f.out.empty())
        write_text(f.out, os.str());
    return 0;
}

// --- gradcheck / subsample ---------------------------------------------------

int cmd_gradcheck(const Flags& f, std::ostream& out)
{
    const auto cases = run_gradient_suite(f.model, f.seed);
    double worst = 0.0;
    bool ok = true;
    char line[200];
    for (const auto& c : cases) {
        const bool pass = c.result.passed(f.tol);
        ok = ok && pass;
        worst = std::max(worst, c.result.max_rel_error);
        std::snprintf(line, sizeof line, "%-28s max_rel_error %.3e  coords %6zu  excluded %3zu  %s\n",
                      c.name.c_str(), c.result.max_rel_error, c.result.checked, c.result.excluded.size(),
                      pass ? "PASS" : "FAIL");
        out << line;
    }
    std::snprintf(line, sizeof line, "gradcheck %s: %s (max relative error %.3e, tol %.1e)\n",
                  f.model.c_str(), ok ? "PASS" : "FAIL", worst, f.tol);
    out << line;
    return ok ? 0 : 2;
}

int cmd_subsample(const Flags& f, std::ostream& out)
{
    require(f.dataset, "--dataset", "subsample");
    require(f.out, "--out", "subsample");
    const TaskDataset data = read_task_dataset(f.dataset);
    const TaskDataset sub = subsample(data, f.fraction, f.seed);
    write_task_dataset(f.out, sub);
    out << "kept " << sub.examples.size() << " of " << data.examples.size() << " rows\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Semantic graph finetuning and probing toolkit", "sift"};
    app.require_subcommand(1);
    Flags f;

    auto seed_opt = [&f](CLI::App* sub) {
        sub->add_option("--seed", f.seed, "Seed for every random choice")
            ->each([&f](const std::string&) { f.seed_given = true; });
    };
    auto threads_opt = [&f](CLI::App* sub) {
        sub->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* convert = app.add_subcommand("convert", "Convert between SDP, CoNLL and JSONL corpora");
    convert->add_option("--corpus", f.corpus, "Input corpus (.sdp, .jsonl, .conll, .conllu)");
    convert->add_option("--out", f.out, "Output corpus (.sdp or .jsonl)");

    auto* probe = app.add_subcommand("probe", "Train ceiling and probe parsers and compare them");
    probe->add_option("--corpus", f.corpus, "JSONL corpus with embeddings and trees or graphs");
    probe->add_option("--config", f.config, "Probe experiment JSON");
    seed_opt(probe);
    threads_opt(probe);
    probe->add_option("--out", f.out, "Write the report as JSON");
    probe->add_flag("--include-tops", f.include_tops, "Score top nodes in graph parsing");

    auto* finetune = app.add_subcommand("finetune", "Train a downstream model");
    finetune->add_option("--dataset", f.dataset, "Task TSV or directory with train.tsv and dev.tsv");
    finetune->add_option("--config", f.config, "Run config JSON");
    finetune->add_option("--mode", f.mode, "baseline, sift, sift_light, scaffold, gcn or gat");
    finetune->add_option("--corpus", f.corpus, "Scaffold parsing corpus (JSONL)");
    seed_opt(finetune);
    threads_opt(finetune);
    finetune->add_option("--out", f.out, "Output directory for checkpoint and logs");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on a dataset");
    evaluate_cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint JSONL");
    evaluate_cmd->add_option("--dataset", f.dataset, "Task TSV or dataset directory (uses dev.tsv)");
    threads_opt(evaluate_cmd);
    evaluate_cmd->add_option("--out", f.out, "Write the report JSON here");

    auto* diagnose = app.add_subcommand("diagnose", "Per-category accuracy table");
    diagnose->add_option("--checkpoint", f.checkpoint, "Checkpoint JSONL");
    diagnose->add_option("--dataset", f.dataset, "Task TSV or dataset directory (uses dev.tsv)");
    threads_opt(diagnose);
    diagnose->add_option("--out", f.out, "Write the table here");

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    gradcheck->add_option("--model", f.model, "Suite to run")->check(CLI::IsMember(gradient_suite_names()));
    gradcheck->add_option("--tol", f.tol, "Maximum relative error")->check(CLI::PositiveNumber);
    seed_opt(gradcheck);

    auto* subsample_cmd = app.add_subcommand("subsample", "Uniformly subsample a task dataset");
    subsample_cmd->add_option("--dataset", f.dataset, "Task TSV");
    subsample_cmd->add_option("--fraction", f.fraction, "Fraction in (0, 1]");
    seed_opt(subsample_cmd);
    subsample_cmd->add_option("--out", f.out, "Output task TSV");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus or task");
    synth->add_option("--mode", f.mode, "corpus (JSONL) or task (directory of TSVs)");
    synth->add_option("--config", f.config, "JSON with grammar, sentences, dev_sentences");
    seed_opt(synth);
    synth->add_option("--out", f.out, "Output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        if (convert->parsed())
            return cmd_convert(f, out);
        if (probe->parsed())
            return cmd_probe(f, out);
        if (finetune->parsed())
            return cmd_finetune(f, out);
        if (evaluate_cmd->parsed())
            return cmd_evaluate(f, out);
        if (diagnose->parsed())
            return cmd_diagnose(f, out);
        if (gradcheck->parsed())
            return cmd_gradcheck(f, out);
        if (subsample_cmd->parsed())
            return cmd_subsample(f, out);
        if (synth->parsed())
            return cmd_synth(f, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace sift::cli
