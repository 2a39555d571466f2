#include "sift/cli.h"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "sift");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = sift::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string dir()
{
    const fs::path d = fs::path("scratch") / "cli";
    fs::create_directories(d);
    return d.string();
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("flag errors exit with 1, help with 0")
{
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"gradcheck", "--model", "bert"}).code == 1);
    CHECK(run({"gradcheck", "--tol", "-1"}).code == 1);
    CHECK(run({"subsample", "--fraction", "0.5"}).code == 1);
    CHECK(run({"convert", "--corpus", "x.txt", "--out", "y.jsonl"}).code == 1);
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"probe", "--corpus", dir() + "/missing.jsonl"}).code == 1);
}

TEST_CASE("gradcheck prints errors and a verdict")
{
    const auto r = run({"gradcheck", "--model", "sift", "--tol", "1e-5"});
    CHECK(r.code == 0);
    CHECK(r.out.find("sift/pair") != std::string::npos);
    CHECK(r.out.find("gradcheck sift: PASS") != std::string::npos);
    const auto strict = run({"gradcheck", "--model", "primitives", "--tol", "1e-300"});
    CHECK(strict.code == 2);
    CHECK(strict.out.find("FAIL") != std::string::npos);
}

TEST_CASE("synth, finetune, evaluate and diagnose")
{
    const std::string d = dir();
    {
        std::ofstream cfg(d + "/run.json");
        cfg << R"({"mode": "sift", "sentences": 24, "dev_sentences": 12,
                   "encoder": {"hidden_dim": 8, "num_bases": 2},
                   "optimizer": {"learning_rate": 0.01, "epochs": 2, "batch_size": 8}})";
    }
    REQUIRE(run({"synth", "--mode", "task", "--config", d + "/run.json", "--seed", "2", "--out", d + "/task"}).code == 0);
    CHECK(fs::exists(d + "/task/train.tsv"));
    CHECK(fs::exists(d + "/task/dev.tsv.sidecar.jsonl"));

    const auto ft = run({"finetune", "--dataset", d + "/task", "--config", d + "/run.json", "--out", d + "/model"});
    REQUIRE(ft.code == 0);
    CHECK(ft.out.find("seed 1 mode sift epochs 2") != std::string::npos);
    CHECK(fs::exists(d + "/model/checkpoint.jsonl"));
    CHECK(fs::exists(d + "/model/report.json"));
    std::ifstream metrics(d + "/model/metrics.jsonl");
    int lines = 0;
    for (std::string line; std::getline(metrics, line);)
        ++lines;
    CHECK(lines == 2);

    const auto ev = run({"evaluate", "--checkpoint", d + "/model/checkpoint.jsonl", "--dataset", d + "/task"});
    CHECK(ev.code == 0);
    CHECK(ev.out.find("\"accuracy\"") != std::string::npos);
    const auto dg = run({"diagnose", "--checkpoint", d + "/model/checkpoint.jsonl", "--dataset", d + "/task"});
    CHECK(dg.code == 0);
    CHECK(dg.out.find("overall") != std::string::npos);

    const auto bl = run({"finetune", "--dataset", d + "/task/train.tsv", "--config", d + "/run.json", "--mode", "baseline", "--seed", "4"});
    CHECK(bl.code == 0);
    CHECK(bl.out.find("seed 4 mode baseline") != std::string::npos);

    {
        std::ofstream bad(d + "/bad.json");
        bad << R"({"mode": "sift", "hidden": 3})";
    }
    CHECK(run({"finetune", "--dataset", d + "/task", "--config", d + "/bad.json"}).code == 1);
}

TEST_CASE("convert and subsample")
{
    const std::string d = dir();
    {
        std::ofstream cfg(d + "/corpus.json");
        cfg << R"({"sentences": 30})";
    }
    REQUIRE(run({"synth", "--config", d + "/corpus.json", "--out", d + "/c.jsonl"}).code == 0);
    const auto cv = run({"convert", "--corpus", d + "/c.jsonl", "--out", d + "/c.sdp"});
    CHECK(cv.code == 0);
    CHECK(cv.out.find("converted 30 sentences") != std::string::npos);

    REQUIRE(run({"synth", "--mode", "task", "--config", d + "/corpus.json", "--out", d + "/t"}).code == 0);
    const auto ss = run({"subsample", "--dataset", d + "/t/train.tsv", "--fraction", "0.5", "--seed", "3", "--out", d + "/half.tsv"});
    CHECK(ss.code == 0);
    CHECK(ss.out == "kept 15 of 30 rows\n");
    CHECK(run({"subsample", "--dataset", d + "/t/train.tsv", "--fraction", "0.01", "--out", d + "/none.tsv"}).code == 1);
}

}
