#include "sift/checkpoint.h"

#include "sift/corpus_io.h"
#include "sift/error.h"

#include <fstream>

namespace sift {

void save_checkpoint(const std::string& path, const nlohmann::json& header,
                     const num::ParameterStore& params)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write checkpoint " + path);
    nlohmann::json h = header;
    h["format"] = kCheckpointFormat;
    h["tensors"] = params.size();
    out << h.dump() << '\n';
    for (std::size_t i = 0; i < params.size(); ++i) {
        const num::Parameter& p = params[i];
        nlohmann::json line = {{"key", p.name},
                               {"shape", {p.value.rows(), p.value.cols()}},
                               {"dtype", "f64"},
                               {"decay", p.decay},
                               {"data", encode_f64(p.value)}};
        out << line.dump() << '\n';
    }
    if (!out)
        throw std::runtime_error("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open checkpoint " + path);
    Checkpoint ck;
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("checkpoint " + path + " is empty");
    try {
        ck.header = nlohmann::json::parse(line);
        if (ck.header.value("format", "") != kCheckpointFormat)
            throw ValidationError("checkpoint " + path + ": unknown format");
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            const auto j = nlohmann::json::parse(line);
            if (j.at("dtype").get<std::string>() != "f64")
                throw ValidationError("checkpoint " + path + ": unsupported dtype");
            const auto rows = j.at("shape").at(0).get<Eigen::Index>();
            const auto cols = j.at("shape").at(1).get<Eigen::Index>();
            ck.params.add(j.at("key").get<std::string>(),
                          decode_f64(j.at("data").get<std::string>(), rows, cols),
                          j.value("decay", true));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("checkpoint " + path + ": " + e.what());
    }
    if (ck.header.contains("tensors") && ck.header.at("tensors").get<std::size_t>() != ck.params.size())
        throw ValidationError("checkpoint " + path + ": tensor count mismatch");
    return ck;
}

} // namespace sift
