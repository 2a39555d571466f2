#pragma once

// Parameter checkpoints as JSON lines: one header object, then one line per
// tensor {"key", "shape": [rows, cols], "dtype": "f64", "decay", "data"}
// with data the base64 of little-endian doubles in row-major order.

#include "sift/tensor.h"

#include <json.hpp>

#include <string>

namespace sift {

inline constexpr const char* kCheckpointFormat = "sift-checkpoint/1";

struct Checkpoint {
    nlohmann::json header;
    num::ParameterStore params;
};

void save_checkpoint(const std::string& path, const nlohmann::json& header,
                     const num::ParameterStore& params);
Checkpoint load_checkpoint(const std::string& path);

} // namespace sift
