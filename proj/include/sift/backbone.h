#pragma once

// Trainable stand-ins for a contextual encoder at desk scale.
//
// Context backbone: h_i = ReLU(W [x_{i-1}; x_i; x_{i+1}] + p_i + b), with
// zero vectors past the sentence edges and learned position rows p.
// Adapter: x ↦ W x + b, W initialized to the identity.

#include "sift/tensor.h"

#include <cstdint>
#include <string>

namespace sift {

void add_context_backbone_params(num::ParameterStore& store, const std::string& prefix,
                                 int input_dim, int dim, int max_positions, std::uint64_t seed);

/// tokens: n × input_dim. Positions past max_positions reuse the last row.
num::Var context_backbone(num::Var tokens, const num::Bind& bind, const std::string& prefix);

void add_adapter_params(num::ParameterStore& store, const std::string& prefix, int dim);

num::Var apply_adapter(num::Var x, const num::Bind& bind, const std::string& prefix);

} // namespace sift
