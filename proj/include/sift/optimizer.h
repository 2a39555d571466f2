#pragma once

// AdamW with decoupled weight decay and a linear warmup / linear decay
// learning-rate schedule.

#include "sift/tensor.h"

#include <json.hpp>

#include <unordered_map>

namespace sift {

struct OptimizerConfig {
    double learning_rate = 2e-5;
    double weight_decay = 0.1;
    double warmup_ratio = 0.06;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 3;
    int batch_size = 32;        // effective batch
    int micro_batch = 0;        // 0: whole effective batch in one pass

    int accumulation_steps() const;
};

nlohmann::json optimizer_config_to_json(const OptimizerConfig& c);
OptimizerConfig optimizer_config_from_json(const nlohmann::json& j, OptimizerConfig base = {});
void validate_optimizer_config(const OptimizerConfig& c);

/// W = ceil(warmup_ratio · T). Steps are 0-based: step / W during warmup,
/// then (T − step) / (T − W), clamped at 0.
double schedule_factor(long step, long total_steps, double warmup_ratio);

struct AdamState {
    struct Moments {
        num::Matrix m;
        num::Matrix v;
    };
    std::unordered_map<const num::Parameter*, Moments> moments;
    long steps = 0;  // updates applied so far
};

/// One update at schedule step `step`:
///   m ← β₁m + (1−β₁)g, v ← β₂v + (1−β₂)g², t = state.steps + 1
///   p ← p − lr_t (m/(1−β₁ᵗ) / (√(v/(1−β₂ᵗ)) + ε) + wd·p)
/// with lr_t = lr · schedule_factor(step, total_steps) and wd applied only
/// to parameters whose decay flag is set. Throws NumericError on non-finite
/// gradients.
void adamw_step(const num::ParameterGradients& grads, AdamState& state, const OptimizerConfig& c,
                long step, long total_steps);

} // namespace sift
