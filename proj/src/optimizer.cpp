#include "sift/optimizer.h"

#include "sift/error.h"

#include <algorithm>
#include <cmath>

namespace sift {

int OptimizerConfig::accumulation_steps() const
{
    if (micro_batch <= 0 || micro_batch >= batch_size)
        return 1;
    return (batch_size + micro_batch - 1) / micro_batch;
}

nlohmann::json optimizer_config_to_json(const OptimizerConfig& c)
{
    return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
            {"warmup_ratio", c.warmup_ratio},   {"betas", {c.beta1, c.beta2}},
            {"eps", c.eps},                     {"epochs", c.epochs},
            {"batch_size", c.batch_size},       {"micro_batch", c.micro_batch}};
}

OptimizerConfig optimizer_config_from_json(const nlohmann::json& j, OptimizerConfig c)
{
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.warmup_ratio = j.value("warmup_ratio", c.warmup_ratio);
    if (j.contains("betas")) {
        const auto& b = j.at("betas");
        if (!b.is_array() || b.size() != 2)
            throw ValidationError("optimizer: betas must be a two-element array");
        c.beta1 = b[0].get<double>();
        c.beta2 = b[1].get<double>();
    }
    c.eps = j.value("eps", c.eps);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.micro_batch = j.value("micro_batch", c.micro_batch);
    validate_optimizer_config(c);
    return c;
}

void validate_optimizer_config(const OptimizerConfig& c)
{
    if (!(c.warmup_ratio >= 0.0 && c.warmup_ratio < 1.0))
        throw ValidationError("optimizer: warmup_ratio must lie in [0, 1)");
    if (!(c.learning_rate >= 0.0) || !(c.weight_decay >= 0.0) || !(c.eps > 0.0))
        throw ValidationError("optimizer: learning_rate and weight_decay must be >= 0, eps > 0");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0))
        throw ValidationError("optimizer: betas must lie in [0, 1)");
    if (c.epochs < 1 || c.batch_size < 1 || c.micro_batch < 0)
        throw ValidationError("optimizer: epochs and batch_size must be positive");
    if (c.micro_batch > 0 && c.batch_size % c.micro_batch != 0)
        throw ValidationError("optimizer: batch_size must be a multiple of micro_batch");
}

double schedule_factor(long step, long total_steps, double warmup_ratio)
{
    if (total_steps <= 0)
        return 0.0;
    const auto warmup = static_cast<long>(std::ceil(warmup_ratio * static_cast<double>(total_steps)));
    if (step < warmup)
        return static_cast<double>(step) / static_cast<double>(warmup);
    if (total_steps == warmup)
        return 0.0;
    return std::max(0.0, static_cast<double>(total_steps - step) /
                             static_cast<double>(total_steps - warmup));
}

void adamw_step(const num::ParameterGradients& grads, AdamState& state, const OptimizerConfig& c,
                long step, long total_steps)
{
    for (const auto& [p, g] : grads) {
        if (!g.allFinite())
            throw NumericError("adamw_step: non-finite gradient for " + p->name);
        if (g.rows() != p->value.rows() || g.cols() != p->value.cols())
            throw ShapeError("adamw_step: gradient shape differs for " + p->name);
    }
    const double lr = c.learning_rate * schedule_factor(step, total_steps, c.warmup_ratio);
    const long t = ++state.steps;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    for (const auto& [p, g] : grads) {
        auto [it, fresh] = state.moments.try_emplace(p);
        auto& mo = it->second;
        if (fresh) {
            mo.m = num::Matrix::Zero(g.rows(), g.cols());
            mo.v = num::Matrix::Zero(g.rows(), g.cols());
        }
        mo.m = c.beta1 * mo.m + (1.0 - c.beta1) * g;
        mo.v = c.beta2 * mo.v + (1.0 - c.beta2) * g.cwiseProduct(g);
        num::Matrix update =
            (mo.m / bc1).array() / ((mo.v / bc2).array().sqrt() + c.eps);
        if (p->decay)
            update += c.weight_decay * p->value;
        p->value -= lr * update;
    }
}

} // namespace sift
