#include "sift/grad_check.h"

#include "sift/error.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace sift::num {

namespace {

struct Evaluation {
    double value;
    std::vector<std::int64_t> pattern;
};

Evaluation evaluate(const std::function<Var(Tape&)>& f)
{
    Tape tape;
    tape.track_kinks(true);
    Var loss = f(tape);
    const double v = loss.scalar();
    if (!std::isfinite(v))
        throw NumericError("grad_check: non-finite forward value");
    return {v, tape.kink_pattern()};
}

} // namespace

GradCheckResult grad_check(const std::function<Var(Tape&)>& f,
                           std::span<Parameter* const> inputs, double eps)
{
    Tape tape;
    tape.track_kinks(true);
    Var loss = f(tape);
    if (!std::isfinite(loss.scalar()))
        throw NumericError("grad_check: non-finite forward value");
    const std::vector<std::int64_t> base = tape.kink_pattern();
    tape.backward(loss);

    std::unordered_map<const Parameter*, Matrix> analytic;
    for (auto& [p, g] : tape.parameter_gradients())
        analytic.emplace(p, std::move(g));

    GradCheckResult result;
    for (Parameter* p : inputs) {
        Matrix grad = Matrix::Zero(p->value.rows(), p->value.cols());
        if (auto it = analytic.find(p); it != analytic.end())
            grad = it->second;
        for (Eigen::Index k = 0; k < p->value.size(); ++k) {
            double& x = p->value.data()[k];
            const double orig = x;
            x = orig + eps;
            const Evaluation plus = evaluate(f);
            x = orig - eps;
            const Evaluation minus = evaluate(f);
            x = orig;
            if (plus.pattern != base || minus.pattern != base) {
                result.excluded.push_back({p->name, k});
                continue;
            }
            const double numeric = (plus.value - minus.value) / (2.0 * eps);
            const double a = grad.data()[k];
            const double err =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            result.max_rel_error = std::max(result.max_rel_error, err);
            ++result.checked;
        }
    }
    return result;
}

} // namespace sift::num
