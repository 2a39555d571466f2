#pragma once

#include "sift/tensor.h"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sift::num {

struct ExcludedCoordinate {
    std::string parameter;
    Eigen::Index index;  // row-major flat index
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    /// Coordinates whose ±eps stencil changes the activation pattern of a
    /// non-smooth primitive (relu at 0, max-pool ties). Not failures.
    std::vector<ExcludedCoordinate> excluded;

    bool passed(double tol) const { return max_rel_error < tol; }
};

/// Compares the tape gradient of a scalar expression against central
/// differences over every coordinate of `inputs`. The relative error per
/// coordinate is |analytic - numeric| / max(1, |analytic|, |numeric|).
///
/// `f` must read the inputs through Tape::param and be deterministic.
/// Throws NumericError when a forward value is non-finite.
GradCheckResult grad_check(const std::function<Var(Tape&)>& f,
                           std::span<Parameter* const> inputs,
                           double eps = 1e-5);

} // namespace sift::num
