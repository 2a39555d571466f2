#pragma once

// Finite-difference checks over every primitive and over full model
// forward passes on small random graphs.

#include "sift/corpus_io.h"
#include "sift/grad_check.h"
#include "sift/random.h"

#include <cstdint>
#include <string>
#include <vector>

namespace sift {

struct GradCase {
    std::string name;
    num::GradCheckResult result;
};

/// Every tape primitive on random inputs in [-2, 2].
std::vector<GradCase> primitive_gradient_suite(std::uint64_t seed);

/// Full forward graph for one model family: baseline, sift, sift_light,
/// scaffold, gcn, gat (each on single and pair tasks) or parser (ceiling
/// and probe, tree and graph). Graphs have 3 to 5 nodes, hidden width 8.
std::vector<GradCase> model_gradient_suite(const std::string& model, std::uint64_t seed);

/// Names accepted by model_gradient_suite, plus "primitives" and "all".
const std::vector<std::string>& gradient_suite_names();

std::vector<GradCase> run_gradient_suite(const std::string& name, std::uint64_t seed);

/// A sentence of n tokens "w0".."w{n-1}" with random piece vectors (the
/// first token split into two pieces), boundary pieces, and a random
/// labeled graph over `labels` relations.
TaskSide random_side(Rng& rng, int n, int labels, int dim, bool with_graph = true);

} // namespace sift
