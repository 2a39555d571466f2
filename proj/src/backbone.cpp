#include "sift/backbone.h"

#include <algorithm>
#include <vector>

namespace sift {

using num::Matrix;
using num::Var;

void add_context_backbone_params(num::ParameterStore& store, const std::string& prefix,
                                 int input_dim, int dim, int max_positions, std::uint64_t seed)
{
    store.add_glorot(prefix + ".W", dim, 3 * input_dim, seed);
    store.add_zeros(prefix + ".b", 1, dim);
    store.add_glorot(prefix + ".position", max_positions, dim, seed);
}

Var context_backbone(Var tokens, const num::Bind& bind, const std::string& prefix)
{
    num::Tape& tape = *tokens.tape();
    const auto n = tokens.rows();
    Matrix prev = Matrix::Zero(n, n), next = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i > 0)
            prev(i, i - 1) = 1.0;
        if (i + 1 < n)
            next(i, i + 1) = 1.0;
    }
    Var window = num::concat_cols({num::matmul(tape.constant(std::move(prev)), tokens), tokens,
                                   num::matmul(tape.constant(std::move(next)), tokens)});
    Var positions = bind(prefix + ".position");
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        idx[static_cast<std::size_t>(i)] =
            static_cast<int>(std::min<Eigen::Index>(i, positions.rows() - 1));
    Var h = num::linear(window, bind(prefix + ".W"), bind(prefix + ".b"));
    return num::relu(num::add(h, num::lookup_rows(positions, idx)));
}

void add_adapter_params(num::ParameterStore& store, const std::string& prefix, int dim)
{
    store.add(prefix + ".W", Matrix::Identity(dim, dim));
    store.add_zeros(prefix + ".b", 1, dim);
}

Var apply_adapter(Var x, const num::Bind& bind, const std::string& prefix)
{
    return num::linear(x, bind(prefix + ".W"), bind(prefix + ".b"));
}

} // namespace sift
