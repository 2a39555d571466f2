#pragma once

// Dense 64-bit tensors with a reverse-mode tape.
//
// Every value is a row-major matrix; vectors are 1×d rows. A Tape records
// primitives in execution order, which is already a topological order, so
// backward() is a single reverse sweep.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sift::num {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

inline constexpr double kLayerNormEps = 1e-5;

/// A named learned tensor. Lives in a ParameterStore; tapes read it.
struct Parameter {
    std::string name;
    Matrix value;
    bool decay = true;  // subject to decoupled weight decay
};

/// Insertion-ordered collection of parameters addressed by name.
class ParameterStore {
  public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore& other);
    ParameterStore& operator=(const ParameterStore& other);
    ParameterStore(ParameterStore&&) noexcept = default;
    ParameterStore& operator=(ParameterStore&&) noexcept = default;

    Parameter& add(const std::string& name, Matrix value, bool decay = true);
    /// Glorot-uniform in ±sqrt(6 / (rows + cols)).
    Parameter& add_glorot(const std::string& name, int rows, int cols, std::uint64_t seed);
    Parameter& add_zeros(const std::string& name, int rows, int cols, bool decay = false);
    Parameter& add_constant(const std::string& name, int rows, int cols, double v, bool decay = false);

    bool contains(const std::string& name) const { return index_.contains(name); }
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;

    std::size_t size() const { return params_.size(); }
    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }

    /// Total number of scalar entries.
    std::size_t count() const;
    /// Scalar entries over parameters whose name starts with prefix.
    std::size_t count(const std::string& prefix) const;

  private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Gradient per parameter, in first-use order on the tape.
using ParameterGradients = std::vector<std::pair<Parameter*, Matrix>>;

class Tape;

/// Handle to a node on a tape.
class Var {
  public:
    Var() = default;
    Var(Tape* tape, std::uint32_t id) : tape_{tape}, id_{id} {}

    const Matrix& value() const;
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    bool requires_grad() const;
    double scalar() const;

    Tape* tape() const { return tape_; }
    std::uint32_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

  private:
    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

class Tape {
  public:
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf without gradient.
    Var constant(Matrix value);
    /// Leaf with gradient, not bound to a parameter (tests, probes).
    Var leaf(Matrix value);
    /// Trainable read of a parameter. Repeated reads share one leaf.
    Var param(Parameter& p);
    /// Read of a parameter as a constant; gradients never reach it.
    Var frozen(const Parameter& p);

    /// Records a primitive. `backward` is dropped when no input needs a gradient.
    Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Matrix value, std::span<const Var> inputs, Backward backward);

    /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
    void backward(Var loss);

    /// Adds g into the gradient of v if v requires one.
    void accumulate(Var v, const Matrix& g);
    void accumulate(std::uint32_t id, const Matrix& g);

    const Matrix& value(std::uint32_t id) const { return nodes_[id].value; }
    const Matrix& grad(std::uint32_t id) const;
    bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }

    ParameterGradients parameter_gradients() const;

    std::size_t size() const { return nodes_.size(); }

    /// Activation pattern of non-smooth primitives (relu signs, max-pool
    /// argmaxes) in execution order. grad_check compares patterns to detect
    /// coordinates whose finite-difference stencil straddles a kink.
    const std::vector<std::int64_t>& kink_pattern() const { return kinks_; }
    void track_kinks(bool on) { track_kinks_ = on; }
    bool tracking_kinks() const { return track_kinks_; }
    void note_kink(std::int64_t v)
    {
        if (track_kinks_)
            kinks_.push_back(v);
    }

  private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        bool has_grad = false;
        Backward backward;
        Parameter* param = nullptr;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::uint32_t> param_leaves_;
    std::vector<std::int64_t> kinks_;
    bool track_kinks_ = false;
};

// ---------------------------------------------------------------------------
// Primitives. All throw ShapeError on incompatible shapes.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// a scaled by a 1×1 variable.
Var scale(Var a, Var s);
Var hadamard(Var a, Var b);
Var transpose(Var a);

/// Adds a 1×cols row to every row of a.
Var add_row(Var a, Var row);
/// Adds an rows×1 column to every column of a.
Var add_col(Var a, Var col);
/// Multiplies every row of a elementwise by a 1×cols row.
Var mul_row(Var a, Var row);
/// Adds a 1×1 variable to every entry.
Var add_scalar(Var a, Var s);

Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var sigmoid(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

/// Per-row layer normalization (population variance, eps kLayerNormEps),
/// without affine terms.
Var layer_norm(Var a);
/// Per-row layer normalization followed by gain ⊙ x + offset (both 1×cols).
Var layer_norm(Var a, Var gain, Var offset);

/// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when
/// train is false or p == 0. Throws ValidationError unless 0 <= p < 1.
Var dropout(Var a, double p, bool train, std::uint64_t seed);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var concat_rows(std::initializer_list<Var> parts);

/// 1×cols mean of rows [begin, end).
Var row_mean(Var a, Eigen::Index begin, Eigen::Index end);
/// 1×cols column-wise max over rows. Gradient goes to the first argmax.
Var row_max_pool(Var a);
/// Rows of a selected by index (embedding lookup); indices may repeat.
Var lookup_rows(Var a, std::span<const int> indices);
/// Reinterprets a row-major buffer with a new shape.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
/// Sum of all entries, 1×1.
Var sum(Var a);
/// Columns [begin, begin + count).
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
/// Rows [begin, begin + count).
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);

/// x Wᵀ, with W stored out × in.
Var linear(Var x, Var w);
/// x Wᵀ + b.
Var linear(Var x, Var w, Var b);

/// Entries mats[k](r, c) for each cell (r, c): result is cells × mats.size().
Var gather_cells(std::span<const Var> mats, std::span<const std::pair<int, int>> cells);

/// Mean over rows of -log softmax(logits)[target]. 1×1.
Var cross_entropy(Var logits, std::span<const int> targets);
/// Mean squared error over all entries. 1×1.
Var mean_squared_error(Var pred, const Matrix& target);
/// Mean over entries where mask != 0 of the logistic loss. 1×1; zero when
/// the mask is empty.
Var binary_cross_entropy(Var logits, const Matrix& targets, const Matrix& mask);

/// Reads store parameters onto a tape, as trainable leaves or as constants.
struct Bind {
    Tape& tape;
    ParameterStore& store;
    bool frozen = false;

    Var operator()(const std::string& name) const
    {
        return frozen ? tape.frozen(store.at(name)) : tape.param(store.at(name));
    }
};

} // namespace sift::num
