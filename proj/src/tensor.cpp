#include "sift/tensor.h"

#include "sift/error.h"
#include "sift/random.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sift::num {

namespace {

std::string shape_str(const Matrix& m)
{
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b)
{
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                     shape_str(b));
}

Tape& tape_of(Var a)
{
    if (!a.valid())
        throw ShapeError("primitive applied to an unbound Var");
    return *a.tape();
}

Tape& tape_of(Var a, Var b)
{
    Tape& t = tape_of(a);
    if (b.tape() != &t)
        throw ShapeError("primitive mixes Vars from different tapes");
    return t;
}

} // namespace

// ---------------------------------------------------------------------------
// ParameterStore

ParameterStore::ParameterStore(const ParameterStore& other)
{
    *this = other;
}

ParameterStore& ParameterStore::operator=(const ParameterStore& other)
{
    if (this == &other)
        return *this;
    params_.clear();
    index_.clear();
    for (const auto& p : other.params_)
        add(p->name, p->value, p->decay);
    return *this;
}

Parameter& ParameterStore::add(const std::string& name, Matrix value, bool decay)
{
    if (index_.contains(name))
        throw ValidationError("duplicate parameter name: " + name);
    index_.emplace(name, params_.size());
    params_.push_back(std::make_unique<Parameter>(Parameter{name, std::move(value), decay}));
    return *params_.back();
}

Parameter& ParameterStore::add_glorot(const std::string& name, int rows, int cols,
                                      std::uint64_t seed)
{
    Rng rng(derive_seed(seed, name));
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.uniform(-limit, limit);
    return add(name, std::move(m), true);
}

Parameter& ParameterStore::add_zeros(const std::string& name, int rows, int cols, bool decay)
{
    return add(name, Matrix::Zero(rows, cols), decay);
}

Parameter& ParameterStore::add_constant(const std::string& name, int rows, int cols, double v,
                                        bool decay)
{
    return add(name, Matrix::Constant(rows, cols, v), decay);
}

Parameter& ParameterStore::at(const std::string& name)
{
    auto it = index_.find(name);
    if (it == index_.end())
        throw ValidationError("unknown parameter: " + name);
    return *params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const
{
    auto it = index_.find(name);
    if (it == index_.end())
        throw ValidationError("unknown parameter: " + name);
    return *params_[it->second];
}

std::size_t ParameterStore::count() const
{
    std::size_t n = 0;
    for (const auto& p : params_)
        n += static_cast<std::size_t>(p->value.size());
    return n;
}

std::size_t ParameterStore::count(const std::string& prefix) const
{
    std::size_t n = 0;
    for (const auto& p : params_)
        if (p->name.starts_with(prefix))
            n += static_cast<std::size_t>(p->value.size());
    return n;
}

// ---------------------------------------------------------------------------
// Var / Tape

const Matrix& Var::value() const
{
    return tape_->value(id_);
}

const Matrix& Var::grad() const
{
    return tape_->grad(id_);
}

bool Var::requires_grad() const
{
    return tape_->requires_grad(id_);
}

double Var::scalar() const
{
    const Matrix& v = value();
    if (v.size() != 1)
        throw ShapeError("scalar() on a " + shape_str(v) + " value");
    return v(0, 0);
}

Var Tape::constant(Matrix value)
{
    nodes_.push_back(Node{std::move(value), {}, false, false, {}, nullptr});
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Matrix value)
{
    nodes_.push_back(Node{std::move(value), {}, true, false, {}, nullptr});
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p)
{
    if (auto it = param_leaves_.find(&p); it != param_leaves_.end())
        return {this, it->second};
    nodes_.push_back(Node{p.value, {}, true, false, {}, &p});
    const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
    param_leaves_.emplace(&p, id);
    return {this, id};
}

Var Tape::frozen(const Parameter& p)
{
    return constant(p.value);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward)
{
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward)
{
    if (!value.allFinite())
        throw NumericError("non-finite value produced on tape");
    bool needs = false;
    for (Var v : inputs)
        needs = needs || nodes_[v.id()].requires_grad;
    nodes_.push_back(Node{std::move(value), {}, needs, false,
                          needs ? std::move(backward) : Backward{}, nullptr});
    return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::accumulate(Var v, const Matrix& g)
{
    accumulate(v.id(), g);
}

void Tape::accumulate(std::uint32_t id, const Matrix& g)
{
    Node& n = nodes_[id];
    if (!n.requires_grad)
        return;
    if (!n.has_grad) {
        n.grad = g;
        n.has_grad = true;
    } else {
        n.grad += g;
    }
}

const Matrix& Tape::grad(std::uint32_t id) const
{
    static const Matrix empty;
    const Node& n = nodes_[id];
    return n.has_grad ? n.grad : empty;
}

void Tape::backward(Var loss)
{
    if (loss.tape() != this)
        throw ShapeError("backward: loss belongs to another tape");
    const Node& root = nodes_[loss.id()];
    if (root.value.size() != 1)
        throw ShapeError("backward: loss must be scalar, got " + shape_str(root.value));
    if (!root.requires_grad)
        return;
    accumulate(loss.id(), Matrix::Ones(1, 1));
    for (std::int64_t i = loss.id(); i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.has_grad && n.backward) {
            if (!n.grad.allFinite())
                throw NumericError("non-finite gradient during backward");
            n.backward(*this, n.grad);
        }
    }
}

ParameterGradients Tape::parameter_gradients() const
{
    std::vector<std::pair<std::uint32_t, Parameter*>> leaves;
    leaves.reserve(param_leaves_.size());
    for (const auto& [p, id] : param_leaves_)
        leaves.emplace_back(id, nodes_[id].param);
    std::sort(leaves.begin(), leaves.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ParameterGradients out;
    for (const auto& [id, p] : leaves) {
        const Node& n = nodes_[id];
        out.emplace_back(p, n.has_grad ? n.grad : Matrix::Zero(n.value.rows(), n.value.cols()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Primitives

Var matmul(Var a, Var b)
{
    Tape& t = tape_of(a, b);
    if (a.cols() != b.rows())
        shape_fail("matmul", a.value(), b.value());
    const auto ia = a.id(), ib = b.id();
    return t.record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia))
            t.accumulate(ia, g * t.value(ib).transpose());
        if (t.requires_grad(ib))
            t.accumulate(ib, t.value(ia).transpose() * g);
    });
}

Var add(Var a, Var b)
{
    Tape& t = tape_of(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        shape_fail("add", a.value(), b.value());
    const auto ia = a.id(), ib = b.id();
    return t.record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Var sub(Var a, Var b)
{
    Tape& t = tape_of(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        shape_fail("sub", a.value(), b.value());
    const auto ia = a.id(), ib = b.id();
    return t.record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        if (t.requires_grad(ib))
            t.accumulate(ib, -g);
    });
}

Var scale(Var a, double s)
{
    Tape& t = tape_of(a);
    const auto ia = a.id();
    return t.record(a.value() * s, {a},
                    [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var scale(Var a, Var s)
{
    Tape& t = tape_of(a, s);
    if (s.value().size() != 1)
        shape_fail("scale", a.value(), s.value());
    const auto ia = a.id(), is = s.id();
    return t.record(a.value() * s.scalar(), {a, s}, [ia, is](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia))
            t.accumulate(ia, g * t.value(is)(0, 0));
        if (t.requires_grad(is))
            t.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(t.value(ia)).sum()));
    });
}

Var hadamard(Var a, Var b)
{
    Tape& t = tape_of(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        shape_fail("hadamard", a.value(), b.value());
    const auto ia = a.id(), ib = b.id();
    return t.record(a.value().cwiseProduct(b.value()), {a, b},
                    [ia, ib](Tape& t, const Matrix& g) {
                        if (t.requires_grad(ia))
                            t.accumulate(ia, g.cwiseProduct(t.value(ib)));
                        if (t.requires_grad(ib))
                            t.accumulate(ib, g.cwiseProduct(t.value(ia)));
                    });
}

Var transpose(Var a)
{
    Tape& t = tape_of(a);
    const auto ia = a.id();
    return t.record(a.value().transpose(), {a},
                    [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g.transpose()); });
}

Var add_row(Var a, Var row)
{
    Tape& t = tape_of(a, row);
    if (row.rows() != 1 || row.cols() != a.cols())
        shape_fail("add_row", a.value(), row.value());
    const auto ia = a.id(), ir = row.id();
    Matrix out = a.value().rowwise() + row.value().row(0);
    return t.record(std::move(out), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        if (t.requires_grad(ir))
            t.accumulate(ir, g.colwise().sum());
    });
}

Var add_col(Var a, Var col)
{
    Tape& t = tape_of(a, col);
    if (col.cols() != 1 || col.rows() != a.rows())
        shape_fail("add_col", a.value(), col.value());
    const auto ia = a.id(), ic = col.id();
    Matrix out = a.value().colwise() + col.value().col(0);
    return t.record(std::move(out), {a, col}, [ia, ic](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        if (t.requires_grad(ic))
            t.accumulate(ic, g.rowwise().sum());
    });
}

Var mul_row(Var a, Var row)
{
    Tape& t = tape_of(a, row);
    if (row.rows() != 1 || row.cols() != a.cols())
        shape_fail("mul_row", a.value(), row.value());
    const auto ia = a.id(), ir = row.id();
    Matrix out = a.value().array().rowwise() * row.value().row(0).array();
    return t.record(std::move(out), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
        if (t.requires_grad(ia)) {
            Matrix ga = g.array().rowwise() * t.value(ir).row(0).array();
            t.accumulate(ia, ga);
        }
        if (t.requires_grad(ir))
            t.accumulate(ir, g.cwiseProduct(t.value(ia)).colwise().sum());
    });
}

Var add_scalar(Var a, Var s)
{
    Tape& t = tape_of(a, s);
    if (s.value().size() != 1)
        shape_fail("add_scalar", a.value(), s.value());
    const auto ia = a.id(), is = s.id();
    Matrix out = a.value().array() + s.scalar();
    return t.record(std::move(out), {a, s}, [ia, is](Tape& t, const Matrix& g) {
        t.accumulate(ia, g);
        if (t.requires_grad(is))
            t.accumulate(is, Matrix::Constant(1, 1, g.sum()));
    });
}

Var relu(Var a)
{
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    if (t.tracking_kinks())
        for (Eigen::Index i = 0; i < x.size(); ++i)
            t.note_kink(x.data()[i] > 0.0 ? 1 : 0);
    const auto ia = a.id();
    return t.record(x.cwiseMax(0.0), {a}, [ia](Tape& t, const Matrix& g) {
        // subgradient at 0 is 0
        Matrix ga = (t.value(ia).array() > 0.0).select(g, 0.0);
        t.accumulate(ia, ga);
    });
}

Var leaky_relu(Var a, double slope)
{
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    if (t.tracking_kinks())
        for (Eigen::Index i = 0; i < x.size(); ++i)
            t.note_kink(x.data()[i] > 0.0 ? 1 : 0);
    const auto ia = a.id();
    Matrix out = (x.array() > 0.0).select(x, x * slope);
    return t.record(std::move(out), {a}, [ia, slope](Tape& t, const Matrix& g) {
        Matrix ga = (t.value(ia).array() > 0.0).select(g, g * slope);
        t.accumulate(ia, ga);
    });
}

Var sigmoid(Var a)
{
    Tape& t = tape_of(a);
    Matrix y = a.value().unaryExpr([](double v) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    });
    const auto ia = a.id();
    Matrix yc = y;
    return t.record(std::move(y), {a}, [ia, yc = std::move(yc)](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.cwiseProduct(yc).cwiseProduct((1.0 - yc.array()).matrix()));
    });
}

namespace {

Matrix softmax_of(const Matrix& x)
{
    Matrix y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        y.row(r) = (x.row(r).array() - m).exp();
        y.row(r) /= y.row(r).sum();
    }
    return y;
}

} // namespace

Var softmax_rows(Var a)
{
    Tape& t = tape_of(a);
    if (a.cols() == 0)
        throw ShapeError("softmax_rows: zero columns");
    Matrix y = softmax_of(a.value());
    const auto ia = a.id();
    Matrix yc = y;
    return t.record(std::move(y), {a}, [ia, yc = std::move(yc)](Tape& t, const Matrix& g) {
        Eigen::VectorXd dot = g.cwiseProduct(yc).rowwise().sum();
        Matrix ga = yc.array() * (g.colwise() - dot).array();
        t.accumulate(ia, ga);
    });
}

Var log_softmax_rows(Var a)
{
    Tape& t = tape_of(a);
    if (a.cols() == 0)
        throw ShapeError("log_softmax_rows: zero columns");
    const Matrix& x = a.value();
    Matrix y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        const double lse = m + std::log((x.row(r).array() - m).exp().sum());
        y.row(r) = x.row(r).array() - lse;
    }
    Matrix p = y.array().exp();
    const auto ia = a.id();
    return t.record(std::move(y), {a}, [ia, p = std::move(p)](Tape& t, const Matrix& g) {
        Eigen::VectorXd s = g.rowwise().sum();
        Matrix ga = g - Matrix(p.array().colwise() * s.array());
        t.accumulate(ia, ga);
    });
}

Var layer_norm(Var a)
{
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    const auto n = static_cast<double>(x.cols());
    if (x.cols() == 0)
        throw ShapeError("layer_norm: zero columns");
    Matrix xhat(x.rows(), x.cols());
    Eigen::VectorXd inv(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mu = x.row(r).mean();
        const double var = (x.row(r).array() - mu).square().sum() / n;
        inv(r) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.row(r) = (x.row(r).array() - mu) * inv(r);
    }
    const auto ia = a.id();
    Matrix xc = xhat;
    return t.record(std::move(xhat), {a},
                    [ia, xc = std::move(xc), inv, n](Tape& t, const Matrix& g) {
                        Matrix ga(g.rows(), g.cols());
                        for (Eigen::Index r = 0; r < g.rows(); ++r) {
                            const double gm = g.row(r).sum() / n;
                            const double gx = g.row(r).dot(xc.row(r)) / n;
                            ga.row(r) = inv(r) * (g.row(r).array() - gm - xc.row(r).array() * gx);
                        }
                        t.accumulate(ia, ga);
                    });
}

Var layer_norm(Var a, Var gain, Var offset)
{
    return add_row(mul_row(layer_norm(a), gain), offset);
}

Var dropout(Var a, double p, bool train, std::uint64_t seed)
{
    if (!(p >= 0.0 && p < 1.0))
        throw ValidationError("dropout probability must lie in [0, 1)");
    if (!train || p == 0.0)
        return a;
    Tape& t = tape_of(a);
    Rng rng(seed);
    Matrix mask(a.rows(), a.cols());
    const double keep_scale = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i)
        mask.data()[i] = rng.uniform() >= p ? keep_scale : 0.0;
    const auto ia = a.id();
    Matrix out = a.value().cwiseProduct(mask);
    return t.record(std::move(out), {a}, [ia, mask = std::move(mask)](Tape& t, const Matrix& g) {
        t.accumulate(ia, g.cwiseProduct(mask));
    });
}

Var concat_cols(std::span<const Var> parts)
{
    if (parts.empty())
        throw ShapeError("concat_cols: no inputs");
    Tape& t = tape_of(parts[0]);
    const auto rows = parts[0].rows();
    Eigen::Index cols = 0;
    for (Var v : parts) {
        tape_of(parts[0], v);
        if (v.rows() != rows)
            shape_fail("concat_cols", parts[0].value(), v.value());
        cols += v.cols();
    }
    Matrix out(rows, cols);
    std::vector<std::pair<std::uint32_t, Eigen::Index>> spans;
    Eigen::Index c = 0;
    for (Var v : parts) {
        out.middleCols(c, v.cols()) = v.value();
        spans.emplace_back(v.id(), c);
        c += v.cols();
    }
    return t.record(std::move(out), parts, [spans](Tape& t, const Matrix& g) {
        for (const auto& [id, c0] : spans)
            if (t.requires_grad(id))
                t.accumulate(id, g.middleCols(c0, t.value(id).cols()));
    });
}

Var concat_rows(std::span<const Var> parts)
{
    if (parts.empty())
        throw ShapeError("concat_rows: no inputs");
    Tape& t = tape_of(parts[0]);
    const auto cols = parts[0].cols();
    Eigen::Index rows = 0;
    for (Var v : parts) {
        tape_of(parts[0], v);
        if (v.cols() != cols)
            shape_fail("concat_rows", parts[0].value(), v.value());
        rows += v.rows();
    }
    Matrix out(rows, cols);
    std::vector<std::pair<std::uint32_t, Eigen::Index>> spans;
    Eigen::Index r = 0;
    for (Var v : parts) {
        out.middleRows(r, v.rows()) = v.value();
        spans.emplace_back(v.id(), r);
        r += v.rows();
    }
    return t.record(std::move(out), parts, [spans](Tape& t, const Matrix& g) {
        for (const auto& [id, r0] : spans)
            if (t.requires_grad(id))
                t.accumulate(id, g.middleRows(r0, t.value(id).rows()));
    });
}

Var concat_cols(std::initializer_list<Var> parts)
{
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_rows(std::initializer_list<Var> parts)
{
    return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

Var row_mean(Var a, Eigen::Index begin, Eigen::Index end)
{
    Tape& t = tape_of(a);
    if (begin < 0 || end > a.rows() || begin >= end)
        throw ShapeError("row_mean: empty or out-of-range row range");
    const auto count = static_cast<double>(end - begin);
    Matrix out = a.value().middleRows(begin, end - begin).colwise().sum() / count;
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, begin, end, count](Tape& t, const Matrix& g) {
        Matrix ga = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
        for (Eigen::Index r = begin; r < end; ++r)
            ga.row(r) = g.row(0) / count;
        t.accumulate(ia, ga);
    });
}

Var row_max_pool(Var a)
{
    Tape& t = tape_of(a);
    if (a.rows() == 0)
        throw ShapeError("row_max_pool: zero rows");
    const Matrix& x = a.value();
    Matrix out(1, x.cols());
    std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < x.rows(); ++r)
            if (x(r, c) > x(best, c))
                best = r;
        arg[static_cast<std::size_t>(c)] = best;
        out(0, c) = x(best, c);
        t.note_kink(best);
    }
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia, arg = std::move(arg)](Tape& t, const Matrix& g) {
        Matrix ga = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
        for (std::size_t c = 0; c < arg.size(); ++c)
            ga(arg[c], static_cast<Eigen::Index>(c)) = g(0, static_cast<Eigen::Index>(c));
        t.accumulate(ia, ga);
    });
}

Var lookup_rows(Var a, std::span<const int> indices)
{
    Tape& t = tape_of(a);
    Matrix out(static_cast<Eigen::Index>(indices.size()), a.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= a.rows())
            throw ShapeError("lookup_rows: index out of range");
        out.row(static_cast<Eigen::Index>(i)) = a.value().row(indices[i]);
    }
    const auto ia = a.id();
    std::vector<int> idx(indices.begin(), indices.end());
    return t.record(std::move(out), {a}, [ia, idx = std::move(idx)](Tape& t, const Matrix& g) {
        Matrix ga = Matrix::Zero(t.value(ia).rows(), t.value(ia).cols());
        for (std::size_t i = 0; i < idx.size(); ++i)
            ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
        t.accumulate(ia, ga);
    });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols)
{
    Tape& t = tape_of(a);
    if (rows * cols != a.value().size())
        throw ShapeError("reshape: element count changes");
    Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
    const auto ia = a.id();
    return t.record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
        const Matrix& src = t.value(ia);
        t.accumulate(ia, Eigen::Map<const Matrix>(g.data(), src.rows(), src.cols()));
    });
}

Var sum(Var a)
{
    Tape& t = tape_of(a);
    const auto ia = a.id();
    return t.record(Matrix::Constant(1, 1, a.value().sum()), {a},
                    [ia](Tape& t, const Matrix& g) {
                        const Matrix& v = t.value(ia);
                        t.accumulate(ia, Matrix::Constant(v.rows(), v.cols(), g(0, 0)));
                    });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count)
{
    Tape& t = tape_of(a);
    if (begin < 0 || count < 0 || begin + count > a.cols())
        throw ShapeError("slice_cols: range out of bounds for " + shape_str(a.value()));
    const auto ia = a.id();
    return t.record(a.value().middleCols(begin, count), {a},
                    [ia, begin, count](Tape& t, const Matrix& g) {
                        const Matrix& v = t.value(ia);
                        Matrix ga = Matrix::Zero(v.rows(), v.cols());
                        ga.middleCols(begin, count) = g;
                        t.accumulate(ia, ga);
                    });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count)
{
    Tape& t = tape_of(a);
    if (begin < 0 || count < 0 || begin + count > a.rows())
        throw ShapeError("slice_rows: range out of bounds for " + shape_str(a.value()));
    const auto ia = a.id();
    return t.record(a.value().middleRows(begin, count), {a},
                    [ia, begin, count](Tape& t, const Matrix& g) {
                        const Matrix& v = t.value(ia);
                        Matrix ga = Matrix::Zero(v.rows(), v.cols());
                        ga.middleRows(begin, count) = g;
                        t.accumulate(ia, ga);
                    });
}

Var linear(Var x, Var w)
{
    return matmul(x, transpose(w));
}

Var linear(Var x, Var w, Var b)
{
    return add_row(linear(x, w), b);
}

Var gather_cells(std::span<const Var> mats, std::span<const std::pair<int, int>> cells)
{
    if (mats.empty())
        throw ShapeError("gather_cells: no matrices");
    Tape& t = tape_of(mats[0]);
    Matrix out(static_cast<Eigen::Index>(cells.size()), static_cast<Eigen::Index>(mats.size()));
    for (std::size_t k = 0; k < mats.size(); ++k) {
        tape_of(mats[0], mats[k]);
        const Matrix& m = mats[k].value();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto [r, c] = cells[i];
            if (r < 0 || c < 0 || r >= m.rows() || c >= m.cols())
                throw ShapeError("gather_cells: cell out of range");
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = m(r, c);
        }
    }
    std::vector<std::uint32_t> ids;
    for (Var v : mats)
        ids.push_back(v.id());
    std::vector<std::pair<int, int>> cc(cells.begin(), cells.end());
    return t.record(std::move(out), mats,
                    [ids = std::move(ids), cc = std::move(cc)](Tape& t, const Matrix& g) {
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                            if (!t.requires_grad(ids[k]))
                                continue;
                            const Matrix& m = t.value(ids[k]);
                            Matrix gm = Matrix::Zero(m.rows(), m.cols());
                            for (std::size_t i = 0; i < cc.size(); ++i)
                                gm(cc[i].first, cc[i].second) +=
                                    g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                            t.accumulate(ids[k], gm);
                        }
                    });
}

Var cross_entropy(Var logits, std::span<const int> targets)
{
    Tape& t = tape_of(logits);
    const Matrix& x = logits.value();
    if (static_cast<std::size_t>(x.rows()) != targets.size() || x.rows() == 0)
        throw ShapeError("cross_entropy: one target per logit row required");
    Matrix p = softmax_of(x);
    double loss = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const int y = targets[static_cast<std::size_t>(r)];
        if (y < 0 || y >= x.cols())
            throw ShapeError("cross_entropy: target out of range");
        const double m = x.row(r).maxCoeff();
        const double lse = m + std::log((x.row(r).array() - m).exp().sum());
        loss += lse - x(r, y);
    }
    const auto n = static_cast<double>(x.rows());
    const auto il = logits.id();
    std::vector<int> tg(targets.begin(), targets.end());
    return t.record(Matrix::Constant(1, 1, loss / n), {logits},
                    [il, p = std::move(p), tg = std::move(tg), n](Tape& t, const Matrix& g) {
                        Matrix ga = p;
                        for (std::size_t r = 0; r < tg.size(); ++r)
                            ga(static_cast<Eigen::Index>(r), tg[r]) -= 1.0;
                        t.accumulate(il, ga * (g(0, 0) / n));
                    });
}

Var mean_squared_error(Var pred, const Matrix& target)
{
    Tape& t = tape_of(pred);
    if (pred.rows() != target.rows() || pred.cols() != target.cols() || target.size() == 0)
        shape_fail("mean_squared_error", pred.value(), target);
    Matrix diff = pred.value() - target;
    const auto n = static_cast<double>(diff.size());
    const double loss = diff.squaredNorm() / n;
    const auto ip = pred.id();
    return t.record(Matrix::Constant(1, 1, loss), {pred},
                    [ip, diff = std::move(diff), n](Tape& t, const Matrix& g) {
                        t.accumulate(ip, diff * (2.0 * g(0, 0) / n));
                    });
}

Var binary_cross_entropy(Var logits, const Matrix& targets, const Matrix& mask)
{
    Tape& t = tape_of(logits);
    const Matrix& x = logits.value();
    if (x.rows() != targets.rows() || x.cols() != targets.cols())
        shape_fail("binary_cross_entropy", x, targets);
    if (x.rows() != mask.rows() || x.cols() != mask.cols())
        shape_fail("binary_cross_entropy", x, mask);
    double loss = 0.0;
    double count = 0.0;
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (mask.data()[i] == 0.0)
            continue;
        const double v = x.data()[i];
        const double y = targets.data()[i];
        loss += std::max(v, 0.0) - v * y + std::log1p(std::exp(-std::abs(v)));
        const double s = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        dx.data()[i] = s - y;
        count += 1.0;
    }
    const double denom = count > 0 ? count : 1.0;
    const auto il = logits.id();
    return t.record(Matrix::Constant(1, 1, loss / denom), {logits},
                    [il, dx = std::move(dx), denom](Tape& t, const Matrix& g) {
                        t.accumulate(il, dx * (g(0, 0) / denom));
                    });
}

} // namespace sift::num
