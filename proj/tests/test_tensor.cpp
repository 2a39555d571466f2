#include "oracles.h"

#include "sift/error.h"
#include "sift/grad_check.h"
#include "sift/tensor.h"

#include <doctest.h>

using namespace sift;
using namespace sift::num;

TEST_SUITE("tensor") {

TEST_CASE("matmul matches a triple loop")
{
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        const Matrix a = oracle::random_matrix(rng, 2, 3), b = oracle::random_matrix(rng, 3, 1);
        const Matrix got = matmul(t.constant(a), t.constant(b)).value();
        const Matrix want = oracle::matmul(a, b);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("shape mismatches throw")
{
    Tape t;
    Var a = t.constant(Matrix::Zero(2, 3)), b = t.constant(Matrix::Zero(2, 3));
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    CHECK_THROWS_AS(add(a, t.constant(Matrix::Zero(3, 2))), ShapeError);
    CHECK_THROWS_AS(add_row(a, t.constant(Matrix::Zero(1, 2))), ShapeError);
}

TEST_CASE("softmax and log-softmax rows")
{
    Rng rng(3);
    Tape t;
    const Matrix a = oracle::random_matrix(rng, 3, 5, -4, 4);
    const Matrix s = softmax_rows(t.constant(a)).value();
    CHECK((s - oracle::softmax_rows(a)).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix ls = log_softmax_rows(t.constant(a)).value();
    CHECK((ls.array().exp().matrix() - s).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("layer norm matches the two-pass formula")
{
    Rng rng(5);
    Tape t;
    const Matrix a = oracle::random_matrix(rng, 2, 4, -3, 3);
    const Matrix got = layer_norm(t.constant(a)).value();
    for (int i = 0; i < 2; ++i) {
        const auto want = oracle::layer_norm(oracle::row(a, i));
        for (int k = 0; k < 4; ++k)
            CHECK(got(i, k) == doctest::Approx(want[static_cast<std::size_t>(k)]).epsilon(1e-12));
    }
}

TEST_CASE("layer norm gradient on a random 4-vector")
{
    Rng rng(8);
    Parameter x{"x", oracle::random_matrix(rng, 1, 4, -2, 2)};
    const Matrix w = oracle::random_matrix(rng, 1, 4);
    Parameter* inputs[] = {&x};
    const auto res = grad_check(
        [&](Tape& t) { return sum(hadamard(layer_norm(t.param(x)), t.constant(w))); }, inputs);
    CHECK(res.checked == 4);
    CHECK(res.max_rel_error < 1e-6);
}

TEST_CASE("cross entropy on hand-computed logits")
{
    Tape t;
    Matrix logits(2, 2);
    logits << 0.0, std::log(3.0), 1.0, 1.0;
    const int targets[] = {1, 0};
    const double got = cross_entropy(t.constant(logits), targets).scalar();
    CHECK(got == doctest::Approx((-std::log(0.75) - std::log(0.5)) / 2).epsilon(1e-14));
}

TEST_CASE("backward of sum of squares is twice the input")
{
    Rng rng(1);
    Tape t;
    const Matrix a = oracle::random_matrix(rng, 3, 2);
    Var x = t.leaf(a);
    t.backward(sum(hadamard(x, x)));
    CHECK((x.grad() - 2.0 * a).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("repeated parameter reads share one leaf and accumulate")
{
    Parameter p{"p", Matrix::Constant(1, 1, 3.0)};
    Tape t;
    Var a = t.param(p), b = t.param(p);
    CHECK(a.id() == b.id());
    t.backward(hadamard(a, b));
    const auto grads = t.parameter_gradients();
    REQUIRE(grads.size() == 1);
    CHECK(grads[0].first == &p);
    CHECK(grads[0].second(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("frozen reads take no gradient")
{
    Parameter p{"p", Matrix::Ones(2, 2)};
    Tape t;
    Var f = t.frozen(p);
    CHECK_FALSE(f.requires_grad());
    Var x = t.leaf(Matrix::Ones(2, 2));
    t.backward(sum(hadamard(f, x)));
    CHECK(t.parameter_gradients().empty());
}

TEST_CASE("dropout")
{
    Rng rng(4);
    const Matrix a = oracle::random_matrix(rng, 6, 6, 1, 2);
    Tape t;
    Var x = t.constant(a);
    CHECK((dropout(x, 0.5, false, 1).value() - a).norm() == 0.0);
    CHECK((dropout(x, 0.0, true, 1).value() - a).norm() == 0.0);
    const Matrix d1 = dropout(x, 0.25, true, 9).value();
    const Matrix d2 = dropout(x, 0.25, true, 9).value();
    CHECK((d1 - d2).norm() == 0.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            CHECK((d1(i, j) == 0.0 || std::abs(d1(i, j) - a(i, j) / 0.75) < 1e-15));
    CHECK_THROWS_AS(dropout(x, 1.0, true, 1), ValidationError);
    CHECK_THROWS_AS(dropout(x, -0.1, true, 1), ValidationError);
}

TEST_CASE("row max pool sends ties to the first argmax")
{
    Matrix a(3, 2);
    a << 1, 5, 2, 5, 2, 0;
    Tape t;
    Var x = t.leaf(a);
    Var m = row_max_pool(x);
    CHECK(m.value()(0, 0) == 2.0);
    CHECK(m.value()(0, 1) == 5.0);
    t.backward(sum(m));
    Matrix want = Matrix::Zero(3, 2);
    want(1, 0) = 1.0;
    want(0, 1) = 1.0;
    CHECK((x.grad() - want).norm() == 0.0);
}

TEST_CASE("lookup rows accumulates repeated indices")
{
    Tape t;
    Var table = t.leaf(Matrix::Ones(3, 2));
    const int idx[] = {2, 0, 2};
    t.backward(sum(lookup_rows(table, idx)));
    CHECK(table.grad()(2, 0) == 2.0);
    CHECK(table.grad()(0, 1) == 1.0);
    CHECK(table.grad()(1, 1) == 0.0);
}

TEST_CASE("binary cross entropy with an empty mask is zero")
{
    Tape t;
    Var x = t.leaf(Matrix::Ones(2, 2));
    Var l = binary_cross_entropy(x, Matrix::Zero(2, 2), Matrix::Zero(2, 2));
    CHECK(l.scalar() == 0.0);
    Var l2 = binary_cross_entropy(x, Matrix::Zero(2, 2), Matrix::Ones(2, 2));
    CHECK(l2.scalar() == doctest::Approx(std::log1p(std::exp(1.0))));
}

TEST_CASE("grad check excludes stencils that cross a relu kink")
{
    Parameter x{"x", Matrix(1, 3)};
    x.value << 0.0, 0.5, -0.5;
    Parameter* inputs[] = {&x};
    const auto res = grad_check([&](Tape& t) { return sum(relu(t.param(x))); }, inputs);
    REQUIRE(res.excluded.size() == 1);
    CHECK(res.excluded[0].index == 0);
    CHECK(res.checked == 2);
    CHECK(res.max_rel_error < 1e-9);
}

TEST_CASE("grad check reports a wrong backward")
{
    Parameter x{"x", Matrix::Constant(1, 2, 0.7)};
    Parameter* inputs[] = {&x};
    const auto res = grad_check(
        [&](Tape& t) {
            Var v = t.param(x);
            // Forward doubles, backward claims the identity.
            Var y = t.record(2.0 * v.value(), {v}, [v](Tape& tape, const Matrix& g) { tape.accumulate(v, g); });
            return sum(y);
        },
        inputs);
    CHECK(res.max_rel_error > 0.4);
}

TEST_CASE("store helpers")
{
    ParameterStore s;
    s.add_glorot("a.w", 4, 6, 1);
    s.add_zeros("a.b", 1, 4);
    s.add_constant("c", 2, 2, 1.0);
    CHECK(s.count() == 24 + 4 + 4);
    CHECK(s.count("a.") == 28);
    CHECK_FALSE(s.at("a.b").decay);
    CHECK(s.at("a.w").decay);
    const double bound = std::sqrt(6.0 / 10.0);
    CHECK(s.at("a.w").value.cwiseAbs().maxCoeff() <= bound);
    ParameterStore copy = s;
    copy.at("c").value(0, 0) = 5.0;
    CHECK(s.at("c").value(0, 0) == 1.0);
}

TEST_CASE("seed derivation separates tags and indices")
{
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, std::uint64_t{0}) != derive_seed(1, std::uint64_t{1}));
    Rng a(7), b(7);
    for (int i = 0; i < 10; ++i)
        CHECK(a.next() == b.next());
    Rng r(2);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.below(7);
        CHECK(v < 7);
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
    }
}

}
