#include <doctest.h>

#include <cmath>

#include "flowguard/autodiff.hpp"
#include "flowguard/error.hpp"
#include "helpers.hpp"

using namespace flowguard;
using namespace flowguard::ad;
using fgtest::random_tensor;

namespace {

// Weighted sum of every element so that a non-scalar op gets a non-trivial
// upstream gradient.
Var project(Tape& tape, Var v, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const auto [r, c] = v.shape();
    Var w = tape.constant(random_tensor(r, c, rng));
    return sum(mul(v, w));
}

}  // namespace

TEST_CASE("tensor basics") {
    Tensor t(2, 3, 1.5);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t(1, 2) == 1.5);
    CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
    CHECK_THROWS_AS((void)t.item(), ShapeError);
    CHECK(Tensor::scalar(4.0).item() == 4.0);
    t(0, 0) = NAN;
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("matmul values and shape errors") {
    Tape tape;
    Var a = tape.constant(Tensor(2, 2, {1, 2, 3, 4}));
    Var b = tape.constant(Tensor(2, 1, {5, 6}));
    const Tensor& c = matmul(a, b).value();
    CHECK(c(0, 0) == 17.0);
    CHECK(c(1, 0) == 39.0);
    CHECK_THROWS_AS((void)matmul(b, b), ShapeError);
    CHECK_THROWS_AS((void)add(a, tape.constant(Tensor(3, 1))), ShapeError);
}

TEST_CASE("non-finite results raise NumericError") {
    Tape tape;
    Var x = tape.constant(Tensor(1, 1, 0.0));
    CHECK_THROWS_AS((void)log(x), NumericError);
    Var big = tape.constant(Tensor(1, 1, 1000.0));
    CHECK_THROWS_AS((void)exp(big), NumericError);
}

TEST_CASE("per-primitive gradient checks") {
    SplitMix64 rng(7);
    const double tol = 1e-6;
    auto check_unary = [&](const char* name, auto op, double lo_shift = 0.0) {
        CAPTURE(name);
        Tensor x = random_tensor(3, 4, rng);
        for (double& v : x.data()) v += lo_shift;
        const double err = grad_check([&](Tape& t, std::span<const Var> p) { return project(t, op(p[0]), 11); },
                                      std::vector<Tensor>{x});
        CHECK(err < tol);
    };
    check_unary("sigmoid", [](Var v) { return sigmoid(v); });
    check_unary("tanh", [](Var v) { return tanh(v); });
    check_unary("exp", [](Var v) { return exp(v); });
    check_unary("log", [](Var v) { return log(v); }, 2.0);
    check_unary("leaky_relu", [](Var v) { return leaky_relu(v, 0.2); });
    check_unary("elu", [](Var v) { return elu(v); });
    check_unary("scale", [](Var v) { return scale(v, -2.5); });
    check_unary("add_scalar", [](Var v) { return add_scalar(v, 3.0); });
    check_unary("clamp", [](Var v) { return clamp(v, -0.5, 0.5); });
    check_unary("sum rows", [](Var v) { return sum(v, Axis::rows); });
    check_unary("mean cols", [](Var v) { return mean(v, Axis::cols); });
    check_unary("slice", [](Var v) { return slice(v, 1, 1, 3); });
    check_unary("gather", [](Var v) {
        const std::vector<std::size_t> idx = {2, 0, 2, 1};
        return gather_rows(v, idx);
    });
    check_unary("scatter", [](Var v) {
        const std::vector<std::size_t> idx = {1, 0, 1};
        return scatter_add_rows(v, idx, 2);
    });

    auto check_binary = [&](const char* name, auto op, Tensor a, Tensor b) {
        CAPTURE(name);
        const double err = grad_check(
            [&](Tape& t, std::span<const Var> p) { return project(t, op(p[0], p[1]), 13); }, std::vector<Tensor>{a, b});
        CHECK(err < tol);
    };
    check_binary("matmul", [](Var a, Var b) { return matmul(a, b); }, random_tensor(3, 4, rng), random_tensor(4, 2, rng));
    check_binary("add broadcast", [](Var a, Var b) { return add(a, b); }, random_tensor(3, 4, rng), random_tensor(1, 4, rng));
    check_binary("sub broadcast", [](Var a, Var b) { return sub(a, b); }, random_tensor(3, 4, rng), random_tensor(3, 1, rng));
    check_binary("mul", [](Var a, Var b) { return mul(a, b); }, random_tensor(3, 4, rng), random_tensor(3, 4, rng));
    check_binary("concat cols",
                 [](Var a, Var b) {
                     const std::vector<Var> parts = {a, b};
                     return concat(parts, 1);
                 },
                 random_tensor(3, 2, rng), random_tensor(3, 3, rng));
    check_binary("concat rows",
                 [](Var a, Var b) {
                     const std::vector<Var> parts = {a, b};
                     return concat(parts, 0);
                 },
                 random_tensor(2, 3, rng), random_tensor(1, 3, rng));

    SUBCASE("segment softmax") {
        const std::vector<std::size_t> seg = {0, 1, 0, 2, 1, 0};
        const double err = grad_check(
            [&](Tape& t, std::span<const Var> p) { return project(t, segment_softmax(p[0], seg, 3), 17); },
            std::vector<Tensor>{random_tensor(6, 1, rng, 3.0)});
        CHECK(err < tol);
    }
}

TEST_CASE("segment softmax sums to one and is shift invariant") {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t segments = 1 + rng.index(10);
        const std::size_t e = segments + rng.index(40);
        std::vector<std::size_t> seg(e);
        for (std::size_t i = 0; i < e; ++i) seg[i] = i < segments ? i : rng.index(segments);
        Tensor s = random_tensor(e, 1, rng, 20.0);
        Tensor shifted = s;
        std::vector<double> offset(segments);
        for (double& o : offset) o = rng.uniform(-50.0, 50.0);
        for (std::size_t i = 0; i < e; ++i) shifted[i] += offset[seg[i]];

        Tape tape;
        const Tensor a = segment_softmax(tape.constant(s), seg, segments).value();
        const Tensor b = segment_softmax(tape.constant(shifted), seg, segments).value();
        std::vector<double> total(segments, 0.0);
        for (std::size_t i = 0; i < e; ++i) {
            total[seg[i]] += a[i];
            CHECK(std::abs(a[i] - b[i]) <= 1e-12);
        }
        for (double t : total) CHECK(std::abs(t - 1.0) <= 1e-12);
    }
}

TEST_CASE("backward accumulates over reused values and clears the tape") {
    Tape tape;
    Var x = tape.parameter(Tensor(1, 1, 3.0));
    Var y = mul(x, x);  // x^2
    Var z = add(y, x);  // x^2 + x
    const auto g = tape.backward(z);
    REQUIRE(g.size() == 1);
    CHECK(g[0].item() == doctest::Approx(7.0));
    CHECK(tape.size() == 0);
}

TEST_CASE("unused parameters get zero gradients") {
    Tape tape;
    Var a = tape.parameter(Tensor(2, 2, 1.0));
    Var b = tape.parameter(Tensor(1, 3, 1.0));
    const auto g = tape.backward(sum(a));
    REQUIRE(g.size() == 2);
    CHECK(g[1] == Tensor(1, 3, 0.0));
    CHECK(g[0] == Tensor(2, 2, 1.0));
    (void)b;
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    Var a = tape.parameter(Tensor(2, 2, 1.0));
    CHECK_THROWS_AS((void)tape.backward(a), ShapeError);
}

TEST_CASE("SplitMix64 reference values and substreams") {
    // Reference outputs of SplitMix64 seeded with 0.
    SplitMix64 rng(0);
    CHECK(rng.next_u64() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next_u64() == 0x6E789E6AA1B965F4ULL);
    CHECK(SplitMix64::derive(1, 2) != SplitMix64::derive(1, 3));
    CHECK(SplitMix64::derive(1, 2) == SplitMix64::derive(1, 2));
    SplitMix64 u(42);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK((x >= 0.0 && x < 1.0));
        CHECK(u.index(7) < 7);
    }
}

TEST_CASE("primitive hand values") {
    Tape tape;
    CHECK(sigmoid(tape.constant(Tensor::scalar(0.0))).value().item() == 0.5);
    CHECK(leaky_relu(tape.constant(Tensor::scalar(-1.0)), 0.2).value().item() == doctest::Approx(-0.2));
    const std::vector<Var> parts = {tape.constant(Tensor::column_vector({1, 2})),
                                    tape.constant(Tensor::column_vector({3}))};
    CHECK(concat(parts, 0).value() == Tensor::column_vector({1, 2, 3}));

    const std::vector<std::size_t> two = {0, 0};
    const Tensor eq = segment_softmax(tape.constant(Tensor::column_vector({1.5, 1.5})), two, 1).value();
    CHECK(eq == Tensor::column_vector({0.5, 0.5}));
    const std::vector<std::size_t> one = {0};
    CHECK(segment_softmax(tape.constant(Tensor::column_vector({-4.0})), one, 1).value().item() == 1.0);
    const Tensor w = segment_softmax(tape.constant(Tensor::column_vector({0.0, std::log(3.0)})), two, 1).value();
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("hand gradients") {
    {
        Tape tape;
        Var x = tape.parameter(Tensor::scalar(3.0));
        CHECK(tape.backward(mul(x, x))[0].item() == 6.0);
    }
    {
        Tape tape;
        Var x = tape.parameter(Tensor(2, 3, 0.0));
        const auto g = tape.backward(sum(sigmoid(x)));
        for (double v : g[0].data()) CHECK(v == 0.25);
    }
}

TEST_CASE("grad_check on a quadratic form and a constant") {
    SplitMix64 rng(21);
    const Tensor a = random_tensor(4, 4, rng);
    const double err = grad_check(
        [&](Tape& t, std::span<const Var> p) {
            Var x = p[0];
            return sum(mul(x, matmul(t.constant(a), x)));
        },
        std::vector<Tensor>{random_tensor(4, 1, rng)});
    CHECK(err < 1e-7);
    const double zero = grad_check([&](Tape& t, std::span<const Var>) { return t.constant(Tensor::scalar(2.0)); },
                                   std::vector<Tensor>{random_tensor(3, 1, rng)});
    CHECK(zero == 0.0);
}
