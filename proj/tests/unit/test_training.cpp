#include <doctest.h>

#include <cmath>
#include <numeric>

#include "flowguard/error.hpp"
#include "flowguard/evaluation.hpp"
#include "flowguard/training.hpp"
#include "helpers.hpp"

using namespace flowguard;
using fgtest::random_tensor;

namespace {

// Positives carry a shifted first feature, so the toy set is linearly separable.
std::vector<WindowSample> toy_set(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    SplitMix64 rng(seed);
    std::vector<WindowSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        WindowSample s;
        s.well_id = "A";
        s.t = i;
        s.target_date = fgtest::day0() + std::chrono::days{long(i)};
        s.y = static_cast<std::uint8_t>(i % 5 == 0);
        s.X = random_tensor(3, 2, rng, 0.5 * scale);
        for (std::size_t r = 0; r < 3; ++r) s.X(r, 0) += (s.y ? 2.0 : -2.0) * scale;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

ModelConfig small(ModelKind kind) {
    ModelConfig c;
    c.kind = kind;
    c.hidden_dim = 4;
    return c;
}

}  // namespace

TEST_CASE("weighted BCE hand values") {
    CHECK(weighted_bce(0.5, 1, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(weighted_bce(0.5, 1, 2.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
    CHECK(weighted_bce(0.3, 0, 1.0) == weighted_bce(0.3, 0, 7.0));
    CHECK(weighted_bce(0.3, 0, 1.0) == -std::log(0.7));
    CHECK_THROWS_AS((void)weighted_bce(0.5, 1, 0.0), ConfigError);
    // Clamping keeps the loss finite at the extremes.
    CHECK(std::isfinite(weighted_bce(0.0, 1, 1.0)));
    CHECK(std::isfinite(weighted_bce(1.0, 0, 1.0)));
    CHECK(weighted_bce(0.0, 1, 1.0) == doctest::Approx(-std::log(1e-7)));

    // beta = 1 is plain binary cross-entropy.
    SplitMix64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const double p = rng.uniform(0.01, 0.99);
        const std::uint8_t y = rng.bernoulli(0.5) ? 1 : 0;
        CHECK(weighted_bce(p, y, 1.0) == -(y * std::log(p) + (1 - y) * std::log(1 - p)));
    }
}

TEST_CASE("positive-sample gradient is linear in beta") {
    const std::vector<std::uint8_t> y = {1};
    std::vector<double> grads;
    for (double beta : {1.0, 2.0, 4.0}) {
        ad::Tape tape;
        ad::Var p = tape.parameter(Tensor::scalar(0.37));
        grads.push_back(tape.backward(weighted_bce(p, y, beta))[0].item());
    }
    CHECK(std::abs(grads[1] / grads[0] - 2.0) <= 1e-9);
    CHECK(std::abs(grads[2] / grads[0] - 4.0) <= 1e-9);
    CHECK(grads[0] == doctest::Approx(-1.0 / 0.37).epsilon(1e-12));
}

TEST_CASE("batch loss is the mean of per-sample losses") {
    const std::vector<std::uint8_t> y = {1, 0, 0, 1};
    const std::vector<double> p = {0.9, 0.2, 0.6, 0.1};
    ad::Tape tape;
    const double got = weighted_bce(tape.constant(Tensor(4, 1, p)), y, 3.0).value().item();
    double want = 0.0;
    for (std::size_t i = 0; i < 4; ++i) want += weighted_bce(p[i], y[i], 3.0);
    CHECK(got == doctest::Approx(want / 4.0).epsilon(1e-14));
}

TEST_CASE("beta from class counts") {
    std::vector<std::uint8_t> y(100, 0);
    for (int i = 0; i < 3; ++i) y[i] = 1;
    CHECK(compute_beta(y) == doctest::Approx(97.0 / 3.0));
    CHECK(compute_beta(std::vector<std::uint8_t>{0, 1, 1, 0}) == 1.0);
    CHECK_THROWS_AS((void)compute_beta(std::vector<std::uint8_t>{0, 0}), ConfigError);
    CHECK_THROWS_AS((void)compute_beta(std::vector<std::uint8_t>{1}), ConfigError);
}

TEST_CASE("validation split takes the latest samples for time splits") {
    const auto samples = toy_set(20, 1);
    std::vector<std::size_t> train = {5, 1, 9, 3, 7, 0, 2, 4, 6, 8};
    const ValidationSplit t = split_validation(samples, train, SplitKind::time, 0.2);
    CHECK(t.validation == std::vector<std::size_t>{8, 9});
    CHECK(t.fit.size() == 8);
    const ValidationSplit r = split_validation(samples, train, SplitKind::random, 0.2);
    CHECK(r.validation == std::vector<std::size_t>{6, 8});
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    const auto samples = toy_set(40, 2);
    const auto idx = all_indices(samples.size());
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    const Model init = init_model(small(ModelKind::lstm), 2, 3, 4);
    const TrainResult r = train(init, samples, idx, {}, nullptr, cfg);
    const auto a = init.named_parameters();
    const auto b = r.model.named_parameters();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].tensor == *b[i].tensor);
    CHECK(r.history.size() == 3);
}

TEST_CASE("training is deterministic") {
    const auto samples = toy_set(60, 3);
    const auto idx = all_indices(50);
    const std::vector<std::size_t> val = {50, 51, 52, 53, 54, 55, 56, 57, 58, 59};
    TrainConfig cfg;
    cfg.lr = 0.01;
    cfg.epochs = 5;
    cfg.batch_size = 16;
    cfg.seed = 77;
    const TrainResult a = train(init_model(small(ModelKind::lstm), 2, 3, 5), samples, idx, val, nullptr, cfg);
    const TrainResult b = train(init_model(small(ModelKind::lstm), 2, 3, 5), samples, idx, val, nullptr, cfg);
    CHECK(format_history(a.history) == format_history(b.history));
    CHECK(a.best_epoch == b.best_epoch);
    const auto pa = a.model.named_parameters();
    const auto pb = b.model.named_parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].tensor == *pb[i].tensor);
}

TEST_CASE("logistic baseline separates a separable set") {
    const auto samples = toy_set(100, 4);
    const auto idx = all_indices(samples.size());
    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.epochs = 100;
    cfg.batch_size = 16;
    const TrainResult r = train(init_model(small(ModelKind::logistic), 2, 3, 6), samples, idx, {}, nullptr, cfg);
    std::vector<const WindowSample*> ptrs;
    std::vector<std::uint8_t> y;
    for (const auto& s : samples) {
        ptrs.push_back(&s);
        y.push_back(s.y);
    }
    const auto scores = predict(r.model, ptrs, nullptr);
    const Confusion c = confusion_at_threshold(scores, y, 0.5);
    CHECK(c.fp + c.fn == 0);
}

TEST_CASE("LSTM overfits a small toy set") {
    const auto samples = toy_set(50, 5, 0.3);
    const auto idx = all_indices(samples.size());
    TrainConfig cfg;
    cfg.lr = 0.02;
    cfg.epochs = 150;
    cfg.batch_size = 10;
    const TrainResult r = train(init_model(small(ModelKind::lstm), 2, 3, 7), samples, idx, {}, nullptr, cfg);
    std::vector<const WindowSample*> ptrs;
    std::vector<std::uint8_t> y;
    for (const auto& s : samples) {
        ptrs.push_back(&s);
        y.push_back(s.y);
    }
    CHECK(roc_auc(predict(r.model, ptrs, nullptr), y) >= 0.99);
}

TEST_CASE("divergence aborts with the last finite parameters") {
    const auto samples = toy_set(20, 6, 1000.0);
    const auto idx = all_indices(samples.size());
    TrainConfig cfg;
    cfg.lr = 1e307;
    cfg.epochs = 5;
    cfg.batch_size = 20;
    try {
        (void)train(init_model(small(ModelKind::logistic), 2, 3, 8), samples, idx, {}, nullptr, cfg);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        for (const auto& p : e.last_finite().named_parameters()) CHECK(p.tensor->all_finite());
        CHECK(e.exit_code() == ExitCode::numeric);
    }
}

TEST_CASE("train config validation") {
    TrainConfig c;
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.clamp_eps = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TrainConfig{};
    c.beta = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
