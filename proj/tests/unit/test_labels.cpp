#include <doctest.h>

#include <cmath>

#include "flowguard/error.hpp"
#include "flowguard/labels.hpp"
#include "helpers.hpp"

using namespace flowguard;

namespace {

FeatureMatrix hand_matrix(std::vector<std::string> names, std::size_t rows, std::vector<double> data) {
    FeatureMatrix m;
    m.well_id = "W";
    for (const auto& n : names) m.registry.kinds.push_back(column_kind_for(n));
    m.registry.names = std::move(names);
    m.values = Tensor(rows, m.registry.size(), std::move(data));
    for (std::size_t t = 0; t < rows; ++t) m.timestamps.push_back(fgtest::day0() + std::chrono::days{long(t)});
    return m;
}

double alt(std::size_t t) { return t % 2 == 0 ? 1.0 : -1.0; }

std::vector<std::size_t> fired_at(const RuleMask& m) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < m.size(); ++t) {
        if (m[t]) out.push_back(t);
    }
    return out;
}

using Steps = std::vector<std::size_t>;

}  // namespace

TEST_CASE("rule config validation") {
    RuleConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.drop_frac = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RuleConfig{};
    cfg.gor_m = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("production drop on hand values") {
    // columns: oil, trailing mean, hours
    const FeatureMatrix m = hand_matrix({"oil_vol", "oil_vol_rmean", "on_stream_hrs"}, 3,
                                        {100, 100, 24, 45, 90, 24, 45, 80, 2});
    const RuleMask mask = rule_production_drop(m, RuleConfig{});
    CHECK(mask == RuleMask{0, 1, 0});
    CHECK_THROWS_AS((void)rule_production_drop(hand_matrix({"oil_vol", "on_stream_hrs"}, 1, {1, 24}), RuleConfig{}),
                    RegistryError);
}

TEST_CASE("production drop fires only at the constructed step") {
    fgtest::SeriesBuilder b;
    b.n = 40;
    b.oil.assign(40, 100.0);
    b.oil[20] = 45.0;
    const FeatureMatrix m = assemble_feature_matrix(b.build(), FeatureConfig{});
    CHECK(fired_at(rule_production_drop(m, RuleConfig{})) == Steps{20});

    b.hours.assign(40, 24.0);
    b.hours[20] = 2.0;
    const FeatureMatrix down = assemble_feature_matrix(b.build(), FeatureConfig{});
    CHECK(fired_at(rule_production_drop(down, RuleConfig{})).empty());

    fgtest::SeriesBuilder flat;
    flat.n = 40;
    const FeatureMatrix f = assemble_feature_matrix(flat.build(), FeatureConfig{});
    CHECK(fired_at(weak_labels(f, RuleConfig{}).y).empty());
}

TEST_CASE("drop rule firing count is monotone in drop_frac") {
    SplitMix64 rng(77);
    fgtest::SeriesBuilder b;
    b.n = 300;
    for (std::size_t t = 0; t < b.n; ++t) b.oil.push_back(rng.uniform(100.0, 1000.0));
    const FeatureMatrix m = assemble_feature_matrix(b.build(), FeatureConfig{});
    std::size_t prev = m.rows() + 1;
    for (double frac = 0.05; frac < 0.95; frac += 0.05) {
        RuleConfig cfg;
        cfg.drop_frac = frac;
        const auto n = fired_at(rule_production_drop(m, cfg)).size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("pressure-flow rule fires only at the constructed step") {
    fgtest::SeriesBuilder b;
    b.n = 70;
    for (std::size_t t = 0; t < b.n; ++t) {
        // Alternating noise keeps |z| near 1 before the event.
        b.oil.push_back(1000.0 + alt(t) - (t >= 40 ? 50.0 : 0.0));
        b.whp.push_back(40.0 + 0.1 * alt(t) + (t >= 40 ? 2.0 : 0.0));
    }
    const FeatureMatrix m = assemble_feature_matrix(b.build(), FeatureConfig{});
    CHECK(fired_at(rule_pressure_flow(m, RuleConfig{})) == Steps{40});

    // Both deltas positive: oil rises while pressure rises.
    fgtest::SeriesBuilder up = b;
    for (std::size_t t = 40; t < up.n; ++t) up.oil[t] += 100.0;
    CHECK(fired_at(rule_pressure_flow(assemble_feature_matrix(up.build(), FeatureConfig{}), RuleConfig{})).empty());

    fgtest::SeriesBuilder flat;
    flat.n = 40;
    CHECK(fired_at(rule_pressure_flow(assemble_feature_matrix(flat.build(), FeatureConfig{}), RuleConfig{})).empty());
}

TEST_CASE("pressure-flow z-scores use only preceding deltas") {
    // d_oil history [_, 1, -1, 1, -1] has mean 0, std 1; at t=5 the drop of -3.1
    // gives z=-3.1. d_whp history [_, 1, -1, 1, -1] then +2.4 gives z=+2.4.
    const std::vector<double> d_oil = {0, 1, -1, 1, -1, -3.1};
    const std::vector<double> d_whp = {0, 1, -1, 1, -1, 2.4};
    std::vector<double> data;
    for (std::size_t t = 0; t < 6; ++t) {
        data.insert(data.end(), {d_oil[t], d_whp[t], 24.0});
    }
    const FeatureMatrix m = hand_matrix({"d_oil_vol", "d_wellhead_pressure", "on_stream_hrs"}, 6, data);
    CHECK(fired_at(rule_pressure_flow(m, RuleConfig{})) == Steps{5});
    RuleConfig strict;
    strict.zscore_pressure = 2.5;
    CHECK(fired_at(rule_pressure_flow(m, strict)).empty());
}

TEST_CASE("GOR rule fires only at the spike") {
    fgtest::SeriesBuilder b;
    b.n = 80;
    b.oil.assign(80, 1000.0);
    for (std::size_t t = 0; t < b.n; ++t) b.gas.push_back(1000.0 * (10.0 + 0.5 * alt(t)));
    b.gas[50] = 1000.0 * 30.0;
    const FeatureMatrix m = assemble_feature_matrix(b.build(), FeatureConfig{});
    CHECK(fired_at(rule_gor_deviation(m, RuleConfig{})) == Steps{50});

    fgtest::SeriesBuilder flat;
    flat.n = 40;
    CHECK(fired_at(rule_gor_deviation(assemble_feature_matrix(flat.build(), FeatureConfig{}), RuleConfig{})).empty());
}

TEST_CASE("GOR rule threshold is strict") {
    const FeatureMatrix m = hand_matrix({"gor", "gor_rmean", "gor_rstd", "on_stream_hrs"}, 3,
                                        {10, 10, 1, 24, 13, 10, 1, 24, 13.5, 10, 1, 24});
    CHECK(rule_gor_deviation(m, RuleConfig{}) == RuleMask{0, 0, 1});
}

TEST_CASE("aggregation is elementwise OR") {
    const std::vector<RuleMask> masks = {{0, 1, 0}, {0, 0, 0}, {1, 1, 0}};
    const LabelFrame f = aggregate_labels(masks);
    CHECK(f.y == std::vector<std::uint8_t>{1, 1, 0});
    CHECK(f.rule_count() == 3);
    CHECK(f.fired(1, 0));
    CHECK_FALSE(f.fired(1, 1));

    const std::vector<RuleMask> bad = {{0, 1}, {0}};
    CHECK_THROWS_AS((void)aggregate_labels(bad), DataError);

    SplitMix64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 1 + rng.index(5);
        const std::size_t T = rng.index(50);
        std::vector<RuleMask> ms(k, RuleMask(T));
        for (auto& m : ms) {
            for (auto& v : m) v = rng.bernoulli(0.2) ? 1 : 0;
        }
        const LabelFrame lf = aggregate_labels(ms);
        for (std::size_t t = 0; t < T; ++t) {
            std::uint8_t any = 0;
            for (const auto& m : ms) any |= m[t];
            CHECK(lf.y[t] == any);
        }
        // Adding a rule never clears a label.
        ms.push_back(RuleMask(T, 0));
        for (auto& v : ms.back()) v = rng.bernoulli(0.3) ? 1 : 0;
        const LabelFrame more = aggregate_labels(ms);
        for (std::size_t t = 0; t < T; ++t) CHECK(more.y[t] >= lf.y[t]);
    }
}

TEST_CASE("weak labels are deterministic and round trip through the audit table") {
    SplitMix64 rng(31);
    fgtest::SeriesBuilder b;
    b.n = 200;
    for (std::size_t t = 0; t < b.n; ++t) {
        b.oil.push_back(rng.bernoulli(0.05) ? 100.0 : 1000.0 + rng.uniform(-20, 20));
        b.whp.push_back(40.0 + rng.uniform(-1, 1));
    }
    b.well = "W7";
    const FeatureMatrix m = assemble_feature_matrix(b.build(), FeatureConfig{});
    const LabelFrame a = weak_labels(m, RuleConfig{});
    const LabelFrame c = weak_labels(m, RuleConfig{});
    CHECK(a.y == c.y);
    CHECK(a.rule_mask == c.rule_mask);
    CHECK(a.rule_names == std::vector<std::string>{"production_drop", "pressure_flow", "gor_deviation"});
    std::size_t positives = 0;
    for (auto v : a.y) positives += v;
    CHECK(positives > 0);

    const std::vector<LabelFrame> frames = {a};
    const auto back = parse_label_table(format_label_table(frames));
    REQUIRE(back.size() == 1);
    CHECK(back[0].well_id == "W7");
    CHECK(back[0].y == a.y);
    CHECK(back[0].rule_mask == a.rule_mask);
    CHECK(back[0].timestamps == a.timestamps);
}
