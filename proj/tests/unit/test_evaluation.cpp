#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flowguard/error.hpp"
#include "flowguard/evaluation.hpp"
#include "helpers.hpp"

using namespace flowguard;

namespace {

// Pair counting with ties as one half; exact in double for these sizes.
double brute_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    long twice = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        pos += y[i];
        neg += 1 - y[i];
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            twice += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
        }
    }
    return static_cast<double>(twice) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

void random_instance(SplitMix64& rng, std::vector<double>& s, std::vector<std::uint8_t>& y) {
    const std::size_t n = 2 + rng.index(199);
    s.resize(n);
    y.resize(n);
    const double levels = 1.0 + static_cast<double>(rng.index(20));
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = std::floor(rng.uniform() * levels) / levels;  // coarse grid forces ties
        y[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
}

EvalReport sample_report(const std::string& model, const std::string& split, std::size_t n) {
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = static_cast<double>(i) / static_cast<double>(n);
        y[i] = i % 3 == 0 ? 1 : 0;
    }
    ShiftReport shift;
    shift.train_anomaly_rate = 0.04;
    shift.test_anomaly_rate = 0.12;
    return build_report(RunScores{model, s, y}, split, shift, 0.5, 7, "fp");
}

}  // namespace

TEST_CASE("AUC worked example and trivial cases") {
    const std::vector<double> s = {0.2, 0.6, 0.4, 0.8};
    const std::vector<std::uint8_t> y = {0, 0, 1, 1};
    CHECK(roc_auc(s, y) == 0.75);
    CHECK(roc_auc(std::vector<double>{0.1, 0.9}, std::vector<std::uint8_t>{0, 1}) == 1.0);
    CHECK(roc_auc(std::vector<double>(6, 0.3), std::vector<std::uint8_t>{0, 1, 0, 1, 1, 0}) == 0.5);
    CHECK_THROWS_AS((void)roc_auc(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}), UndefinedMetricError);
}

TEST_CASE("AUC matches pair counting") {
    SplitMix64 rng(123);
    std::vector<double> s;
    std::vector<std::uint8_t> y;
    for (int trial = 0; trial < 300; ++trial) {
        random_instance(rng, s, y);
        const double auc = roc_auc(s, y);
        CHECK(auc == brute_auc(s, y));
        CHECK(std::abs(trapezoid_area(curves(s, y).roc) - auc) <= 1e-9);
        // Strictly increasing transforms change nothing.
        std::vector<double> t = s;
        for (double& v : t) v = std::exp(3.0 * v) - 2.0;
        CHECK(roc_auc(t, y) == auc);
    }
}

TEST_CASE("confusion at threshold") {
    const Confusion c = confusion_at_threshold(std::vector<double>{0.6, 0.4}, std::vector<std::uint8_t>{1, 0}, 0.5);
    CHECK(c.tp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.precision == 1.0);
    CHECK(c.recall == 1.0);
    CHECK(c.f1 == 1.0);

    const std::vector<double> s = {0.5, 0.2, 1.0, 0.7};
    const std::vector<std::uint8_t> y = {1, 0, 1, 0};
    CHECK(confusion_at_threshold(s, y, 0.0).recall == 1.0);
    const Confusion top = confusion_at_threshold(s, y, 1.0);
    CHECK(top.tp == 1);
    CHECK(top.fp == 0);
    const Confusion inclusive = confusion_at_threshold(s, y, 0.5);
    CHECK(inclusive.tp == 2);  // 0.5 >= 0.5 is flagged
    CHECK(inclusive.fp == 1);
    CHECK(inclusive.precision == doctest::Approx(2.0 / 3.0));

    const Confusion none = confusion_at_threshold(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 0}, 0.5);
    CHECK(none.precision == 0.0);
    CHECK_FALSE(none.precision_defined);
    CHECK_THROWS_AS((void)confusion_at_threshold(s, y, 1.5), ConfigError);

    SplitMix64 rng(4);
    std::vector<double> rs;
    std::vector<std::uint8_t> ry;
    for (int trial = 0; trial < 100; ++trial) {
        random_instance(rng, rs, ry);
        const Confusion k = confusion_at_threshold(rs, ry, rng.uniform());
        CHECK(k.total() == rs.size());
        if (k.tp + k.fp > 0) CHECK(k.precision == double(k.tp) / double(k.tp + k.fp));
        CHECK(k.recall == double(k.tp) / double(k.tp + k.fn));
    }
}

TEST_CASE("curves") {
    const std::vector<double> s = {0.2, 0.6, 0.4, 0.8};
    const std::vector<std::uint8_t> y = {0, 0, 1, 1};
    const Curves c = curves(s, y);
    REQUIRE(c.roc.size() >= 2);
    CHECK(c.roc.front().fpr == 0.0);
    CHECK(c.roc.front().tpr == 0.0);
    CHECK(c.roc.back().fpr == 1.0);
    CHECK(c.roc.back().tpr == 1.0);
    bool through = false;
    for (const auto& p : c.roc) through = through || (p.fpr == 0.5 && p.tpr == 1.0);
    CHECK(through);
    for (std::size_t i = 1; i < c.roc.size(); ++i) {
        CHECK(c.roc[i].threshold < c.roc[i - 1].threshold);
        CHECK(c.roc[i].fpr >= c.roc[i - 1].fpr);
        CHECK(c.roc[i].tpr >= c.roc[i - 1].tpr);
    }
    CHECK(c.pr.back().recall == 1.0);

    const Curves perfect = curves(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<std::uint8_t>{0, 0, 1, 1});
    for (const auto& p : perfect.pr) CHECK(p.precision == 1.0);

    CHECK(format_roc_table(c.roc).rfind("threshold,fpr,tpr\n", 0) == 0);
    CHECK(format_pr_table(c.pr).rfind("threshold,precision,recall\n", 0) == 0);
}

TEST_CASE("report serialization and comparison table") {
    const EvalReport r = sample_report("LSTM", "time", 90);
    CHECK(r.n_samples == 90);
    CHECK(r.n_positive == 30);
    CHECK(r.recall_anomaly == r.confusion.recall);
    CHECK(r.anomaly_rate_test == 0.12);
    const EvalReport back = EvalReport::from_json(r.to_json());
    CHECK(back == r);
    CHECK(back.to_json() == r.to_json());

    std::vector<EvalReport> reports;
    for (const char* m : {"Logistic (flattened)", "LSTM", "Temporal GAT (hierarchy only)", "Temporal GAT (peer)"}) {
        reports.push_back(sample_report(m, "random", 90));
        reports.push_back(sample_report(m, "time", 60));
    }
    CHECK_NOTHROW(check_comparable(reports));
    const std::string table = comparison_table(reports);
    for (const char* col : {"Split", "Model", "ROC-AUC", "Precision (Anomaly)", "Recall (Anomaly)", "F1-score"}) {
        CHECK(table.find(col) != std::string::npos);
    }
    CHECK(table.find("Temporal GAT (hierarchy only)") != std::string::npos);
    CHECK(!comparison_json(reports).empty());

    reports.push_back(sample_report("Other", "time", 61));
    CHECK_THROWS_AS(check_comparable(reports), DataError);

    const std::vector<EvalReport> one = {sample_report("LSTM", "time", 30)};
    CHECK(comparison_table(one).find("LSTM") != std::string::npos);
}
