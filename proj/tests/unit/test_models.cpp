#include <doctest.h>

#include <cmath>

#include "flowguard/error.hpp"
#include "flowguard/models.hpp"
#include "flowguard/training.hpp"
#include "helpers.hpp"

using namespace flowguard;
using fgtest::random_tensor;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Topology three_wells() {
    Topology t;
    for (const char* w : {"A", "B", "C"}) t.wells[w] = WellPlacement{"F", "X"};
    return t;
}

WindowSample sample_for(const std::string& well, std::size_t r, std::size_t f, SplitMix64& rng) {
    WindowSample s;
    s.well_id = well;
    s.t = r;
    s.target_date = fgtest::day0();
    s.X = random_tensor(r, f, rng);
    return s;
}

ModelConfig config(ModelKind kind, std::size_t gat_dim = 3) {
    ModelConfig c;
    c.kind = kind;
    c.hidden_dim = 4;
    c.gat_dim = gat_dim;
    return c;
}

}  // namespace

TEST_CASE("zero parameters give one half") {
    SplitMix64 rng(1);
    const WindowSample s = sample_for("A", 4, 3, rng);
    const ProductionGraph g = build_graph(three_wells());
    const NodeFeatures nf{random_tensor(g.node_count(), 3, rng), NodeFeatureMode::window};
    CHECK(logistic_baseline(s, zero_model(config(ModelKind::logistic), 3, 4)) == 0.5);
    CHECK(lstm_baseline_forward(s, zero_model(config(ModelKind::lstm), 3, 4)) == 0.5);
    CHECK(temporal_gat_forward(s, g, nf, zero_model(config(ModelKind::temporal_gat), 3, 4)) == 0.5);
}

TEST_CASE("scores stay strictly inside (0, 1)") {
    SplitMix64 rng(2);
    const ProductionGraph g = build_graph(three_wells());
    const Model m = init_model(config(ModelKind::temporal_gat), 3, 4, 9);
    for (int trial = 0; trial < 20; ++trial) {
        const WindowSample s = sample_for("B", 4, 3, rng);
        const NodeFeatures nf{random_tensor(g.node_count(), 3, rng, 5.0), NodeFeatureMode::window};
        const double y = temporal_gat_forward(s, g, nf, m);
        CHECK(y > 0.0);
        CHECK(y < 1.0);
        CHECK(temporal_gat_forward(s, g, nf, m) == y);
    }
}

TEST_CASE("logistic baseline is sigmoid of a flattened dot product") {
    SplitMix64 rng(3);
    const WindowSample s = sample_for("A", 2, 3, rng);
    Model m = init_model(config(ModelKind::logistic), 3, 2, 4);
    m.logistic.b = Tensor::scalar(0.3);
    double z = 0.3;
    for (std::size_t i = 0; i < 6; ++i) z += m.logistic.w[i] * s.X[i];
    CHECK(logistic_baseline(s, m) == doctest::Approx(sig(z)).epsilon(1e-14));
}

TEST_CASE("LSTM cell hand evaluation") {
    LstmParams p;
    // D = 2, H = 2; gate blocks input, forget, candidate, output.
    p.w_input = Tensor(2, 8, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8,  //
                              0.2, 0.1, -0.1, 0.3, 0.2, -0.4, 0.5, 0.6});
    p.w_hidden = Tensor(2, 8, 0.05);
    p.bias = Tensor(1, 8, {0, 0, 1, 1, 0, 0, 0, 0});
    const Tensor x(1, 2, {1.0, -2.0});
    double g[8];
    for (int j = 0; j < 8; ++j) g[j] = x[0] * p.w_input(0, j) + x[1] * p.w_input(1, j) + p.bias(0, j);
    const Tensor h = lstm_sequence(x, p);
    for (int k = 0; k < 2; ++k) {
        const double i = sig(g[k]), o = sig(g[6 + k]), cand = std::tanh(g[4 + k]);
        const double c = i * cand;  // c0 = 0, forget gate irrelevant
        CHECK(h(0, k) == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
    }

    CHECK(lstm_sequence(Tensor(5, 2, 0.0), LstmParams{Tensor(2, 8, 0.0), Tensor(2, 8, 0.0), Tensor(1, 8, 0.0)}) ==
          Tensor(1, 2, 0.0));

    Tensor three(3, 2, 0.5), six(6, 2, 0.5);
    CHECK(lstm_sequence(three, p) != lstm_sequence(six, p));
}

TEST_CASE("graph embedding width zero reduces to the LSTM") {
    SplitMix64 rng(5);
    const ProductionGraph g = build_graph(three_wells());
    const Model gat = init_model(config(ModelKind::temporal_gat, 0), 3, 4, 17);
    Model lstm = zero_model(config(ModelKind::lstm), 3, 4);
    lstm.lstm = gat.lstm;
    lstm.head = gat.head;
    for (int trial = 0; trial < 10; ++trial) {
        const WindowSample s = sample_for("C", 4, 3, rng);
        const NodeFeatures nf{random_tensor(g.node_count(), 3, rng), NodeFeatureMode::window};
        CHECK(temporal_gat_forward(s, g, nf, gat) == lstm_baseline_forward(s, lstm));
    }
}

TEST_CASE("attention coefficients") {
    SplitMix64 rng(6);
    const Topology t = three_wells();
    for (bool peer : {false, true}) {
        const ProductionGraph g = build_graph(t, GraphOptions{peer, false});
        const Model m = init_model(config(ModelKind::temporal_gat), 3, 4, 8);
        const NodeFeatures nf{random_tensor(g.node_count(), 3, rng), NodeFeatureMode::window};
        const Tensor alpha = attention_coefficients(g, nf, m.gat);
        std::vector<double> total(g.node_count(), 0.0);
        for (std::size_t e = 0; e < g.edge_count(); ++e) total[g.edges()[e].dst] += alpha[e];
        for (double s : total) CHECK(std::abs(s - 1.0) <= 1e-12);
    }

    // Identical transformed neighbors share attention equally.
    const ProductionGraph g = build_graph(three_wells(), GraphOptions{false, false});
    const Model m = init_model(config(ModelKind::temporal_gat), 3, 4, 8);
    const NodeFeatures same{Tensor(g.node_count(), 3, 0.7), NodeFeatureMode::window};
    const Tensor alpha = attention_coefficients(g, same, m.gat);
    const std::size_t field = *g.find(NodeKind::field, "X");
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        if (g.edges()[e].dst == field) CHECK(alpha[e] == doctest::Approx(0.5).epsilon(1e-14));
    }
}

TEST_CASE("self-only node embeds as tanh of its transform") {
    Topology t;
    t.wells["A"] = WellPlacement{"F", "X"};
    const ProductionGraph g = build_graph(t, GraphOptions{false, true});
    // With child -> parent edges only, the well receives nothing but itself.
    SplitMix64 rng(7);
    const Model m = init_model(config(ModelKind::temporal_gat), 3, 4, 2);
    const Tensor x = random_tensor(g.node_count(), 3, rng);
    const Tensor z = gat_embeddings(g, NodeFeatures{x, NodeFeatureMode::window}, m.gat);
    const std::size_t w = g.well_node("A");
    const Tensor& W = m.gat.layers[0].weight[0];
    for (std::size_t j = 0; j < W.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) acc += x(w, i) * W(i, j);
        CHECK(z(w, j) == doctest::Approx(std::tanh(acc)).epsilon(1e-14));
    }
}

TEST_CASE("peer edges let a sibling influence a well") {
    SplitMix64 rng(8);
    const Model m = init_model(config(ModelKind::temporal_gat), 3, 4, 5);
    for (bool peer : {false, true}) {
        const ProductionGraph g = build_graph(three_wells(), GraphOptions{peer, true});
        const Tensor x = random_tensor(g.node_count(), 3, rng);
        Tensor moved = x;
        const std::size_t b = g.well_node("B");
        for (std::size_t j = 0; j < 3; ++j) moved(b, j) += 2.0;
        const Tensor z0 = gat_embeddings(g, NodeFeatures{x, NodeFeatureMode::window}, m.gat);
        const Tensor z1 = gat_embeddings(g, NodeFeatures{moved, NodeFeatureMode::window}, m.gat);
        const std::size_t a = g.well_node("A");
        bool same = true;
        for (std::size_t j = 0; j < z0.cols(); ++j) same = same && z0(a, j) == z1(a, j);
        CHECK(same == !peer);
    }
}

TEST_CASE("batched forward matches single-sample scores") {
    SplitMix64 rng(9);
    const ProductionGraph g = build_graph(three_wells());
    std::vector<WindowSample> samples;
    NodeFeatureTable table;
    for (int i = 0; i < 12; ++i) {
        WindowSample s = sample_for(std::string(1, char('A' + i % 3)), 4, 3, rng);
        s.target_date = fgtest::day0() + std::chrono::days{i / 3};
        table[s.target_date] = NodeFeatures{random_tensor(g.node_count(), 3, rng), NodeFeatureMode::window};
        samples.push_back(std::move(s));
    }
    const GraphContext ctx{&g, &table};
    std::vector<const WindowSample*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s);
    for (ModelKind kind : {ModelKind::logistic, ModelKind::lstm, ModelKind::temporal_gat}) {
        const Model m = init_model(config(kind), 3, 4, 13);
        const auto batched = predict(m, ptrs, &ctx, 5);
        REQUIRE(batched.size() == samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            double single = 0.0;
            if (kind == ModelKind::logistic) {
                single = logistic_baseline(samples[i], m);
            } else if (kind == ModelKind::lstm) {
                single = lstm_baseline_forward(samples[i], m);
            } else {
                single = temporal_gat_forward(samples[i], g, table.at(samples[i].target_date), m);
            }
            CHECK(batched[i] == doctest::Approx(single).epsilon(1e-13));
        }
    }
}

TEST_CASE("full model gradient check on a small graph") {
    SplitMix64 rng(10);
    Topology t;
    t.wells["A"] = WellPlacement{"F", "X"};
    t.wells["B"] = WellPlacement{"F", "X"};
    const ProductionGraph g = build_graph(t);
    std::vector<WindowSample> samples;
    NodeFeatureTable table;
    for (int i = 0; i < 4; ++i) {
        WindowSample s = sample_for(i % 2 ? "B" : "A", 3, 2, rng);
        s.target_date = fgtest::day0() + std::chrono::days{i / 2};
        s.y = static_cast<std::uint8_t>(i == 1);
        table[s.target_date] = NodeFeatures{random_tensor(g.node_count(), 2, rng), NodeFeatureMode::window};
        samples.push_back(std::move(s));
    }
    std::vector<const WindowSample*> ptrs;
    std::vector<std::uint8_t> labels;
    for (const auto& s : samples) {
        ptrs.push_back(&s);
        labels.push_back(s.y);
    }
    const GraphContext ctx{&g, &table};
    const Model m = init_model(config(ModelKind::temporal_gat, 2), 2, 3, 3);
    std::vector<Tensor> params;
    for (const auto& p : m.named_parameters()) params.push_back(*p.tensor);
    const double err = ad::grad_check(
        [&](ad::Tape& tape, std::span<const ad::Var> p) {
            return weighted_bce(forward_batch(tape, m, p, ptrs, &ctx), labels, 3.0);
        },
        params);
    CHECK(err < 1e-4);
}

TEST_CASE("checkpoint round trip and guards") {
    const Model m = init_model(config(ModelKind::temporal_gat), 3, 4, 99);
    FeatureRegistry reg;
    for (const char* n : {"a", "b", "c"}) {
        reg.names.push_back(n);
        reg.kinds.push_back(ColumnKind::continuous);
    }
    const std::string text = save_checkpoint(m, reg, "abc123");
    const Checkpoint back = load_checkpoint(text, &reg, "abc123");
    CHECK(back.fingerprint == "abc123");
    CHECK(back.registry == reg);
    const auto want = m.named_parameters();
    const auto got = back.model.named_parameters();
    REQUIRE(want.size() == got.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(want[i].name == got[i].name);
        CHECK(*want[i].tensor == *got[i].tensor);
    }

    FeatureRegistry smaller = reg;
    smaller.names.pop_back();
    smaller.kinds.pop_back();
    CHECK_THROWS_AS((void)load_checkpoint(text, &smaller), CheckpointError);
    CHECK_THROWS_AS((void)load_checkpoint(text, &reg, "other"), CheckpointError);
    CHECK_THROWS_AS((void)load_checkpoint(text.substr(0, text.size() / 2)), CheckpointError);
    CHECK_THROWS_AS((void)load_checkpoint("{}"), CheckpointError);
}

TEST_CASE("model config validation") {
    ModelConfig c;
    CHECK_NOTHROW(c.validate());
    c.heads = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_model_kind("lstm") == ModelKind::lstm);
    CHECK_THROWS_AS((void)parse_model_kind("forest"), ConfigError);
}
