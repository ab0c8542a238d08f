#include <doctest.h>

#include <set>
#include <utility>

#include "flowguard/error.hpp"
#include "flowguard/graph.hpp"
#include "helpers.hpp"

using namespace flowguard;

namespace {

Topology make_topology(const std::vector<std::pair<std::string, std::string>>& well_facility,
                       const std::string& field = "X") {
    Topology t;
    for (const auto& [w, f] : well_facility) t.wells[w] = WellPlacement{f, field};
    return t;
}

std::size_t count_kind(const ProductionGraph& g, EdgeKind k) {
    std::size_t n = 0;
    for (const auto& e : g.edges()) n += e.kind == k;
    return n;
}

}  // namespace

TEST_CASE("edge counts of a single facility") {
    const Topology t = make_topology({{"A", "F"}, {"B", "F"}, {"C", "F"}});
    const ProductionGraph g = build_graph(t);
    CHECK(g.node_count() == 5);
    // 3 wells <-> facility and facility <-> field, both directions.
    CHECK(count_kind(g, EdgeKind::hierarchy) == 8);
    CHECK(count_kind(g, EdgeKind::peer) == 6);
    CHECK(count_kind(g, EdgeKind::self) == 5);
    CHECK(g.edge_count() == 19);
    CHECK(g.count_edges(EdgeKind::peer) == 6);

    const ProductionGraph no_peer = build_graph(t, GraphOptions{false, false});
    CHECK(no_peer.edge_count() == 13);
    CHECK(no_peer.count_edges(EdgeKind::peer) == 0);

    const ProductionGraph directed = build_graph(t, GraphOptions{false, true});
    CHECK(directed.count_edges(EdgeKind::hierarchy) == 4);
    for (const auto& e : directed.edges()) {
        if (e.kind == EdgeKind::hierarchy) CHECK(directed.nodes()[e.src].kind < directed.nodes()[e.dst].kind);
    }

    CHECK(build_graph(make_topology({{"A", "F"}})).count_edges(EdgeKind::peer) == 0);
    CHECK_THROWS_AS((void)build_graph(Topology{}), TopologyError);
}

TEST_CASE("graph structure invariants on random topologies") {
    SplitMix64 rng(10);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t facilities = 1 + rng.index(5);
        std::vector<std::pair<std::string, std::string>> wf;
        std::vector<std::size_t> per(facilities, 0);
        const std::size_t wells = 1 + rng.index(20);
        for (std::size_t w = 0; w < wells; ++w) {
            const std::size_t f = rng.index(facilities);
            ++per[f];
            wf.emplace_back("W" + std::to_string(w), "F" + std::to_string(f));
        }
        const ProductionGraph g = build_graph(make_topology(wf));
        std::size_t expected_peer = 0;
        for (std::size_t n : per) expected_peer += n * (n - 1);
        CHECK(g.count_edges(EdgeKind::peer) == expected_peer);

        std::set<std::pair<std::size_t, std::size_t>> peers;
        std::set<std::size_t> selfs;
        std::vector<int> well_parents(g.node_count(), 0);
        for (const auto& e : g.edges()) {
            if (e.kind == EdgeKind::peer) peers.emplace(e.src, e.dst);
            if (e.kind == EdgeKind::self) selfs.insert(e.src);
            if (e.kind == EdgeKind::hierarchy && g.nodes()[e.src].kind == NodeKind::well) ++well_parents[e.src];
        }
        for (const auto& [a, b] : peers) {
            CHECK(peers.count({b, a}) == 1);
            CHECK(g.nodes()[a].kind == NodeKind::well);
        }
        CHECK(selfs.size() == g.node_count());
        for (std::size_t w : g.well_nodes()) CHECK(well_parents[w] == 1);

        // Deterministic (kind, id) ordering.
        const ProductionGraph again = build_graph(make_topology(wf));
        CHECK(again.format_edge_list() == g.format_edge_list());
        for (std::size_t i = 1; i < g.node_count(); ++i) {
            const auto& p = g.nodes()[i - 1];
            const auto& q = g.nodes()[i];
            CHECK((p.kind < q.kind || (p.kind == q.kind && p.id < q.id)));
        }
    }
}

TEST_CASE("node input features aggregate up the hierarchy") {
    const Topology t = make_topology({{"A", "F1"}, {"B", "F1"}, {"C", "F2"}});
    const ProductionGraph g = build_graph(t);
    const Tensor a(2, 2, {1, 2, 3, 4});    // means (2, 3)
    const Tensor b(2, 2, {0, 0, 0, 0});    // means (0, 0)
    const Tensor c(2, 2, {10, 0, 10, 8});  // means (10, 4)
    const WellWindows ww = {{"A", &a}, {"B", &b}, {"C", &c}};
    const NodeFeatures nf = node_input_features(g, ww);
    const auto row = [&](NodeKind k, const std::string& id) { return nf.values.row(*g.find(k, id)); };
    CHECK(row(NodeKind::well, "A")[0] == 2.0);
    CHECK(row(NodeKind::well, "A")[1] == 3.0);
    CHECK(row(NodeKind::well, "B")[0] == 0.0);
    CHECK(row(NodeKind::facility, "F1")[0] == 1.0);
    CHECK(row(NodeKind::facility, "F1")[1] == 1.5);
    CHECK(row(NodeKind::facility, "F2")[1] == 4.0);
    CHECK(row(NodeKind::field, "X")[0] == 5.5);
    CHECK(row(NodeKind::field, "X")[1] == 2.75);

    // Peer edges do not enter the node features.
    const NodeFeatures without = node_input_features(build_graph(t, GraphOptions{false, false}), ww);
    CHECK(without.values == nf.values);

    const WellWindows same = {{"A", &a}, {"B", &a}, {"C", &a}};
    const NodeFeatures s = node_input_features(g, same);
    for (std::size_t n = 0; n < g.node_count(); ++n) {
        CHECK(s.values(n, 0) == 2.0);
        CHECK(s.values(n, 1) == 3.0);
    }

    const WellWindows missing = {{"A", &a}, {"B", &b}};
    try {
        (void)node_input_features(g, missing);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("'C'") != std::string::npos);
    }
}

TEST_CASE("edge list export") {
    const ProductionGraph g = build_graph(make_topology({{"A", "F"}, {"B", "F"}}));
    const std::string text = g.format_edge_list();
    CHECK(text.find("well,A,facility,F,hierarchy") != std::string::npos);
    CHECK(text.find("well,A,well,B,peer") != std::string::npos);
    CHECK(text.find("field,X,field,X,self") != std::string::npos);
}
