#include "flowguard/graph.hpp"

#include <algorithm>
#include <sstream>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"

namespace flowguard {

std::string_view node_kind_name(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::well: return "well";
        case NodeKind::facility: return "facility";
        case NodeKind::field: return "field";
    }
    return "?";
}

std::string_view edge_kind_name(EdgeKind kind) noexcept {
    switch (kind) {
        case EdgeKind::hierarchy: return "hierarchy";
        case EdgeKind::peer: return "peer";
        case EdgeKind::self: return "self";
    }
    return "?";
}

std::size_t ProductionGraph::count_edges(EdgeKind kind) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [kind](const GraphEdge& e) { return e.kind == kind; }));
}

std::optional<std::size_t> ProductionGraph::find(NodeKind kind, std::string_view id) const {
    const auto it = index_.find(std::make_pair(kind, std::string(id)));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t ProductionGraph::well_node(std::string_view well_id) const {
    if (auto i = find(NodeKind::well, well_id)) {
        return *i;
    }
    throw TopologyError("well '" + std::string(well_id) + "' is not in the production graph");
}

std::string ProductionGraph::format_edge_list() const {
    std::ostringstream out;
    out << "src_kind,src_id,dst_kind,dst_id,edge_kind\n";
    for (const auto& e : edges_) {
        const auto& s = nodes_[e.src];
        const auto& d = nodes_[e.dst];
        out << node_kind_name(s.kind) << ',' << escape_cell(s.id) << ',' << node_kind_name(d.kind) << ','
            << escape_cell(d.id) << ',' << edge_kind_name(e.kind) << '\n';
    }
    return out.str();
}

ProductionGraph build_graph(const Topology& topology, const GraphOptions& options) {
    if (topology.wells.empty()) {
        throw TopologyError("topology has no wells");
    }
    ProductionGraph g;
    g.options_ = options;
    auto add_node = [&g](NodeKind kind, const std::string& id) {
        if (id.empty()) {
            throw TopologyError(std::string("blank ") + std::string(node_kind_name(kind)) + " identifier");
        }
        g.index_.emplace(std::make_pair(kind, id), g.nodes_.size());
        g.nodes_.push_back({id, kind});
    };
    for (const auto& [well, _] : topology.wells) {
        g.wells_.push_back(g.nodes_.size());
        add_node(NodeKind::well, well);
    }
    const auto facilities = topology.facilities();
    for (const auto& f : facilities) {
        add_node(NodeKind::facility, f);
    }
    for (const auto& f : topology.fields()) {
        add_node(NodeKind::field, f);
    }
    g.members_.assign(g.nodes_.size(), {});

    for (std::size_t v = 0; v < g.nodes_.size(); ++v) {
        g.edges_.push_back({v, v, EdgeKind::self});
    }
    auto link = [&](std::size_t child, std::size_t parent) {
        g.members_[parent].push_back(child);
        g.edges_.push_back({child, parent, EdgeKind::hierarchy});
        if (!options.directed_hierarchy) {
            g.edges_.push_back({parent, child, EdgeKind::hierarchy});
        }
    };
    for (const auto& [well, placement] : topology.wells) {
        link(*g.find(NodeKind::well, well), *g.find(NodeKind::facility, placement.facility_id));
    }
    for (const auto& f : facilities) {
        link(*g.find(NodeKind::facility, f), *g.find(NodeKind::field, topology.field_of_facility(f)));
    }
    if (options.peer_edges) {
        for (const auto& f : facilities) {
            const auto& wells = g.members_[*g.find(NodeKind::facility, f)];
            for (const std::size_t a : wells) {
                for (const std::size_t b : wells) {
                    if (a != b) {
                        g.edges_.push_back({a, b, EdgeKind::peer});
                    }
                }
            }
        }
    }
    return g;
}

NodeFeatures node_input_features(const ProductionGraph& graph, const WellWindows& windows, NodeFeatureMode mode) {
    std::optional<std::size_t> dim;
    for (const std::size_t w : graph.well_nodes()) {
        const auto& id = graph.nodes()[w].id;
        const auto it = windows.find(id);
        if (it == windows.end() || it->second == nullptr) {
            throw DataError("node features: well '" + id + "' has no window in scope");
        }
        if (dim && it->second->cols() != *dim) {
            throw ShapeError("node features: window widths differ across wells");
        }
        dim = it->second->cols();
    }
    NodeFeatures out{Tensor(graph.node_count(), dim.value_or(0)), mode};
    for (const std::size_t w : graph.well_nodes()) {
        const Tensor& x = *windows.find(graph.nodes()[w].id)->second;
        auto dst = out.values.row(w);
        if (x.rows() == 0) {
            continue;
        }
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto src = x.row(i);
            for (std::size_t j = 0; j < dst.size(); ++j) {
                dst[j] += src[j];
            }
        }
        for (double& v : dst) {
            v /= static_cast<double>(x.rows());
        }
    }
    auto average_members = [&](NodeKind kind) {
        for (std::size_t v = 0; v < graph.node_count(); ++v) {
            if (graph.nodes()[v].kind != kind || graph.members(v).empty()) {
                continue;
            }
            auto dst = out.values.row(v);
            for (const std::size_t m : graph.members(v)) {
                const auto src = out.values.row(m);
                for (std::size_t j = 0; j < dst.size(); ++j) {
                    dst[j] += src[j];
                }
            }
            for (double& x : dst) {
                x /= static_cast<double>(graph.members(v).size());
            }
        }
    };
    average_members(NodeKind::facility);
    average_members(NodeKind::field);
    return out;
}

}  // namespace flowguard
