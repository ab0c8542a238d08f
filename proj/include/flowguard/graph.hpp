#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/ingest.hpp"
#include "flowguard/tensor.hpp"

namespace flowguard {

enum class NodeKind : std::uint8_t { well, facility, field };
enum class EdgeKind : std::uint8_t { hierarchy, peer, self };

[[nodiscard]] std::string_view node_kind_name(NodeKind kind) noexcept;
[[nodiscard]] std::string_view edge_kind_name(EdgeKind kind) noexcept;

struct GraphNode {
    std::string id;
    NodeKind kind;
};

/// Directed edge; messages flow from src to dst, so N(dst) contains src.
struct GraphEdge {
    std::size_t src;
    std::size_t dst;
    EdgeKind kind;
};

struct GraphOptions {
    /// Connect every ordered pair of wells sharing a facility.
    bool peer_edges = true;
    /// Keep only child -> parent hierarchy edges (well -> facility -> field).
    bool directed_hierarchy = false;
};

/// Typed production network. Nodes are ordered by (kind, id): wells, then
/// facilities, then fields. Every node has a self edge.
class ProductionGraph {
public:
    [[nodiscard]] const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
    [[nodiscard]] std::size_t count_edges(EdgeKind kind) const noexcept;

    [[nodiscard]] std::optional<std::size_t> find(NodeKind kind, std::string_view id) const;
    /// Throws TopologyError naming the well.
    [[nodiscard]] std::size_t well_node(std::string_view well_id) const;
    [[nodiscard]] const std::vector<std::size_t>& well_nodes() const noexcept { return wells_; }
    /// Wells of a facility node, or facilities of a field node.
    [[nodiscard]] const std::vector<std::size_t>& members(std::size_t node) const { return members_[node]; }
    [[nodiscard]] const GraphOptions& options() const noexcept { return options_; }

    /// Edge list text: "src_kind,src_id,dst_kind,dst_id,edge_kind" per line.
    [[nodiscard]] std::string format_edge_list() const;

private:
    friend ProductionGraph build_graph(const Topology& topology, const GraphOptions& options);

    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::map<std::pair<NodeKind, std::string>, std::size_t, std::less<>> index_;
    std::vector<std::size_t> wells_;
    std::vector<std::vector<std::size_t>> members_;
    GraphOptions options_;
};

/// Throws TopologyError for an empty topology or blank ids.
[[nodiscard]] ProductionGraph build_graph(const Topology& topology, const GraphOptions& options = {});

enum class NodeFeatureMode : std::uint8_t {
    /// Column means of each well's current window.
    window,
    /// Column means over each well's whole training period.
    static_means,
};

struct NodeFeatures {
    Tensor values;  // node_count x D
    NodeFeatureMode mode = NodeFeatureMode::window;
};

using WellWindows = std::map<std::string, const Tensor*, std::less<>>;

/// Well vector = column mean of its matrix in `windows`; facility = mean of
/// its wells; field = mean of its facilities. Throws DataError naming a well
/// that has no matrix.
[[nodiscard]] NodeFeatures node_input_features(const ProductionGraph& graph, const WellWindows& windows,
                                               NodeFeatureMode mode = NodeFeatureMode::window);

}  // namespace flowguard
