#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/autodiff.hpp"
#include "flowguard/date.hpp"
#include "flowguard/graph.hpp"
#include "flowguard/tensor.hpp"
#include "flowguard/windowing.hpp"

namespace flowguard {

enum class ModelKind : std::uint8_t { logistic, lstm, temporal_gat };
enum class Activation : std::uint8_t { tanh, elu, identity };

[[nodiscard]] std::string_view model_kind_name(ModelKind kind) noexcept;
[[nodiscard]] ModelKind parse_model_kind(std::string_view name);
[[nodiscard]] std::string_view activation_name(Activation a) noexcept;
[[nodiscard]] Activation parse_activation(std::string_view name);

struct ModelConfig {
    ModelKind kind = ModelKind::temporal_gat;
    std::size_t hidden_dim = 16;
    /// Per-head GAT output width D_g; 0 disables the graph embedding.
    std::size_t gat_dim = 8;
    std::size_t heads = 1;
    std::size_t layers = 1;
    double leaky_slope = 0.2;
    Activation activation = Activation::tanh;
    GraphOptions graph;
    NodeFeatureMode node_features = NodeFeatureMode::window;

    void validate() const;
};

/// One GAT layer: per head a weight W (in x D_g) and an attention vector
/// a (2 D_g x 1) whose first half scores the receiving node and second half
/// the neighbor.
struct GatLayerParams {
    std::vector<Tensor> weight;
    std::vector<Tensor> attention;
};

struct GatParams {
    std::vector<GatLayerParams> layers;
    double leaky_slope = 0.2;
    Activation activation = Activation::tanh;

    [[nodiscard]] std::size_t output_dim() const noexcept;
};

/// Gate columns are ordered input, forget, candidate, output.
struct LstmParams {
    Tensor w_input;   // D x 4H
    Tensor w_hidden;  // H x 4H
    Tensor bias;      // 1 x 4H

    [[nodiscard]] std::size_t hidden_dim() const noexcept { return w_hidden.rows(); }
    [[nodiscard]] std::size_t input_dim() const noexcept { return w_input.rows(); }
};

struct HeadParams {
    Tensor w;  // H x 1
    Tensor b;  // 1 x 1
};

struct LogisticParams {
    Tensor w;  // (r F) x 1
    Tensor b;  // 1 x 1
};

struct NamedTensor {
    std::string name;
    Tensor* tensor;
};

struct ConstNamedTensor {
    std::string name;
    const Tensor* tensor;
};

/// Parameters of one model. Only the blocks used by config.kind are populated.
struct Model {
    ModelConfig config;
    std::size_t feature_dim = 0;
    std::size_t window = 0;
    GatParams gat;
    LstmParams lstm;
    HeadParams head;
    LogisticParams logistic;

    /// Stable parameter order shared by the optimizer and checkpoints.
    [[nodiscard]] std::vector<NamedTensor> named_parameters();
    [[nodiscard]] std::vector<ConstNamedTensor> named_parameters() const;
    [[nodiscard]] std::size_t parameter_count() const;
};

/// Xavier-uniform weights, zero biases except a forget-gate bias of 1.
[[nodiscard]] Model init_model(const ModelConfig& config, std::size_t feature_dim, std::size_t window,
                               std::uint64_t seed);

/// Model with every parameter set to zero.
[[nodiscard]] Model zero_model(const ModelConfig& config, std::size_t feature_dim, std::size_t window);

using NodeFeatureTable = std::map<Day, NodeFeatures>;

/// Graph plus node features for every target date a batch may reference.
struct GraphContext {
    const ProductionGraph* graph = nullptr;
    const NodeFeatureTable* features = nullptr;
};

// ---- Tape-level building blocks ------------------------------------------

/// One attention layer over all nodes. Node features are N x in; edges give
/// (src -> dst) message directions. Returns N x (heads * D_g).
[[nodiscard]] ad::Var gat_layer(ad::Var node_features, std::span<const ad::Var> weights,
                                std::span<const ad::Var> attentions, std::span<const std::size_t> edge_src,
                                std::span<const std::size_t> edge_dst, double leaky_slope, Activation activation);

/// Runs the recurrence over `steps` (each B x D) from zero state; returns h_r (B x H).
[[nodiscard]] ad::Var lstm_sequence(std::span<const ad::Var> steps, ad::Var w_input, ad::Var w_hidden, ad::Var bias);

/// Attention coefficients of one head of the first GAT layer (E x 1, edge order).
[[nodiscard]] Tensor attention_coefficients(const ProductionGraph& graph, const NodeFeatures& features,
                                            const GatParams& params, std::size_t head = 0);

/// Batched forward pass producing B x 1 anomaly probabilities. Parameters are
/// bound in named_parameters() order (see bind_parameters).
[[nodiscard]] ad::Var forward_batch(ad::Tape& tape, const Model& model, std::span<const ad::Var> params,
                                    std::span<const WindowSample* const> batch, const GraphContext* context);

/// Records every parameter of `model` on the tape, as trainable leaves or constants.
[[nodiscard]] std::vector<ad::Var> bind_parameters(ad::Tape& tape, const Model& model, bool trainable);

// ---- Value-level API ------------------------------------------------------

/// Embeddings after the full GAT stack (node_count x output_dim).
[[nodiscard]] Tensor gat_embeddings(const ProductionGraph& graph, const NodeFeatures& features, const GatParams& params);
/// Single GAT layer applied to given node features.
[[nodiscard]] Tensor gat_layer(const ProductionGraph& graph, const Tensor& features, const GatLayerParams& layer,
                               double leaky_slope, Activation activation);
/// Final hidden state (1 x H) for an r x D input sequence.
[[nodiscard]] Tensor lstm_sequence(const Tensor& inputs, const LstmParams& params);

[[nodiscard]] double temporal_gat_forward(const WindowSample& sample, const ProductionGraph& graph,
                                          const NodeFeatures& features, const Model& model);
[[nodiscard]] double lstm_baseline_forward(const WindowSample& sample, const Model& model);
[[nodiscard]] double logistic_baseline(const WindowSample& sample, const Model& model);

/// Scores for the given samples, evaluated in batches without gradients.
[[nodiscard]] std::vector<double> predict(const Model& model, std::span<const WindowSample* const> samples,
                                          const GraphContext* context, std::size_t batch_size = 256);

}  // namespace flowguard
