#include "flowguard/models.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "flowguard/error.hpp"
#include "flowguard/rng.hpp"

namespace flowguard {

std::string_view model_kind_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::logistic: return "logistic";
        case ModelKind::lstm: return "lstm";
        case ModelKind::temporal_gat: return "temporal_gat";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    for (const auto k : {ModelKind::logistic, ModelKind::lstm, ModelKind::temporal_gat}) {
        if (name == model_kind_name(k)) {
            return k;
        }
    }
    throw ConfigError("unknown model kind '" + std::string(name) + "' (expected logistic, lstm or temporal_gat)");
}

std::string_view activation_name(Activation a) noexcept {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::elu: return "elu";
        case Activation::identity: return "identity";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    for (const auto a : {Activation::tanh, Activation::elu, Activation::identity}) {
        if (name == activation_name(a)) {
            return a;
        }
    }
    throw ConfigError("unknown activation '" + std::string(name) + "' (expected tanh, elu or identity)");
}

void ModelConfig::validate() const {
    if (hidden_dim == 0) {
        throw ConfigError("model.hidden_dim must be >= 1");
    }
    if (kind == ModelKind::temporal_gat && (heads == 0 || layers == 0)) {
        throw ConfigError("model.heads and model.layers must be >= 1");
    }
    if (!std::isfinite(leaky_slope) || leaky_slope < 0.0) {
        throw ConfigError("model.leaky_slope must be a finite non-negative number");
    }
}

std::size_t GatParams::output_dim() const noexcept {
    if (layers.empty()) {
        return 0;
    }
    std::size_t d = 0;
    for (const auto& w : layers.back().weight) {
        d += w.cols();
    }
    return d;
}

namespace {

template <typename M, typename Out>
void collect(M& model, Out& out) {
    switch (model.config.kind) {
        case ModelKind::logistic:
            out.push_back({"logistic.w", &model.logistic.w});
            out.push_back({"logistic.b", &model.logistic.b});
            return;
        case ModelKind::temporal_gat:
            for (std::size_t l = 0; l < model.gat.layers.size(); ++l) {
                auto& layer = model.gat.layers[l];
                for (std::size_t h = 0; h < layer.weight.size(); ++h) {
                    const std::string p = "gat.l" + std::to_string(l) + ".h" + std::to_string(h);
                    out.push_back({p + ".W", &layer.weight[h]});
                    out.push_back({p + ".a", &layer.attention[h]});
                }
            }
            [[fallthrough]];
        case ModelKind::lstm:
            out.push_back({"lstm.w_input", &model.lstm.w_input});
            out.push_back({"lstm.w_hidden", &model.lstm.w_hidden});
            out.push_back({"lstm.bias", &model.lstm.bias});
            out.push_back({"head.w", &model.head.w});
            out.push_back({"head.b", &model.head.b});
            return;
    }
}

void xavier(Tensor& t, SplitMix64& rng) {
    const auto fans = static_cast<double>(t.rows() + t.cols());
    const double limit = fans > 0 ? std::sqrt(6.0 / fans) : 0.0;
    for (double& v : t.data()) {
        v = rng.uniform(-limit, limit);
    }
}

Model shaped_model(const ModelConfig& config, std::size_t feature_dim, std::size_t window) {
    config.validate();
    if (feature_dim == 0 || window == 0) {
        throw ConfigError("model needs at least one feature and a window length >= 1");
    }
    Model m;
    m.config = config;
    m.feature_dim = feature_dim;
    m.window = window;
    const std::size_t h = config.hidden_dim;
    std::size_t lstm_in = feature_dim;
    switch (config.kind) {
        case ModelKind::logistic:
            m.logistic.w = Tensor(window * feature_dim, 1);
            m.logistic.b = Tensor(1, 1);
            return m;
        case ModelKind::temporal_gat: {
            m.gat.leaky_slope = config.leaky_slope;
            m.gat.activation = config.activation;
            std::size_t in = feature_dim;
            for (std::size_t l = 0; l < config.layers; ++l) {
                GatLayerParams layer;
                for (std::size_t k = 0; k < config.heads; ++k) {
                    layer.weight.emplace_back(in, config.gat_dim);
                    layer.attention.emplace_back(2 * config.gat_dim, 1);
                }
                m.gat.layers.push_back(std::move(layer));
                in = config.heads * config.gat_dim;
            }
            lstm_in += m.gat.output_dim();
            break;
        }
        case ModelKind::lstm: break;
    }
    m.lstm.w_input = Tensor(lstm_in, 4 * h);
    m.lstm.w_hidden = Tensor(h, 4 * h);
    m.lstm.bias = Tensor(1, 4 * h);
    m.head.w = Tensor(h, 1);
    m.head.b = Tensor(1, 1);
    return m;
}

}  // namespace

std::vector<NamedTensor> Model::named_parameters() {
    std::vector<NamedTensor> out;
    collect(*this, out);
    return out;
}

std::vector<ConstNamedTensor> Model::named_parameters() const {
    std::vector<ConstNamedTensor> out;
    collect(*this, out);
    return out;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : named_parameters()) {
        n += p.tensor->size();
    }
    return n;
}

Model zero_model(const ModelConfig& config, std::size_t feature_dim, std::size_t window) {
    return shaped_model(config, feature_dim, window);
}

Model init_model(const ModelConfig& config, std::size_t feature_dim, std::size_t window, std::uint64_t seed) {
    Model m = shaped_model(config, feature_dim, window);
    std::uint64_t tag = 0;
    for (auto& p : m.named_parameters()) {
        SplitMix64 rng(SplitMix64::derive(seed, ++tag));
        const bool bias = p.name.ends_with(".b") || p.name.ends_with(".bias");
        if (!bias) {
            xavier(*p.tensor, rng);
        }
    }
    const std::size_t h = config.hidden_dim;
    if (config.kind != ModelKind::logistic) {
        for (std::size_t j = h; j < 2 * h; ++j) {
            m.lstm.bias(0, j) = 1.0;
        }
    }
    return m;
}

// ---- tape level ------------------------------------------------------------

namespace {

ad::Var activate(ad::Var x, Activation a) {
    switch (a) {
        case Activation::tanh: return ad::tanh(x);
        case Activation::elu: return ad::elu(x);
        case Activation::identity: return x;
    }
    return x;
}

struct BoundGat {
    std::vector<std::vector<ad::Var>> weight;
    std::vector<std::vector<ad::Var>> attention;
};

struct Bound {
    BoundGat gat;
    ad::Var w_input, w_hidden, bias, head_w, head_b;
    ad::Var logistic_w, logistic_b;
};

Bound unpack(const Model& model, std::span<const ad::Var> params) {
    const auto named = model.named_parameters();
    if (named.size() != params.size()) {
        throw ShapeError("forward: expected " + std::to_string(named.size()) + " parameters, got " +
                         std::to_string(params.size()));
    }
    Bound b;
    std::size_t i = 0;
    switch (model.config.kind) {
        case ModelKind::logistic:
            b.logistic_w = params[i++];
            b.logistic_b = params[i++];
            return b;
        case ModelKind::temporal_gat:
            for (const auto& layer : model.gat.layers) {
                b.gat.weight.emplace_back();
                b.gat.attention.emplace_back();
                for (std::size_t h = 0; h < layer.weight.size(); ++h) {
                    b.gat.weight.back().push_back(params[i++]);
                    b.gat.attention.back().push_back(params[i++]);
                }
            }
            [[fallthrough]];
        case ModelKind::lstm:
            b.w_input = params[i++];
            b.w_hidden = params[i++];
            b.bias = params[i++];
            b.head_w = params[i++];
            b.head_b = params[i++];
            return b;
    }
    return b;
}

ad::Var gat_stack(ad::Var x, const BoundGat& gat, std::span<const std::size_t> src, std::span<const std::size_t> dst,
                  double slope, Activation act) {
    for (std::size_t l = 0; l < gat.weight.size(); ++l) {
        x = gat_layer(x, gat.weight[l], gat.attention[l], src, dst, slope, act);
    }
    return x;
}

/// Row j of every sample window stacked into a B x F constant.
ad::Var step_input(ad::Tape& tape, std::span<const WindowSample* const> batch, std::size_t j, std::size_t f) {
    Tensor x(batch.size(), f);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto src = batch[b]->X.row(j);
        std::copy(src.begin(), src.end(), x.row(b).begin());
    }
    return tape.constant(std::move(x));
}

void check_batch(const Model& model, std::span<const WindowSample* const> batch) {
    for (const auto* s : batch) {
        if (s->X.rows() != model.window || s->X.cols() != model.feature_dim) {
            throw ShapeError("sample for well '" + s->well_id + "' has shape " + s->X.shape_string() +
                             ", model expects " + std::to_string(model.window) + "x" +
                             std::to_string(model.feature_dim));
        }
    }
}

}  // namespace

ad::Var gat_layer(ad::Var node_features, std::span<const ad::Var> weights, std::span<const ad::Var> attentions,
                  std::span<const std::size_t> edge_src, std::span<const std::size_t> edge_dst, double leaky_slope,
                  Activation activation) {
    const std::size_t n = node_features.value().rows();
    std::vector<ad::Var> heads;
    heads.reserve(weights.size());
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const std::size_t d = weights[k].value().cols();
        const ad::Var wz = ad::matmul(node_features, weights[k]);
        const ad::Var s_dst = ad::matmul(wz, ad::slice(attentions[k], 0, 0, d));
        const ad::Var s_src = ad::matmul(wz, ad::slice(attentions[k], 0, d, 2 * d));
        const ad::Var e =
            ad::leaky_relu(ad::gather_rows(s_dst, edge_dst) + ad::gather_rows(s_src, edge_src), leaky_slope);
        const ad::Var alpha = ad::segment_softmax(e, edge_dst, n);
        const ad::Var msg = ad::gather_rows(wz, edge_src) * alpha;
        heads.push_back(activate(ad::scatter_add_rows(msg, edge_dst, n), activation));
    }
    return heads.size() == 1 ? heads.front() : ad::concat(heads, 1);
}

ad::Var lstm_sequence(std::span<const ad::Var> steps, ad::Var w_input, ad::Var w_hidden, ad::Var bias) {
    if (steps.empty()) {
        throw ShapeError("lstm: empty input sequence");
    }
    const std::size_t h = w_hidden.value().rows();
    ad::Var hs, cs;
    for (std::size_t j = 0; j < steps.size(); ++j) {
        ad::Var z = ad::matmul(steps[j], w_input) + bias;
        if (j > 0) {
            z = z + ad::matmul(hs, w_hidden);
        }
        const ad::Var i = ad::sigmoid(ad::slice(z, 1, 0, h));
        const ad::Var g = ad::tanh(ad::slice(z, 1, 2 * h, 3 * h));
        const ad::Var o = ad::sigmoid(ad::slice(z, 1, 3 * h, 4 * h));
        if (j == 0) {
            cs = i * g;
        } else {
            const ad::Var f = ad::sigmoid(ad::slice(z, 1, h, 2 * h));
            cs = f * cs + i * g;
        }
        hs = o * ad::tanh(cs);
    }
    return hs;
}

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const Model& model, bool trainable) {
    std::vector<ad::Var> out;
    for (const auto& p : model.named_parameters()) {
        out.push_back(trainable ? tape.parameter(*p.tensor) : tape.constant(*p.tensor));
    }
    return out;
}

ad::Var forward_batch(ad::Tape& tape, const Model& model, std::span<const ad::Var> params,
                      std::span<const WindowSample* const> batch, const GraphContext* context) {
    if (batch.empty()) {
        throw ShapeError("forward: empty batch");
    }
    check_batch(model, batch);
    const Bound b = unpack(model, params);
    const std::size_t f = model.feature_dim;

    if (model.config.kind == ModelKind::logistic) {
        Tensor flat(batch.size(), model.window * f);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto src = batch[i]->X.data();
            std::copy(src.begin(), src.end(), flat.row(i).begin());
        }
        return ad::sigmoid(ad::matmul(tape.constant(std::move(flat)), b.logistic_w) + b.logistic_b);
    }

    std::vector<ad::Var> steps;
    steps.reserve(model.window);
    const bool use_graph = model.config.kind == ModelKind::temporal_gat && model.gat.output_dim() > 0;
    if (use_graph) {
        if (context == nullptr || context->graph == nullptr || context->features == nullptr) {
            throw ConfigError("temporal GAT forward needs a production graph");
        }
        const ProductionGraph& graph = *context->graph;
        const std::size_t n = graph.node_count();
        std::vector<Day> dates;
        std::vector<std::size_t> target(batch.size());
        std::map<Day, std::size_t> slot;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto [it, inserted] = slot.emplace(batch[i]->target_date, dates.size());
            if (inserted) {
                dates.push_back(batch[i]->target_date);
            }
            target[i] = it->second * n + graph.well_node(batch[i]->well_id);
        }
        std::size_t node_dim = 0;
        std::vector<const Tensor*> per_date;
        for (const Day d : dates) {
            const auto it = context->features->find(d);
            if (it == context->features->end()) {
                throw DataError("no graph node features for " + format_day(d));
            }
            if (it->second.values.rows() != n) {
                throw ShapeError("graph node features have " + std::to_string(it->second.values.rows()) +
                                 " rows for " + std::to_string(n) + " nodes");
            }
            node_dim = it->second.values.cols();
            per_date.push_back(&it->second.values);
        }
        Tensor stacked(dates.size() * n, node_dim);
        for (std::size_t g = 0; g < per_date.size(); ++g) {
            const auto src = per_date[g]->data();
            std::copy(src.begin(), src.end(), stacked.data().begin() + static_cast<std::ptrdiff_t>(g * n * node_dim));
        }
        const auto& edges = graph.edges();
        std::vector<std::size_t> src, dst;
        src.reserve(edges.size() * dates.size());
        dst.reserve(edges.size() * dates.size());
        for (std::size_t g = 0; g < dates.size(); ++g) {
            for (const auto& e : edges) {
                src.push_back(g * n + e.src);
                dst.push_back(g * n + e.dst);
            }
        }
        const ad::Var z =
            gat_stack(tape.constant(std::move(stacked)), b.gat, src, dst, model.gat.leaky_slope, model.gat.activation);
        const ad::Var zw = ad::gather_rows(z, target);
        for (std::size_t j = 0; j < model.window; ++j) {
            const ad::Var parts[] = {step_input(tape, batch, j, f), zw};
            steps.push_back(ad::concat(parts, 1));
        }
    } else {
        for (std::size_t j = 0; j < model.window; ++j) {
            steps.push_back(step_input(tape, batch, j, f));
        }
    }
    const ad::Var h = lstm_sequence(steps, b.w_input, b.w_hidden, b.bias);
    return ad::sigmoid(ad::matmul(h, b.head_w) + b.head_b);
}

// ---- value level -------------------------------------------------------------

namespace {

std::vector<std::size_t> edge_column(const ProductionGraph& graph, bool source) {
    std::vector<std::size_t> out;
    out.reserve(graph.edge_count());
    for (const auto& e : graph.edges()) {
        out.push_back(source ? e.src : e.dst);
    }
    return out;
}

std::vector<ad::Var> constants(ad::Tape& tape, const std::vector<Tensor>& ts) {
    std::vector<ad::Var> out;
    for (const auto& t : ts) {
        out.push_back(tape.constant(t));
    }
    return out;
}

}  // namespace

Tensor gat_layer(const ProductionGraph& graph, const Tensor& features, const GatLayerParams& layer,
                 double leaky_slope, Activation activation) {
    ad::Tape tape;
    const auto src = edge_column(graph, true);
    const auto dst = edge_column(graph, false);
    const auto w = constants(tape, layer.weight);
    const auto a = constants(tape, layer.attention);
    return gat_layer(tape.constant(features), w, a, src, dst, leaky_slope, activation).value();
}

Tensor gat_embeddings(const ProductionGraph& graph, const NodeFeatures& features, const GatParams& params) {
    Tensor x = features.values;
    for (const auto& layer : params.layers) {
        x = gat_layer(graph, x, layer, params.leaky_slope, params.activation);
    }
    return x;
}

Tensor attention_coefficients(const ProductionGraph& graph, const NodeFeatures& features, const GatParams& params,
                              std::size_t head) {
    if (params.layers.empty() || head >= params.layers.front().weight.size()) {
        throw ConfigError("attention_coefficients: no such head");
    }
    const auto& layer = params.layers.front();
    const std::size_t d = layer.weight[head].cols();
    ad::Tape tape;
    const auto src = edge_column(graph, true);
    const auto dst = edge_column(graph, false);
    const ad::Var wz = ad::matmul(tape.constant(features.values), tape.constant(layer.weight[head]));
    const ad::Var a = tape.constant(layer.attention[head]);
    const ad::Var e = ad::leaky_relu(ad::gather_rows(ad::matmul(wz, ad::slice(a, 0, 0, d)), dst) +
                                         ad::gather_rows(ad::matmul(wz, ad::slice(a, 0, d, 2 * d)), src),
                                     params.leaky_slope);
    return ad::segment_softmax(e, dst, graph.node_count()).value();
}

Tensor lstm_sequence(const Tensor& inputs, const LstmParams& params) {
    ad::Tape tape;
    std::vector<ad::Var> steps;
    for (std::size_t j = 0; j < inputs.rows(); ++j) {
        Tensor row(1, inputs.cols());
        std::copy(inputs.row(j).begin(), inputs.row(j).end(), row.data().begin());
        steps.push_back(tape.constant(std::move(row)));
    }
    return lstm_sequence(steps, tape.constant(params.w_input), tape.constant(params.w_hidden),
                         tape.constant(params.bias))
        .value();
}

namespace {

double single(const Model& model, const WindowSample& sample, const GraphContext* context) {
    ad::Tape tape;
    const auto params = bind_parameters(tape, model, false);
    const WindowSample* ptr = &sample;
    return forward_batch(tape, model, params, std::span<const WindowSample* const>(&ptr, 1), context).value().item();
}

}  // namespace

double temporal_gat_forward(const WindowSample& sample, const ProductionGraph& graph, const NodeFeatures& features,
                            const Model& model) {
    if (model.config.kind != ModelKind::temporal_gat) {
        throw ConfigError("temporal_gat_forward called with a " + std::string(model_kind_name(model.config.kind)) +
                          " model");
    }
    const NodeFeatureTable table{{sample.target_date, features}};
    const GraphContext ctx{&graph, &table};
    return single(model, sample, &ctx);
}

double lstm_baseline_forward(const WindowSample& sample, const Model& model) {
    if (model.config.kind != ModelKind::lstm) {
        throw ConfigError("lstm_baseline_forward called with a " + std::string(model_kind_name(model.config.kind)) +
                          " model");
    }
    return single(model, sample, nullptr);
}

double logistic_baseline(const WindowSample& sample, const Model& model) {
    if (model.config.kind != ModelKind::logistic) {
        throw ConfigError("logistic_baseline called with a " + std::string(model_kind_name(model.config.kind)) +
                          " model");
    }
    return single(model, sample, nullptr);
}

std::vector<double> predict(const Model& model, std::span<const WindowSample* const> samples,
                            const GraphContext* context, std::size_t batch_size) {
    std::vector<double> out;
    out.reserve(samples.size());
    batch_size = std::max<std::size_t>(batch_size, 1);
    ad::Tape tape;
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        const auto batch = samples.subspan(start, std::min(batch_size, samples.size() - start));
        const auto params = bind_parameters(tape, model, false);
        const Tensor p = forward_batch(tape, model, params, batch, context).value();
        out.insert(out.end(), p.data().begin(), p.data().end());
        tape.clear();
    }
    return out;
}

}  // namespace flowguard
