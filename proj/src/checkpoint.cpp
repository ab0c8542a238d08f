#include <nlohmann/json.hpp>

#include "flowguard/training.hpp"

namespace flowguard {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "flowguard-checkpoint";
constexpr int kVersion = 1;

json model_config_json(const ModelConfig& c) {
    return json{{"kind", model_kind_name(c.kind)},
                {"hidden_dim", c.hidden_dim},
                {"gat_dim", c.gat_dim},
                {"heads", c.heads},
                {"layers", c.layers},
                {"leaky_slope", c.leaky_slope},
                {"activation", activation_name(c.activation)},
                {"peer_edges", c.graph.peer_edges},
                {"directed_hierarchy", c.graph.directed_hierarchy},
                {"node_features", c.node_features == NodeFeatureMode::window ? "window" : "static_means"}};
}

ModelConfig model_config_from(const json& j) {
    ModelConfig c;
    c.kind = parse_model_kind(j.at("kind").get<std::string>());
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.gat_dim = j.at("gat_dim").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.graph.peer_edges = j.at("peer_edges").get<bool>();
    c.graph.directed_hierarchy = j.at("directed_hierarchy").get<bool>();
    const auto nf = j.at("node_features").get<std::string>();
    if (nf != "window" && nf != "static_means") {
        throw CheckpointError("checkpoint field 'model.node_features' has unknown value '" + nf + "'");
    }
    c.node_features = nf == "window" ? NodeFeatureMode::window : NodeFeatureMode::static_means;
    return c;
}

}  // namespace

std::string save_checkpoint(const Model& model, const FeatureRegistry& registry, std::string_view fingerprint) {
    json params = json::array();
    for (const auto& p : model.named_parameters()) {
        json data = json::array();
        for (const double v : p.tensor->data()) {
            data.push_back(v);
        }
        params.push_back(json{{"name", p.name}, {"shape", {p.tensor->rows(), p.tensor->cols()}}, {"data", data}});
    }
    json kinds = json::array();
    for (const auto k : registry.kinds) {
        kinds.push_back(k == ColumnKind::indicator ? "indicator" : "continuous");
    }
    const json doc{{"format", kFormat},
                   {"version", kVersion},
                   {"model", model_config_json(model.config)},
                   {"feature_dim", model.feature_dim},
                   {"window", model.window},
                   {"registry", {{"names", registry.names}, {"kinds", kinds}}},
                   {"fingerprint", std::string(fingerprint)},
                   {"parameters", params}};
    return doc.dump(1) + '\n';
}

Checkpoint load_checkpoint(std::string_view text, const FeatureRegistry* expected_registry,
                           std::optional<std::string_view> expected_fingerprint) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CheckpointError(std::string("checkpoint is corrupt or truncated: ") + e.what());
    }
    std::string field;
    try {
        field = "format";
        if (doc.at("format").get<std::string>() != kFormat) {
            throw CheckpointError("not a checkpoint document (field 'format')");
        }
        field = "version";
        if (doc.at("version").get<int>() != kVersion) {
            throw CheckpointError("unsupported checkpoint version " + doc.at("version").dump());
        }
        Checkpoint cp;
        field = "registry";
        cp.registry.names = doc.at("registry").at("names").get<std::vector<std::string>>();
        for (const auto& k : doc.at("registry").at("kinds")) {
            cp.registry.kinds.push_back(k.get<std::string>() == "indicator" ? ColumnKind::indicator
                                                                            : ColumnKind::continuous);
        }
        if (cp.registry.kinds.size() != cp.registry.names.size()) {
            throw CheckpointError("checkpoint field 'registry' has mismatched names and kinds");
        }
        field = "fingerprint";
        cp.fingerprint = doc.at("fingerprint").get<std::string>();
        field = "model";
        const ModelConfig mc = model_config_from(doc.at("model"));
        field = "feature_dim";
        const auto feature_dim = doc.at("feature_dim").get<std::size_t>();
        field = "window";
        const auto window = doc.at("window").get<std::size_t>();
        if (feature_dim != cp.registry.size()) {
            throw CheckpointError("checkpoint field 'feature_dim' (" + std::to_string(feature_dim) +
                                  ") disagrees with its registry (" + std::to_string(cp.registry.size()) + ")");
        }
        if (expected_registry && expected_registry->names != cp.registry.names) {
            throw CheckpointError("checkpoint field 'registry' does not match the current features: checkpoint has " +
                                  std::to_string(cp.registry.size()) + " features, current registry has " +
                                  std::to_string(expected_registry->size()));
        }
        if (expected_fingerprint && *expected_fingerprint != cp.fingerprint) {
            throw CheckpointError("checkpoint field 'fingerprint' does not match the current configuration");
        }
        cp.model = zero_model(mc, feature_dim, window);
        field = "parameters";
        const auto& params = doc.at("parameters");
        auto named = cp.model.named_parameters();
        if (params.size() != named.size()) {
            throw CheckpointError("checkpoint field 'parameters' has " + std::to_string(params.size()) +
                                  " entries, expected " + std::to_string(named.size()));
        }
        for (std::size_t i = 0; i < named.size(); ++i) {
            const auto& p = params[i];
            const auto name = p.at("name").get<std::string>();
            field = "parameters." + name;
            if (name != named[i].name) {
                throw CheckpointError("checkpoint parameter " + std::to_string(i) + " is '" + name + "', expected '" +
                                      named[i].name + "'");
            }
            const auto shape = p.at("shape").get<std::vector<std::size_t>>();
            Tensor& t = *named[i].tensor;
            if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
                throw CheckpointError("checkpoint field '" + field + ".shape' disagrees with the model config");
            }
            const auto data = p.at("data").get<std::vector<double>>();
            if (data.size() != t.size()) {
                throw CheckpointError("checkpoint field '" + field + ".data' has " + std::to_string(data.size()) +
                                      " values, expected " + std::to_string(t.size()));
            }
            t = Tensor(t.rows(), t.cols(), data);
            if (!t.all_finite()) {
                throw CheckpointError("checkpoint field '" + field + "' holds non-finite values");
            }
        }
        return cp;
    } catch (const json::exception& e) {
        throw CheckpointError("checkpoint field '" + field + "' is missing or malformed: " + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError("checkpoint field '" + field + "' is invalid: " + e.what());
    }
}

}  // namespace flowguard
