#include "flowguard/config.hpp"

#include <nlohmann/json.hpp>

#include "flowguard/error.hpp"
#include "flowguard/hash.hpp"

namespace flowguard {

namespace {

using nlohmann::json;

std::string join(std::string_view prefix, std::string_view key) {
    return prefix.empty() ? std::string(key) : std::string(prefix) + '.' + std::string(key);
}

json anomaly_json(const AnomalySpec& a) {
    return json{{"kind", anomaly_kind_name(a.kind)}, {"rate", a.rate},         {"magnitude", a.magnitude},
                {"duration", a.duration},            {"precursor", a.precursor}, {"max_lag", a.max_lag}};
}

json to_json(const RunConfig& c) {
    json columns{{"date", c.columns.date}, {"well", c.columns.well}};
    for (const auto v : kAllVariables) {
        columns[std::string(variable_name(v))] = c.columns.column(v);
    }
    json raw = json::array();
    for (const auto v : c.features.raw_variables) {
        raw.push_back(variable_name(v));
    }
    json anomalies = json::array();
    for (const auto& a : c.synth.anomalies) {
        anomalies.push_back(anomaly_json(a));
    }
    return json{
        {"paths", {{"data", c.paths.data}, {"topology", c.paths.topology}, {"output_dir", c.paths.output_dir}}},
        {"columns", columns},
        {"impute",
         {{"ffill_horizon", c.impute.ffill_horizon}, {"persistent_missing_frac", c.impute.persistent_missing_frac}}},
        {"features",
         {{"rolling_window", c.features.rolling_window},
          {"epsilon", c.features.epsilon},
          {"raw_variables", raw},
          {"rolling_inputs", c.features.rolling_inputs},
          {"include_ratios", c.features.include_ratios}}},
        {"rules",
         {{"drop_frac", c.rules.drop_frac},
          {"min_onstream_hrs", c.rules.min_onstream_hrs},
          {"zscore_flow", c.rules.zscore_flow},
          {"zscore_pressure", c.rules.zscore_pressure},
          {"gor_m", c.rules.gor_m},
          {"zscore_window", c.rules.zscore_window}}},
        {"window", c.window},
        {"split",
         {{"kind", split_kind_name(c.split.kind)},
          {"ratio", c.split.ratio},
          {"cutoff", c.split.cutoff ? json(format_day(*c.split.cutoff)) : json(nullptr)}}},
        {"model",
         {{"kind", model_kind_name(c.model.kind)},
          {"hidden_dim", c.model.hidden_dim},
          {"gat_dim", c.model.gat_dim},
          {"heads", c.model.heads},
          {"layers", c.model.layers},
          {"leaky_slope", c.model.leaky_slope},
          {"activation", activation_name(c.model.activation)},
          {"peer_edges", c.model.graph.peer_edges},
          {"directed_hierarchy", c.model.graph.directed_hierarchy},
          {"node_features", c.model.node_features == NodeFeatureMode::window ? "window" : "static_means"}}},
        {"training",
         {{"lr", c.training.lr},
          {"epochs", c.training.epochs},
          {"batch_size", c.training.batch_size},
          {"beta", c.training.beta ? json(*c.training.beta) : json(nullptr)},
          {"early_stop_patience", c.training.early_stop_patience},
          {"clamp_eps", c.training.clamp_eps},
          {"validation_fraction", c.training.validation_fraction}}},
        {"threshold", c.threshold},
        {"synth",
         {{"n_fields", c.synth.n_fields},
          {"n_facilities", c.synth.n_facilities},
          {"wells_per_facility", c.synth.wells_per_facility},
          {"T", c.synth.T},
          {"start", format_day(c.synth.start)},
          {"decline_rate", c.synth.decline_rate},
          {"q0_min", c.synth.q0_min},
          {"q0_max", c.synth.q0_max},
          {"noise_cv", c.synth.noise_cv},
          {"downtime_rate", c.synth.downtime_rate},
          {"anomalies", anomalies},
          {"shift_start", c.synth.shift_start},
          {"shift_factor", c.synth.shift_factor}}},
        {"seed", c.seed},
        {"jobs", c.jobs},
    };
}

/// Overlays `patch` onto `base`; every key of `patch` must exist in `base`.
void merge(json& base, const json& patch, const std::string& path) {
    if (!patch.is_object()) {
        throw ConfigError(path.empty() ? "config document must be a JSON object"
                                       : "config key '" + path + "' must be an object");
    }
    for (const auto& [key, value] : patch.items()) {
        const std::string here = join(path, key);
        const auto it = base.find(key);
        if (it == base.end()) {
            throw ConfigError("unknown config key '" + here + "'");
        }
        if (it->is_object()) {
            merge(*it, value, here);
        } else {
            *it = value;
        }
    }
}

void set_path(json& base, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override '" + std::string(assignment) + "' is not of the form key.path=value");
    }
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &base;
    std::string path;
    std::size_t pos = 0;
    while (true) {
        const auto dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        path = join(path, part);
        if (!node->is_object() || !node->contains(part)) {
            throw ConfigError("unknown config key '" + path + "'");
        }
        node = &(*node)[part];
        if (dot == std::string::npos) {
            break;
        }
        pos = dot + 1;
    }
    if (node->is_object()) {
        merge(*node, value, key);
    } else {
        *node = value;
    }
}

/// Typed access with key-path error messages.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    template <typename T>
    T get(std::string_view key) const {
        const std::string here = join(path_, key);
        const auto it = j_.find(std::string(key));
        if (it == j_.end()) {
            throw ConfigError("missing config key '" + here + "'");
        }
        try {
            if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                if (it->is_number_integer() && it->template get<long long>() < 0) {
                    throw ConfigError("config key '" + here + "' must be non-negative");
                }
                if (!it->is_number_integer()) {
                    throw ConfigError("config key '" + here + "' must be an integer");
                }
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!it->is_number_integer()) {
                    throw ConfigError("config key '" + here + "' must be an integer");
                }
            }
            return it->template get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config key '" + here + "' has the wrong type (" + std::string(it->type_name()) + ")");
        }
    }

    [[nodiscard]] Reader child(std::string_view key) const {
        const std::string here = join(path_, key);
        const auto it = j_.find(std::string(key));
        if (it == j_.end() || !it->is_object()) {
            throw ConfigError("config key '" + here + "' must be an object");
        }
        return Reader(*it, here);
    }

    [[nodiscard]] const json& raw(std::string_view key) const { return j_.at(std::string(key)); }
    [[nodiscard]] std::string key_path(std::string_view key) const { return join(path_, key); }

    /// Rejects keys other than `allowed`.
    void only(std::initializer_list<std::string_view> allowed) const {
        for (const auto& [key, value] : j_.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw ConfigError("unknown config key '" + join(path_, key) + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
};

template <typename F>
auto with_path(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.find('\'' + path + '\'') != std::string::npos) {
            throw;
        }
        throw ConfigError("config key '" + path + "': " + msg);
    }
}

Variable variable_at(const std::string& name, const std::string& path) {
    const auto v = variable_from_name(name);
    if (!v) {
        throw ConfigError("config key '" + path + "' names unknown variable '" + name + "'");
    }
    return *v;
}

RunConfig from_json(const json& j) {
    RunConfig c;
    const Reader root(j, "");
    const Reader paths = root.child("paths");
    c.paths.data = paths.get<std::string>("data");
    c.paths.topology = paths.get<std::string>("topology");
    c.paths.output_dir = paths.get<std::string>("output_dir");

    const Reader cols = root.child("columns");
    c.columns.date = cols.get<std::string>("date");
    c.columns.well = cols.get<std::string>("well");
    for (const auto v : kAllVariables) {
        c.columns.variables[index_of(v)] = cols.get<std::string>(variable_name(v));
    }

    const Reader imp = root.child("impute");
    c.impute.ffill_horizon = imp.get<int>("ffill_horizon");
    c.impute.persistent_missing_frac = imp.get<double>("persistent_missing_frac");

    const Reader feat = root.child("features");
    c.features.rolling_window = feat.get<int>("rolling_window");
    c.features.epsilon = feat.get<double>("epsilon");
    c.features.raw_variables.clear();
    for (const auto& name : feat.get<std::vector<std::string>>("raw_variables")) {
        c.features.raw_variables.push_back(variable_at(name, feat.key_path("raw_variables")));
    }
    c.features.rolling_inputs = feat.get<std::vector<std::string>>("rolling_inputs");
    c.features.include_ratios = feat.get<bool>("include_ratios");

    const Reader rules = root.child("rules");
    c.rules.drop_frac = rules.get<double>("drop_frac");
    c.rules.min_onstream_hrs = rules.get<double>("min_onstream_hrs");
    c.rules.zscore_flow = rules.get<double>("zscore_flow");
    c.rules.zscore_pressure = rules.get<double>("zscore_pressure");
    c.rules.gor_m = rules.get<double>("gor_m");
    c.rules.zscore_window = rules.get<int>("zscore_window");

    c.window = root.get<int>("window");

    const Reader split = root.child("split");
    const auto kind = split.get<std::string>("kind");
    if (kind != "random" && kind != "time") {
        throw ConfigError("config key 'split.kind' must be \"random\" or \"time\"");
    }
    c.split.kind = kind == "random" ? SplitKind::random : SplitKind::time;
    c.split.ratio = split.get<double>("ratio");
    if (!split.raw("cutoff").is_null()) {
        const auto day = parse_day(split.get<std::string>("cutoff"));
        if (!day) {
            throw ConfigError("config key 'split.cutoff' is not a date");
        }
        c.split.cutoff = *day;
    }

    const Reader model = root.child("model");
    c.model.kind = with_path("model.kind", [&] { return parse_model_kind(model.get<std::string>("kind")); });
    c.model.hidden_dim = model.get<std::size_t>("hidden_dim");
    c.model.gat_dim = model.get<std::size_t>("gat_dim");
    c.model.heads = model.get<std::size_t>("heads");
    c.model.layers = model.get<std::size_t>("layers");
    c.model.leaky_slope = model.get<double>("leaky_slope");
    c.model.activation =
        with_path("model.activation", [&] { return parse_activation(model.get<std::string>("activation")); });
    c.model.graph.peer_edges = model.get<bool>("peer_edges");
    c.model.graph.directed_hierarchy = model.get<bool>("directed_hierarchy");
    const auto nf = model.get<std::string>("node_features");
    if (nf != "window" && nf != "static_means") {
        throw ConfigError("config key 'model.node_features' must be \"window\" or \"static_means\"");
    }
    c.model.node_features = nf == "window" ? NodeFeatureMode::window : NodeFeatureMode::static_means;

    const Reader tr = root.child("training");
    c.training.lr = tr.get<double>("lr");
    c.training.epochs = tr.get<std::size_t>("epochs");
    c.training.batch_size = tr.get<std::size_t>("batch_size");
    if (!tr.raw("beta").is_null()) {
        c.training.beta = tr.get<double>("beta");
    }
    c.training.early_stop_patience = tr.get<std::size_t>("early_stop_patience");
    c.training.clamp_eps = tr.get<double>("clamp_eps");
    c.training.validation_fraction = tr.get<double>("validation_fraction");

    c.threshold = root.get<double>("threshold");

    const Reader syn = root.child("synth");
    c.synth.n_fields = syn.get<int>("n_fields");
    c.synth.n_facilities = syn.get<int>("n_facilities");
    c.synth.wells_per_facility = syn.get<int>("wells_per_facility");
    c.synth.T = syn.get<int>("T");
    const auto start = parse_day(syn.get<std::string>("start"));
    if (!start) {
        throw ConfigError("config key 'synth.start' is not a date");
    }
    c.synth.start = *start;
    c.synth.decline_rate = syn.get<double>("decline_rate");
    c.synth.q0_min = syn.get<double>("q0_min");
    c.synth.q0_max = syn.get<double>("q0_max");
    c.synth.noise_cv = syn.get<double>("noise_cv");
    c.synth.downtime_rate = syn.get<double>("downtime_rate");
    c.synth.shift_start = syn.get<double>("shift_start");
    c.synth.shift_factor = syn.get<double>("shift_factor");
    const auto& anomalies = syn.raw("anomalies");
    if (!anomalies.is_array()) {
        throw ConfigError("config key 'synth.anomalies' must be an array");
    }
    c.synth.anomalies.clear();
    for (std::size_t i = 0; i < anomalies.size(); ++i) {
        const std::string path = "synth.anomalies[" + std::to_string(i) + "]";
        if (!anomalies[i].is_object()) {
            throw ConfigError("config key '" + path + "' must be an object");
        }
        const Reader a(anomalies[i], path);
        a.only({"kind", "rate", "magnitude", "duration", "precursor", "max_lag"});
        AnomalySpec spec;
        spec.kind = with_path(path + ".kind", [&] { return parse_anomaly_kind(a.get<std::string>("kind")); });
        spec.rate = a.get<double>("rate");
        spec.magnitude = anomalies[i].contains("magnitude") ? a.get<double>("magnitude") : 0.0;
        spec.duration = a.get<int>("duration");
        spec.precursor = anomalies[i].contains("precursor") ? a.get<int>("precursor") : 0;
        spec.max_lag = anomalies[i].contains("max_lag") ? a.get<int>("max_lag") : 0;
        c.synth.anomalies.push_back(spec);
    }

    c.seed = root.get<std::uint64_t>("seed");
    c.jobs = root.get<unsigned>("jobs");
    c.synth.seed = c.seed;
    c.split.seed = c.seed;
    c.training.seed = c.seed;
    c.training.threshold = c.threshold;
    return c;
}

}  // namespace

void RunConfig::validate() const {
    with_path("impute", [&] {
        if (impute.ffill_horizon < 0) {
            throw ConfigError("config key 'impute.ffill_horizon' must be >= 0");
        }
        if (!(impute.persistent_missing_frac >= 0.0 && impute.persistent_missing_frac <= 1.0)) {
            throw ConfigError("config key 'impute.persistent_missing_frac' must lie in [0, 1]");
        }
        return 0;
    });
    if (features.rolling_window < 1) {
        throw ConfigError("config key 'features.rolling_window' must be >= 1");
    }
    if (!(features.epsilon > 0.0)) {
        throw ConfigError("config key 'features.epsilon' must be > 0");
    }
    with_path("rules", [&] {
        rules.validate();
        return 0;
    });
    if (window < 1) {
        throw ConfigError("config key 'window' must be >= 1");
    }
    with_path("split", [&] {
        split.validate();
        return 0;
    });
    with_path("model", [&] {
        model.validate();
        return 0;
    });
    with_path("training", [&] {
        training.validate();
        return 0;
    });
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("config key 'threshold' must lie in [0, 1]");
    }
    with_path("synth", [&] {
        synth.validate();
        return 0;
    });
    if (jobs == 0) {
        throw ConfigError("config key 'jobs' must be >= 1");
    }
}

RunConfig parse_config(std::string_view json_text, std::span<const std::string> overrides) {
    json base = to_json(RunConfig{});
    if (!json_text.empty()) {
        json doc;
        try {
            doc = json::parse(json_text);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        merge(base, doc, "");
    }
    for (const auto& o : overrides) {
        set_path(base, o);
    }
    RunConfig cfg = from_json(base);
    cfg.validate();
    return cfg;
}

std::string config_to_json(const RunConfig& cfg) { return to_json(cfg).dump(2) + '\n'; }

std::string config_fingerprint(const RunConfig& cfg) {
    json j = to_json(cfg);
    j["paths"].erase("output_dir");
    j.erase("jobs");
    return sha256_hex(j.dump());
}

}  // namespace flowguard
