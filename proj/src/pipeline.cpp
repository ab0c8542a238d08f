#include "flowguard/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"
#include "flowguard/hash.hpp"
#include "flowguard/rng.hpp"
#include "flowguard/synth.hpp"

namespace flowguard {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view variant_slug(Variant v) noexcept {
    switch (v) {
        case Variant::logistic: return "logistic";
        case Variant::lstm: return "lstm";
        case Variant::gat_hierarchy: return "gat_hier";
        case Variant::gat_peer: return "gat_peer";
    }
    return "?";
}

std::string_view variant_display_name(Variant v) noexcept {
    switch (v) {
        case Variant::logistic: return "Logistic (flattened)";
        case Variant::lstm: return "LSTM";
        case Variant::gat_hierarchy: return "Temporal GAT (hierarchy only)";
        case Variant::gat_peer: return "Temporal GAT (with well–well edges)";
    }
    return "?";
}

Variant parse_variant(std::string_view slug) {
    for (const Variant v : kAllVariants) {
        if (variant_slug(v) == slug) return v;
    }
    throw ConfigError("unknown model variant '" + std::string(slug) +
                      "' (expected logistic, lstm, gat_hier or gat_peer)");
}

SplitKind parse_split_kind(std::string_view name) {
    if (name == "random") return SplitKind::random;
    if (name == "time") return SplitKind::time;
    throw ConfigError("unknown split kind '" + std::string(name) + "' (expected random or time)");
}

Variant configured_variant(const ModelConfig& model) {
    switch (model.kind) {
        case ModelKind::logistic: return Variant::logistic;
        case ModelKind::lstm: return Variant::lstm;
        case ModelKind::temporal_gat: return model.graph.peer_edges ? Variant::gat_peer : Variant::gat_hierarchy;
    }
    return Variant::gat_peer;
}

ModelConfig variant_model(const ModelConfig& base, Variant v) {
    ModelConfig m = base;
    switch (v) {
        case Variant::logistic: m.kind = ModelKind::logistic; break;
        case Variant::lstm: m.kind = ModelKind::lstm; break;
        case Variant::gat_hierarchy:
            m.kind = ModelKind::temporal_gat;
            m.graph.peer_edges = false;
            break;
        case Variant::gat_peer:
            m.kind = ModelKind::temporal_gat;
            m.graph.peer_edges = true;
            break;
    }
    return m;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1U, jobs), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::size_t first_index = n;
    std::mutex mu;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                // Report the lowest failing index so errors are reproducible.
                const std::lock_guard lock(mu);
                if (i < first_index) {
                    first_index = i;
                    first_error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---- in-memory stages ----------------------------------------------------------

std::map<std::string, WellSeries> ingest(std::string_view production_table, const Topology& topology,
                                         const RunConfig& cfg) {
    auto grouped = build_well_series(parse_production_table(production_table, cfg.columns), topology);
    std::vector<WellSeries*> wells;
    for (auto& [id, s] : grouped) wells.push_back(&s);
    parallel_for(wells.size(), cfg.jobs, [&](std::size_t i) { *wells[i] = impute_series(*wells[i], cfg.impute); });
    return grouped;
}

std::vector<FeatureMatrix> featurize(const std::map<std::string, WellSeries>& clean, const RunConfig& cfg) {
    FeatureConfig fc = cfg.features;
    fc.indicator_variables = indicator_variables(clean);
    std::vector<const WellSeries*> wells;
    for (const auto& [id, s] : clean) wells.push_back(&s);
    std::vector<FeatureMatrix> out(wells.size());
    parallel_for(wells.size(), cfg.jobs, [&](std::size_t i) { out[i] = assemble_feature_matrix(*wells[i], fc); });
    return out;
}

std::vector<LabelFrame> label(std::span<const FeatureMatrix> features, const RunConfig& cfg) {
    cfg.rules.validate();
    std::vector<LabelFrame> out(features.size());
    parallel_for(features.size(), cfg.jobs, [&](std::size_t i) { out[i] = weak_labels(features[i], cfg.rules); });
    return out;
}

namespace {

const LabelFrame& labels_of(std::span<const LabelFrame> labels, const std::string& well) {
    for (const auto& l : labels) {
        if (l.well_id == well) return l;
    }
    throw DataError("no labels for well '" + well + "'");
}

}  // namespace

std::vector<WindowSample> raw_windows(std::span<const FeatureMatrix> features, std::span<const LabelFrame> labels,
                                      int r) {
    std::vector<const FeatureMatrix*> order;
    for (const auto& f : features) order.push_back(&f);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->well_id < b->well_id; });
    std::vector<WindowSample> out;
    for (const FeatureMatrix* f : order) {
        auto w = make_windows(*f, labels_of(labels, f->well_id), r);
        std::move(w.begin(), w.end(), std::back_inserter(out));
    }
    return out;
}

std::map<std::string, std::vector<std::uint8_t>> train_row_masks(std::span<const FeatureMatrix> features,
                                                                 std::span<const WindowSample> samples,
                                                                 std::span<const std::size_t> train) {
    std::map<std::string, std::vector<std::uint8_t>> masks;
    for (const auto& f : features) masks[f.well_id].assign(f.rows(), 0);
    for (const std::size_t i : train) {
        const WindowSample& s = samples[i];
        auto it = masks.find(s.well_id);
        if (it == masks.end()) throw DataError("sample references unknown well '" + s.well_id + "'");
        const std::size_t r = s.X.rows();
        for (std::size_t t = s.t - r; t < s.t; ++t) it->second[t] = 1;
    }
    return masks;
}

std::vector<const WindowSample*> Experiment::test_samples() const {
    std::vector<const WindowSample*> out;
    out.reserve(split.test.size());
    for (const std::size_t i : split.test) out.push_back(&samples[i]);
    return out;
}

std::vector<std::uint8_t> Experiment::test_labels() const {
    std::vector<std::uint8_t> out;
    out.reserve(split.test.size());
    for (const std::size_t i : split.test) out.push_back(samples[i].y);
    return out;
}

NodeFeatureTable window_node_features(const ProductionGraph& graph, std::span<const WindowSample> samples) {
    NodeFeatureTable table;
    if (samples.empty()) return table;
    std::map<Day, WellWindows> by_date;
    for (const auto& s : samples) by_date[s.target_date][s.well_id] = &s.X;
    // Wells without a window on a date contribute a zero vector.
    const Tensor zeros(samples.front().X.rows(), samples.front().X.cols());
    for (auto& [day, windows] : by_date) {
        for (const std::size_t node : graph.well_nodes()) {
            windows.try_emplace(graph.nodes()[node].id, &zeros);
        }
        table.emplace(day, node_input_features(graph, windows, NodeFeatureMode::window));
    }
    return table;
}

namespace {

NodeFeatureTable static_node_features(const ProductionGraph& graph, std::span<const WindowSample> samples,
                                      std::span<const std::size_t> train) {
    NodeFeatureTable table;
    if (samples.empty()) return table;
    const std::size_t F = samples.front().X.cols();
    std::map<std::string, std::pair<Tensor, std::size_t>, std::less<>> sums;
    for (const std::size_t i : train) {
        const WindowSample& s = samples[i];
        auto [it, fresh] = sums.try_emplace(s.well_id, Tensor(1, F), 0);
        for (std::size_t r = 0; r < s.X.rows(); ++r) {
            for (std::size_t c = 0; c < F; ++c) it->second.first(0, c) += s.X(r, c);
        }
        it->second.second += s.X.rows();
    }
    WellWindows windows;
    const Tensor zeros(1, F);
    for (auto& [well, acc] : sums) {
        for (std::size_t c = 0; c < F; ++c) acc.first(0, c) /= static_cast<double>(acc.second);
        windows[well] = &acc.first;
    }
    for (const std::size_t node : graph.well_nodes()) windows.try_emplace(graph.nodes()[node].id, &zeros);
    NodeFeatures nf = node_input_features(graph, windows, NodeFeatureMode::static_means);
    for (const auto& s : samples) table.try_emplace(s.target_date, nf);
    return table;
}

}  // namespace

Experiment build_experiment(const Topology& topology, std::span<const FeatureMatrix> features,
                            std::span<const LabelFrame> labels, const RunConfig& cfg, SplitKind kind,
                            const SplitResult* fixed) {
    Experiment exp;
    exp.kind = kind;
    exp.topology = topology;
    if (features.empty()) throw DataError("no feature matrices");
    exp.registry = features.front().registry;
    for (const auto& f : features) {
        if (f.registry != exp.registry) throw RegistryError("well '" + f.well_id + "' has a different feature registry");
    }

    const auto raw = raw_windows(features, labels, cfg.window);
    if (fixed != nullptr) {
        exp.split = *fixed;
    } else {
        SplitSpec spec = cfg.split;
        spec.kind = kind;
        exp.split = split_samples(raw, spec);
    }
    const auto masks = train_row_masks(features, raw, exp.split.train);

    std::vector<const FeatureMatrix*> order;
    for (const auto& f : features) order.push_back(&f);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->well_id < b->well_id; });
    std::vector<FeatureMatrix> scaled(order.size());
    exp.stats.resize(order.size());
    parallel_for(order.size(), cfg.jobs, [&](std::size_t i) {
        const FeatureMatrix& f = *order[i];
        const auto& mask = masks.at(f.well_id);
        if (std::find(mask.begin(), mask.end(), 1) == mask.end()) {
            if (static_cast<int>(f.rows()) > cfg.window) {
                throw DataError("well '" + f.well_id + "' has no training rows to fit standardization on");
            }
            scaled[i] = f;  // too short to produce any window
            return;
        }
        exp.stats[i] = compute_feature_stats(f, mask);
        scaled[i] = apply_feature_stats(f, exp.stats[i]);
    });

    exp.samples = raw_windows(scaled, labels, cfg.window);
    if (exp.samples.size() != raw.size()) throw DataError("window count changed after standardization");
    exp.fit = split_validation(exp.samples, exp.split.train, kind, cfg.training.validation_fraction);

    exp.node_order = build_graph(topology, {});
    exp.window_features = window_node_features(exp.node_order, exp.samples);
    exp.static_features = static_node_features(exp.node_order, exp.samples, exp.split.train);
    return exp;
}

std::uint64_t run_seed(std::uint64_t seed, Variant v, SplitKind kind) noexcept {
    const std::uint64_t tag = 0x100 * (static_cast<std::uint64_t>(v) + 1) + static_cast<std::uint64_t>(kind);
    return SplitMix64::derive(seed, tag);
}

namespace {

struct VariantContext {
    ModelConfig model;
    ProductionGraph graph;
    GraphContext context;

    [[nodiscard]] const GraphContext* get() const {
        return model.kind == ModelKind::temporal_gat ? &context : nullptr;
    }
};

// Returned by pointer: GraphContext refers to the graph member.
std::unique_ptr<VariantContext> variant_context(const Experiment& exp, const ModelConfig& model) {
    auto vc = std::make_unique<VariantContext>();
    vc->model = model;
    vc->graph = build_graph(exp.topology, model.graph);
    vc->context = GraphContext{&vc->graph, &exp.node_features(model.node_features)};
    return vc;
}

}  // namespace

TrainResult train_variant(const Experiment& exp, Variant v, const RunConfig& cfg) {
    const auto vc = variant_context(exp, variant_model(cfg.model, v));
    const std::uint64_t seed = run_seed(cfg.seed, v, exp.kind);
    Model initial = init_model(vc->model, exp.registry.size(), static_cast<std::size_t>(cfg.window), seed);
    TrainConfig tc = cfg.training;
    tc.seed = seed;
    tc.threshold = cfg.threshold;
    return train(std::move(initial), exp.samples, exp.fit.fit, exp.fit.validation, vc->get(), tc);
}

EvalReport evaluate_variant(const Experiment& exp, Variant v, const Model& model, const RunConfig& cfg,
                            std::vector<double>* scores_out) {
    const auto vc = variant_context(exp, model.config);
    const auto batch = exp.test_samples();
    const auto scores = predict(model, batch, vc->get());
    const auto labels = exp.test_labels();
    const RunScores run{std::string(variant_display_name(v)), scores, labels};
    EvalReport report = build_report(run, split_kind_name(exp.kind), exp.split.report, cfg.threshold,
                                     run_seed(cfg.seed, v, exp.kind), config_fingerprint(cfg));
    if (scores_out != nullptr) *scores_out = scores;
    return report;
}

VariantRun run_variant(const Experiment& exp, Variant v, const RunConfig& cfg) {
    VariantRun run{train_variant(exp, v, cfg), {}, {}};
    run.report = evaluate_variant(exp, v, run.trained.model, cfg, &run.test_scores);
    return run;
}

// ---- artifact stages ---------------------------------------------------------------

namespace {

constexpr std::string_view kManifest = "manifest.json";

Day require_day(const std::string& text) {
    const auto d = parse_day(text);
    if (!d) throw DataError("invalid date '" + text + "'");
    return *d;
}

std::string split_file(SplitKind kind) { return "split_" + std::string(split_kind_name(kind)) + ".json"; }

std::string run_suffix(Variant v, SplitKind kind) {
    return std::string(variant_slug(v)) + "_" + std::string(split_kind_name(kind));
}

json sample_keys(std::span<const WindowSample> samples, std::span<const std::size_t> idx) {
    json out = json::array();
    for (const std::size_t i : idx) out.push_back({samples[i].well_id, format_day(samples[i].target_date)});
    return out;
}

}  // namespace

Workspace::Workspace(RunConfig cfg) : cfg_(std::move(cfg)), dir_(cfg_.paths.output_dir) {
    cfg_.validate();
    fingerprint_ = config_fingerprint(cfg_);
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
}

std::string Workspace::model_file(Variant v, SplitKind kind) { return "model_" + run_suffix(v, kind) + ".json"; }
std::string Workspace::metrics_file(Variant v, SplitKind kind) {
    return "metrics_" + run_suffix(v, kind) + ".json";
}

fs::path Workspace::production_path() const {
    return cfg_.paths.data.empty() ? dir_ / "production.csv" : fs::path(cfg_.paths.data);
}

fs::path Workspace::topology_path() const {
    return cfg_.paths.topology.empty() ? dir_ / "topology.csv" : fs::path(cfg_.paths.topology);
}

std::string Workspace::require(const fs::path& path, std::string_view stage) const {
    if (!fs::exists(path)) {
        throw MissingArtifactError("missing artifact '" + path.string() + "'; run `flowguard " + std::string(stage) +
                                   "` first");
    }
    return read_text_file(path);
}

void Workspace::write(const std::string& name, std::string_view content) { write_file_atomic(dir_ / name, content); }

void Workspace::record(std::string_view stage, std::span<const std::string> outputs,
                       std::span<const fs::path> inputs) {
    const fs::path path = dir_ / kManifest;
    json manifest = json::object();
    if (fs::exists(path)) {
        try {
            manifest = json::parse(read_text_file(path));
        } catch (const json::exception&) {
            manifest = json::object();  // rebuilt from scratch
        }
    }
    if (!manifest.contains("artifacts") || !manifest["artifacts"].is_object()) manifest["artifacts"] = json::object();
    json in = json::object();
    for (const auto& p : inputs) {
        const fs::path rel = p.parent_path() == dir_ ? p.filename() : p;
        in[rel.generic_string()] = sha256_file(p);
    }
    for (const auto& name : outputs) {
        manifest["artifacts"][name] = {
            {"sha256", sha256_file(dir_ / name)},
            {"stage", stage},
            {"inputs", in},
            {"config_fingerprint", fingerprint_},
            {"seed", cfg_.seed},
        };
    }
    write_file_atomic(path, manifest.dump(2) + "\n");
}

void Workspace::synth() {
    auto [data, log] = generate(cfg_.synth);
    const std::vector<std::string> outputs = {"production.csv", "topology.csv", "truth_events.csv", "truth_mask.csv"};
    write(outputs[0], export_volve_schema(data));
    write(outputs[1], format_topology(data.topology));
    write(outputs[2], format_truth_events(log));
    write(outputs[3], format_truth_mask(log, data));
    record("synth", outputs, {});
}

void Workspace::ingest() {
    const fs::path prod = production_path();
    const fs::path topo = topology_path();
    const std::string production = require(prod, "synth");
    const Topology topology = parse_topology(require(topo, "synth"));
    const auto clean = flowguard::ingest(production, topology, cfg_);
    write("clean_series.csv", format_clean_series(clean));
    const std::vector<std::string> outputs = {"clean_series.csv"};
    const std::vector<fs::path> inputs = {prod, topo};
    record("ingest", outputs, inputs);
}

void Workspace::featurize() {
    const fs::path in = dir_ / "clean_series.csv";
    const auto clean = parse_clean_series(require(in, "ingest"));
    const auto features = flowguard::featurize(clean, cfg_);
    write("features.csv", format_feature_table(features));
    const std::vector<std::string> outputs = {"features.csv"};
    const std::vector<fs::path> inputs = {in};
    record("featurize", outputs, inputs);
}

void Workspace::label() {
    const fs::path in = dir_ / "features.csv";
    const auto labels = flowguard::label(load_features(), cfg_);
    write("labels.csv", format_label_table(labels));
    const std::vector<std::string> outputs = {"labels.csv"};
    const std::vector<fs::path> inputs = {in};
    record("label", outputs, inputs);
}

Topology Workspace::load_topology() const { return parse_topology(require(topology_path(), "synth")); }

std::vector<FeatureMatrix> Workspace::load_features() const {
    return parse_feature_table(require(dir_ / "features.csv", "featurize"));
}

std::vector<LabelFrame> Workspace::load_labels() const {
    return parse_label_table(require(dir_ / "labels.csv", "label"));
}

void Workspace::split() {
    const auto features = load_features();
    const auto labels = load_labels();
    const auto samples = raw_windows(features, labels, cfg_.window);
    std::vector<std::string> outputs;
    for (const SplitKind kind : kAllSplits) {
        SplitSpec spec = cfg_.split;
        spec.kind = kind;
        const SplitResult s = split_samples(samples, spec);
        json doc = {
            {"kind", split_kind_name(kind)},
            {"window", cfg_.window},
            {"train", sample_keys(samples, s.train)},
            {"test", sample_keys(samples, s.test)},
        };
        if (s.report.cutoff) doc["cutoff"] = format_day(*s.report.cutoff);
        outputs.push_back(split_file(kind));
        write(outputs.back(), doc.dump() + "\n");
    }
    const std::vector<fs::path> inputs = {dir_ / "features.csv", dir_ / "labels.csv"};
    record("split", outputs, inputs);
}

SplitResult Workspace::load_split(SplitKind kind, std::span<const WindowSample> samples) const {
    const fs::path path = dir_ / split_file(kind);
    const std::string text = require(path, "split");
    std::map<std::pair<std::string, Day>, std::size_t> index;
    for (std::size_t i = 0; i < samples.size(); ++i) index.emplace(std::pair{samples[i].well_id, samples[i].target_date}, i);
    SplitResult out;
    try {
        const json doc = json::parse(text);
        auto read = [&](const json& keys, std::vector<std::size_t>& dst) {
            for (const auto& k : keys) {
                const auto it = index.find({k.at(0).get<std::string>(), require_day(k.at(1).get<std::string>())});
                if (it == index.end()) {
                    throw DataError(path.string() + " does not match the windowed samples; rerun `flowguard split`");
                }
                dst.push_back(it->second);
            }
        };
        read(doc.at("train"), out.train);
        read(doc.at("test"), out.test);
    } catch (const json::exception& e) {
        throw DataError("corrupt split file '" + path.string() + "': " + e.what());
    }
    if (out.train.size() + out.test.size() != samples.size()) {
        throw DataError(path.string() + " does not cover every sample; rerun `flowguard split`");
    }
    out.report = make_shift_report(samples, out.train, out.test);
    if (kind == SplitKind::time && !out.test.empty()) {
        Day first = samples[out.test.front()].target_date;
        for (const std::size_t i : out.test) first = std::min(first, samples[i].target_date);
        out.report.cutoff = first;
    }
    return out;
}

Experiment Workspace::load_experiment(SplitKind kind) const {
    const Topology topology = load_topology();
    const auto features = load_features();
    const auto labels = load_labels();
    const auto raw = raw_windows(features, labels, cfg_.window);
    const SplitResult fixed = load_split(kind, raw);
    return build_experiment(topology, features, labels, cfg_, kind, &fixed);
}

void Workspace::train(Variant v, SplitKind kind) {
    const Experiment exp = load_experiment(kind);
    const TrainResult result = train_variant(exp, v, cfg_);
    const std::vector<std::string> outputs = {model_file(v, kind), "history_" + run_suffix(v, kind) + ".csv"};
    write(outputs[0], save_checkpoint(result.model, exp.registry, fingerprint_));
    write(outputs[1], format_history(result.history));
    const std::vector<fs::path> inputs = {topology_path(), dir_ / "features.csv", dir_ / "labels.csv",
                                          dir_ / split_file(kind)};
    record("train", outputs, inputs);
}

EvalReport Workspace::evaluate(Variant v, SplitKind kind) {
    const fs::path model_path = dir_ / model_file(v, kind);
    const std::string text = require(model_path, "train");
    const Experiment exp = load_experiment(kind);
    const Checkpoint ckpt = load_checkpoint(text, &exp.registry, fingerprint_);
    EvalReport report = evaluate_variant(exp, v, ckpt.model, cfg_);
    const std::string suffix = run_suffix(v, kind);
    const std::vector<std::string> outputs = {metrics_file(v, kind), "roc_" + suffix + ".csv", "pr_" + suffix + ".csv"};
    write(outputs[0], report.to_json());
    write(outputs[1], format_roc_table(report.roc_curve));
    write(outputs[2], format_pr_table(report.pr_curve));
    const std::vector<fs::path> inputs = {model_path, dir_ / "features.csv", dir_ / "labels.csv",
                                          dir_ / split_file(kind)};
    record("evaluate", outputs, inputs);
    return report;
}

std::vector<EvalReport> Workspace::ablate() {
    if (cfg_.paths.data.empty() && !fs::exists(production_path())) synth();
    ingest();
    featurize();
    label();
    split();

    std::vector<EvalReport> reports;
    for (const SplitKind kind : kAllSplits) {
        const Experiment exp = load_experiment(kind);
        std::vector<std::optional<VariantRun>> runs(kAllVariants.size());
        parallel_for(runs.size(), cfg_.jobs, [&](std::size_t i) { runs[i] = run_variant(exp, kAllVariants[i], cfg_); });
        const std::vector<fs::path> inputs = {topology_path(), dir_ / "features.csv", dir_ / "labels.csv",
                                              dir_ / split_file(kind)};
        for (std::size_t i = 0; i < runs.size(); ++i) {
            const Variant v = kAllVariants[i];
            const VariantRun& run = *runs[i];
            const std::string suffix = run_suffix(v, kind);
            const std::vector<std::string> trained = {model_file(v, kind), "history_" + suffix + ".csv"};
            write(trained[0], save_checkpoint(run.trained.model, exp.registry, fingerprint_));
            write(trained[1], format_history(run.trained.history));
            record("train", trained, inputs);
            const std::vector<std::string> evaluated = {metrics_file(v, kind), "roc_" + suffix + ".csv",
                                                        "pr_" + suffix + ".csv"};
            write(evaluated[0], run.report.to_json());
            write(evaluated[1], format_roc_table(run.report.roc_curve));
            write(evaluated[2], format_pr_table(run.report.pr_curve));
            std::vector<fs::path> eval_inputs = inputs;
            eval_inputs.push_back(dir_ / trained[0]);
            record("evaluate", evaluated, eval_inputs);
            reports.push_back(run.report);
        }
    }
    check_comparable(reports);
    const std::vector<std::string> outputs = {"comparison.json", "comparison.txt"};
    write(outputs[0], comparison_json(reports));
    write(outputs[1], comparison_table(reports));
    std::vector<fs::path> inputs;
    for (const SplitKind kind : kAllSplits) {
        for (const Variant v : kAllVariants) inputs.push_back(dir_ / metrics_file(v, kind));
    }
    record("ablate", outputs, inputs);
    return reports;
}

std::string Workspace::report() {
    std::vector<EvalReport> reports;
    for (const SplitKind kind : kAllSplits) {
        for (const Variant v : kAllVariants) {
            const fs::path p = dir_ / metrics_file(v, kind);
            if (fs::exists(p)) reports.push_back(EvalReport::from_json(read_text_file(p)));
        }
    }
    if (reports.empty()) {
        throw MissingArtifactError("no metrics artifacts in '" + dir_.string() +
                                   "'; run `flowguard evaluate` or `flowguard ablate` first");
    }
    check_comparable(reports);
    return comparison_table(reports);
}

}  // namespace flowguard
