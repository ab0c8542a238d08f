#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/config.hpp"
#include "flowguard/evaluation.hpp"
#include "flowguard/features.hpp"
#include "flowguard/graph.hpp"
#include "flowguard/labels.hpp"
#include "flowguard/models.hpp"
#include "flowguard/training.hpp"
#include "flowguard/windowing.hpp"

namespace flowguard {

/// The four compared model variants.
enum class Variant : std::uint8_t { logistic, lstm, gat_hierarchy, gat_peer };

inline constexpr std::array<Variant, 4> kAllVariants = {Variant::logistic, Variant::lstm, Variant::gat_hierarchy,
                                                        Variant::gat_peer};
inline constexpr std::array<SplitKind, 2> kAllSplits = {SplitKind::random, SplitKind::time};

/// File-name slug: logistic, lstm, gat_hier, gat_peer.
[[nodiscard]] std::string_view variant_slug(Variant v) noexcept;
/// Table label, e.g. "Temporal GAT (hierarchy only)".
[[nodiscard]] std::string_view variant_display_name(Variant v) noexcept;
[[nodiscard]] Variant parse_variant(std::string_view slug);
[[nodiscard]] SplitKind parse_split_kind(std::string_view name);
/// The variant the configured model block describes.
[[nodiscard]] Variant configured_variant(const ModelConfig& model);
/// `base` with kind and peer-edge flag set for `v`; dimensions are kept.
[[nodiscard]] ModelConfig variant_model(const ModelConfig& base, Variant v);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Callers write results
/// into pre-sized slots, so output order never depends on scheduling.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

// ---- in-memory stages ----------------------------------------------------------

[[nodiscard]] std::map<std::string, WellSeries> ingest(std::string_view production_table, const Topology& topology,
                                                       const RunConfig& cfg);
/// Unstandardized feature matrices, one per well in id order, sharing one registry.
[[nodiscard]] std::vector<FeatureMatrix> featurize(const std::map<std::string, WellSeries>& clean,
                                                   const RunConfig& cfg);
[[nodiscard]] std::vector<LabelFrame> label(std::span<const FeatureMatrix> features, const RunConfig& cfg);

/// Windows of every well (wells in id order, then by t) on unstandardized features.
[[nodiscard]] std::vector<WindowSample> raw_windows(std::span<const FeatureMatrix> features,
                                                    std::span<const LabelFrame> labels, int r);

/// Per well, rows that appear in at least one training window.
[[nodiscard]] std::map<std::string, std::vector<std::uint8_t>> train_row_masks(
    std::span<const FeatureMatrix> features, std::span<const WindowSample> samples,
    std::span<const std::size_t> train);

/// Standardized windows, a split and per-date graph node features, ready for
/// any variant.
struct Experiment {
    SplitKind kind = SplitKind::time;
    Topology topology;
    FeatureRegistry registry;
    std::vector<FeatureStats> stats;  // per well, id order
    std::vector<WindowSample> samples;
    SplitResult split;
    ValidationSplit fit;
    ProductionGraph node_order;  // graph whose node order the tables use
    NodeFeatureTable window_features;
    NodeFeatureTable static_features;

    [[nodiscard]] const NodeFeatureTable& node_features(NodeFeatureMode mode) const {
        return mode == NodeFeatureMode::window ? window_features : static_features;
    }
    [[nodiscard]] std::vector<const WindowSample*> test_samples() const;
    [[nodiscard]] std::vector<std::uint8_t> test_labels() const;
};

/// Builds windows on raw features, splits them (or reuses `fixed`), fits
/// per-well standardization on training rows and rebuilds the windows.
[[nodiscard]] Experiment build_experiment(const Topology& topology, std::span<const FeatureMatrix> features,
                                          std::span<const LabelFrame> labels, const RunConfig& cfg, SplitKind kind,
                                          const SplitResult* fixed = nullptr);

/// Per-date node features for arbitrary standardized samples.
[[nodiscard]] NodeFeatureTable window_node_features(const ProductionGraph& graph,
                                                    std::span<const WindowSample> samples);

/// Seed of the (variant, split) run derived from the global seed.
[[nodiscard]] std::uint64_t run_seed(std::uint64_t seed, Variant v, SplitKind kind) noexcept;

struct VariantRun {
    TrainResult trained;
    std::vector<double> test_scores;
    EvalReport report;
};

/// Trains one variant on the experiment's fit/validation samples.
[[nodiscard]] TrainResult train_variant(const Experiment& exp, Variant v, const RunConfig& cfg);
/// Scores the experiment's test samples and builds the report.
[[nodiscard]] EvalReport evaluate_variant(const Experiment& exp, Variant v, const Model& model, const RunConfig& cfg,
                                          std::vector<double>* scores = nullptr);
[[nodiscard]] VariantRun run_variant(const Experiment& exp, Variant v, const RunConfig& cfg);

// ---- artifact stages ---------------------------------------------------------------

/// Artifact-writing stages rooted at cfg.paths.output_dir. Every stage
/// records its outputs in manifest.json together with the content hashes of
/// its inputs, the config fingerprint and the seed.
class Workspace {
public:
    explicit Workspace(RunConfig cfg);

    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }
    [[nodiscard]] const RunConfig& config() const noexcept { return cfg_; }

    void synth();
    void ingest();
    void featurize();
    void label();
    void split();
    void train(Variant v, SplitKind kind);
    EvalReport evaluate(Variant v, SplitKind kind);
    /// Runs ingest through split, then trains and evaluates every variant on
    /// both split kinds and writes comparison.json / comparison.txt.
    std::vector<EvalReport> ablate();
    /// Comparison table built from existing metrics artifacts.
    std::string report();

    [[nodiscard]] static std::string model_file(Variant v, SplitKind kind);
    [[nodiscard]] static std::string metrics_file(Variant v, SplitKind kind);

private:
    std::filesystem::path production_path() const;
    std::filesystem::path topology_path() const;
    std::string require(const std::filesystem::path& path, std::string_view stage) const;
    void write(const std::string& name, std::string_view content);
    void record(std::string_view stage, std::span<const std::string> outputs,
                std::span<const std::filesystem::path> inputs);

    Topology load_topology() const;
    std::vector<FeatureMatrix> load_features() const;
    std::vector<LabelFrame> load_labels() const;
    SplitResult load_split(SplitKind kind, std::span<const WindowSample> samples) const;
    Experiment load_experiment(SplitKind kind) const;

    RunConfig cfg_;
    std::filesystem::path dir_;
    std::string fingerprint_;
};

}  // namespace flowguard
