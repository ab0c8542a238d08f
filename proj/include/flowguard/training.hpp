#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowguard/autodiff.hpp"
#include "flowguard/error.hpp"
#include "flowguard/features.hpp"
#include "flowguard/models.hpp"
#include "flowguard/windowing.hpp"

namespace flowguard {

struct TrainConfig {
    double lr = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    /// Positive-class weight; unset means N_neg / N_pos on the fit subset.
    std::optional<double> beta;
    /// 0 disables early stopping.
    std::size_t early_stop_patience = 10;
    std::uint64_t seed = 0;
    double clamp_eps = 1e-7;
    /// Tail fraction of the training samples held out for early stopping.
    double validation_fraction = 0.15;
    double threshold = 0.5;

    void validate() const;
};

/// L = -[beta y log(p) + (1 - y) log(1 - p)] with p clamped to [eps, 1 - eps].
/// Throws ConfigError for beta <= 0.
[[nodiscard]] double weighted_bce(double y_hat, std::uint8_t y, double beta, double clamp_eps = 1e-7);

/// Mean weighted BCE of a B x 1 probability column against labels, on the tape.
[[nodiscard]] ad::Var weighted_bce(ad::Var y_hat, std::span<const std::uint8_t> labels, double beta,
                                   double clamp_eps = 1e-7);

/// N_neg / N_pos. Throws ConfigError when either class is absent, asking for a fixed beta.
[[nodiscard]] double compute_beta(std::span<const std::uint8_t> labels);

/// Splits training sample indices into (fit, validation). For time splits the
/// validation part is the latest `fraction` of samples by target date; for
/// random splits it is the tail of the given (shuffled) order.
struct ValidationSplit {
    std::vector<std::size_t> fit;
    std::vector<std::size_t> validation;
};
[[nodiscard]] ValidationSplit split_validation(std::span<const WindowSample> samples,
                                               std::span<const std::size_t> train, SplitKind kind, double fraction);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double val_auc = std::numeric_limits<double>::quiet_NaN();
    double val_precision = std::numeric_limits<double>::quiet_NaN();
    double val_recall = std::numeric_limits<double>::quiet_NaN();
    double val_f1 = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    Model model;
    std::vector<EpochRecord> history;
    double beta = 1.0;
    /// Epoch (1-based) whose parameters were kept.
    std::size_t best_epoch = 0;
    bool early_stopped = false;
};

/// A non-finite loss or parameter aborted training. Carries the last finite
/// parameters.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& message, Model last_finite)
        : NumericError(message), model_(std::make_shared<Model>(std::move(last_finite))) {}

    [[nodiscard]] const Model& last_finite() const noexcept { return *model_; }

private:
    std::shared_ptr<const Model> model_;
};

/// Adam (0.9, 0.999, 1e-8) on the mean weighted BCE over seeded shuffled
/// mini-batches. With a non-empty validation set the parameters with the best
/// validation F1 (ties: lower validation loss) are kept and training stops
/// after `early_stop_patience` epochs without improvement; otherwise the final
/// parameters are kept.
[[nodiscard]] TrainResult train(Model initial, std::span<const WindowSample> samples,
                                std::span<const std::size_t> fit, std::span<const std::size_t> validation,
                                const GraphContext* context, const TrainConfig& cfg);

[[nodiscard]] std::string format_history(std::span<const EpochRecord> history);

// ---- checkpoints --------------------------------------------------------------

struct Checkpoint {
    Model model;
    FeatureRegistry registry;
    std::string fingerprint;
};

/// Versioned JSON document with model config, registry, fingerprint and every
/// named parameter (shape plus row-major data). Doubles round-trip exactly.
[[nodiscard]] std::string save_checkpoint(const Model& model, const FeatureRegistry& registry,
                                          std::string_view fingerprint);

/// Throws CheckpointError for corrupt or truncated documents, shape mismatches,
/// or (when given) a registry or fingerprint that differs from the expected one.
[[nodiscard]] Checkpoint load_checkpoint(std::string_view text, const FeatureRegistry* expected_registry = nullptr,
                                         std::optional<std::string_view> expected_fingerprint = std::nullopt);

}  // namespace flowguard
