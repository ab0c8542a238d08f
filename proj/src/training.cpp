#include "flowguard/training.hpp"

#include <algorithm>
#include <cmath>

#include "flowguard/csv.hpp"
#include "flowguard/evaluation.hpp"
#include "flowguard/rng.hpp"

namespace flowguard {

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw ConfigError("training.lr must be a finite number >= 0");
    }
    if (epochs == 0) {
        throw ConfigError("training.epochs must be >= 1");
    }
    if (batch_size == 0) {
        throw ConfigError("training.batch_size must be >= 1");
    }
    if (beta && !(*beta > 0.0 && std::isfinite(*beta))) {
        throw ConfigError("training.beta must be > 0");
    }
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
        throw ConfigError("training.clamp_eps must lie in (0, 0.5)");
    }
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("training.validation_fraction must lie in [0, 1)");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("training.threshold must lie in [0, 1]");
    }
}

double weighted_bce(double y_hat, std::uint8_t y, double beta, double clamp_eps) {
    if (!(beta > 0.0)) {
        throw ConfigError("weighted BCE needs beta > 0");
    }
    const double p = std::clamp(y_hat, clamp_eps, 1.0 - clamp_eps);
    return y != 0 ? -beta * std::log(p) : -std::log(1.0 - p);
}

ad::Var weighted_bce(ad::Var y_hat, std::span<const std::uint8_t> labels, double beta, double clamp_eps) {
    if (!(beta > 0.0)) {
        throw ConfigError("weighted BCE needs beta > 0");
    }
    const auto [rows, cols] = y_hat.shape();
    if (cols != 1 || rows != labels.size()) {
        throw ShapeError("weighted BCE: predictions " + y_hat.value().shape_string() + " for " +
                         std::to_string(labels.size()) + " labels");
    }
    ad::Tape& tape = y_hat.tape();
    Tensor pos(rows, 1), neg(rows, 1);
    for (std::size_t i = 0; i < rows; ++i) {
        pos[i] = labels[i] != 0 ? beta : 0.0;
        neg[i] = labels[i] != 0 ? 0.0 : 1.0;
    }
    const ad::Var p = ad::clamp(y_hat, clamp_eps, 1.0 - clamp_eps);
    const ad::Var log_p = ad::log(p);
    const ad::Var log_q = ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0));
    const ad::Var ll = tape.constant(std::move(pos)) * log_p + tape.constant(std::move(neg)) * log_q;
    return ad::scale(ad::mean(ll), -1.0);
}

double compute_beta(std::span<const std::uint8_t> labels) {
    std::size_t pos = 0;
    for (const auto y : labels) {
        pos += y != 0 ? 1 : 0;
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) {
        throw ConfigError("cannot derive beta from " + std::to_string(pos) + " positive and " + std::to_string(neg) +
                          " negative training labels; set training.beta to a fixed value");
    }
    return static_cast<double>(neg) / static_cast<double>(pos);
}

ValidationSplit split_validation(std::span<const WindowSample> samples, std::span<const std::size_t> train,
                                 SplitKind kind, double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in [0, 1)");
    }
    std::vector<std::size_t> order(train.begin(), train.end());
    if (kind == SplitKind::time) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return samples[a].target_date < samples[b].target_date;
        });
    }
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
    ValidationSplit out;
    const auto cut = static_cast<std::ptrdiff_t>(order.size() - std::min(n_val, order.size()));
    out.fit.assign(order.begin(), order.begin() + cut);
    out.validation.assign(order.begin() + cut, order.end());
    return out;
}

namespace {

struct Adam {
    static constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    std::vector<Tensor> m, v;
    std::size_t t = 0;

    explicit Adam(const Model& model) {
        for (const auto& p : model.named_parameters()) {
            m.emplace_back(p.tensor->rows(), p.tensor->cols());
            v.emplace_back(p.tensor->rows(), p.tensor->cols());
        }
    }

    /// Returns false (leaving the model untouched) if the step would produce a
    /// non-finite parameter.
    bool step(Model& model, const std::vector<Tensor>& grads, double lr) {
        ++t;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        auto params = model.named_parameters();
        std::vector<Tensor> next;
        next.reserve(params.size());
        for (std::size_t k = 0; k < params.size(); ++k) {
            Tensor updated = *params[k].tensor;
            for (std::size_t i = 0; i < updated.size(); ++i) {
                const double g = grads[k][i];
                m[k][i] = b1 * m[k][i] + (1.0 - b1) * g;
                v[k][i] = b2 * v[k][i] + (1.0 - b2) * g * g;
                updated[i] -= lr * (m[k][i] / c1) / (std::sqrt(v[k][i] / c2) + eps);
            }
            if (!updated.all_finite()) {
                return false;
            }
            next.push_back(std::move(updated));
        }
        for (std::size_t k = 0; k < params.size(); ++k) {
            *params[k].tensor = std::move(next[k]);
        }
        return true;
    }
};

std::vector<const WindowSample*> pointers(std::span<const WindowSample> samples, std::span<const std::size_t> idx) {
    std::vector<const WindowSample*> out;
    out.reserve(idx.size());
    for (const std::size_t i : idx) {
        out.push_back(&samples[i]);
    }
    return out;
}

std::vector<std::uint8_t> labels_of(std::span<const WindowSample* const> ptrs) {
    std::vector<std::uint8_t> out;
    out.reserve(ptrs.size());
    for (const auto* s : ptrs) {
        out.push_back(s->y);
    }
    return out;
}

}  // namespace

TrainResult train(Model initial, std::span<const WindowSample> samples, std::span<const std::size_t> fit,
                  std::span<const std::size_t> validation, const GraphContext* context, const TrainConfig& cfg) {
    cfg.validate();
    if (fit.empty()) {
        throw DataError("training set is empty");
    }
    for (const std::size_t i : fit) {
        if (i >= samples.size()) {
            throw DataError("training index out of range");
        }
    }
    const auto fit_ptrs = pointers(samples, fit);
    const auto val_ptrs = pointers(samples, validation);
    const auto fit_labels = labels_of(fit_ptrs);
    const auto val_labels = labels_of(val_ptrs);

    TrainResult result;
    result.beta = cfg.beta ? *cfg.beta : compute_beta(fit_labels);
    Model model = std::move(initial);
    Adam adam(model);
    std::vector<std::size_t> order(fit_ptrs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::vector<const WindowSample*> batch;
    std::vector<std::uint8_t> batch_labels;
    ad::Tape tape;
    double best_f1 = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    result.model = model;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        SplitMix64 rng(SplitMix64::derive(cfg.seed, epoch));
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            batch_labels.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(fit_ptrs[order[i]]);
                batch_labels.push_back(fit_labels[order[i]]);
            }
            std::vector<Tensor> grads;
            double loss_value = 0.0;
            try {
                const auto params = bind_parameters(tape, model, true);
                const ad::Var p = forward_batch(tape, model, params, batch, context);
                const ad::Var loss = weighted_bce(p, batch_labels, result.beta, cfg.clamp_eps);
                loss_value = loss.value().item();
                grads = tape.backward(loss);
            } catch (const NumericError& e) {
                tape.clear();
                throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": " + e.what(), model);
            }
            if (!adam.step(model, grads, cfg.lr)) {
                throw DivergenceError(
                    "training diverged in epoch " + std::to_string(epoch) + ": parameter update is not finite",
                    model);
            }
            loss_sum += loss_value * static_cast<double>(end - start);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        if (!val_ptrs.empty()) {
            const auto scores = predict(model, val_ptrs, context);
            double vl = 0.0;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                vl += weighted_bce(scores[i], val_labels[i], result.beta, cfg.clamp_eps);
            }
            rec.val_loss = vl / static_cast<double>(scores.size());
            const auto c = confusion_at_threshold(scores, val_labels, cfg.threshold);
            rec.val_precision = c.precision;
            rec.val_recall = c.recall;
            rec.val_f1 = c.f1;
            try {
                rec.val_auc = roc_auc(scores, val_labels);
            } catch (const UndefinedMetricError&) {
                rec.val_auc = std::numeric_limits<double>::quiet_NaN();
            }
            if (rec.val_f1 > best_f1 || (rec.val_f1 == best_f1 && rec.val_loss < best_loss)) {
                best_f1 = rec.val_f1;
                best_loss = rec.val_loss;
                result.model = model;
                result.best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        } else {
            result.model = model;
            result.best_epoch = epoch;
        }
        result.history.push_back(rec);
        if (!val_ptrs.empty() && cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience) {
            result.early_stopped = epoch < cfg.epochs;
            break;
        }
    }
    return result;
}

std::string format_history(std::span<const EpochRecord> history) {
    std::string out = "epoch,train_loss,val_loss,val_auc,val_precision,val_recall,val_f1\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + ',' + format_number(r.train_loss) + ',' + format_number(r.val_loss) + ',' +
               format_number(r.val_auc) + ',' + format_number(r.val_precision) + ',' + format_number(r.val_recall) +
               ',' + format_number(r.val_f1) + '\n';
    }
    return out;
}

}  // namespace flowguard
