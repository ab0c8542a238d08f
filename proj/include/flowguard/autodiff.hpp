#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "flowguard/tensor.hpp"

namespace flowguard::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape
/// is cleared.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) noexcept : tape_(tape), id_(id) {}

    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] Tensor::Shape shape() const { return value().shape(); }
    [[nodiscard]] Tape& tape() const noexcept { return *tape_; }
    [[nodiscard]] std::size_t id() const noexcept { return id_; }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Dynamic reverse-mode tape. Values are appended in evaluation order, which
/// is a topological order, so backward is a single reverse sweep that visits
/// each node once. One tape per training worker; a tape is not thread-safe.
class Tape {
public:
    /// Backward rule: reads the node's output gradient and accumulates into
    /// parent gradients through the tape accessors.
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// A value that receives no gradient.
    Var constant(Tensor value);
    /// A leaf that receives a gradient. Parameters are numbered in creation order.
    Var parameter(Tensor value);

    /// Records an op result. `name` is used in numeric error messages.
    Var record(const char* name, Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

    /// Gradients of the scalar `loss` with respect to every parameter, in
    /// parameter creation order (zeros for parameters the loss does not use).
    /// Clears the tape. Throws ShapeError if `loss` is not 1 x 1.
    std::vector<Tensor> backward(Var loss);

    void clear() noexcept;
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] std::size_t parameter_count() const noexcept { return parameters_.size(); }

    // Accessors for backward rules.
    [[nodiscard]] const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    [[nodiscard]] const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
    [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    [[nodiscard]] const std::vector<std::size_t>& parents(std::size_t id) const { return nodes_[id].parents; }
    /// Gradient slot of `id`, zero-initialized on first access.
    Tensor& grad_slot(std::size_t id);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::vector<std::size_t> parameters_;
};

enum class Axis { rows, cols, all };

// Primitives. Every op checks shapes (ShapeError naming both shapes) and
// rejects non-finite results (NumericError).

[[nodiscard]] Var matmul(Var a, Var b);
/// Elementwise with `b` broadcast along any dimension where it has extent 1.
[[nodiscard]] Var add(Var a, Var b);
[[nodiscard]] Var sub(Var a, Var b);
[[nodiscard]] Var mul(Var a, Var b);
[[nodiscard]] Var scale(Var a, double factor);
[[nodiscard]] Var add_scalar(Var a, double offset);
[[nodiscard]] Var concat(std::span<const Var> parts, std::size_t axis);
[[nodiscard]] Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
/// Axis::rows reduces over rows (result 1 x cols), Axis::cols over columns
/// (rows x 1), Axis::all to 1 x 1.
[[nodiscard]] Var sum(Var a, Axis axis = Axis::all);
[[nodiscard]] Var mean(Var a, Axis axis = Axis::all);
[[nodiscard]] Var sigmoid(Var a);
[[nodiscard]] Var tanh(Var a);
[[nodiscard]] Var leaky_relu(Var a, double slope);
[[nodiscard]] Var elu(Var a, double alpha = 1.0);
[[nodiscard]] Var exp(Var a);
[[nodiscard]] Var log(Var a);
/// Clamps into [lo, hi]; the gradient is zero where clamping was active.
[[nodiscard]] Var clamp(Var a, double lo, double hi);

/// Rows of `a` selected by `index` (result index.size() x a.cols).
[[nodiscard]] Var gather_rows(Var a, std::span<const std::size_t> index);
/// Sums row i of `a` into output row index[i] (result segments x a.cols).
[[nodiscard]] Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t segments);
/// Softmax of the E x 1 `scores` within groups sharing a segment id, computed
/// with per-segment max subtraction. Segments without entries produce nothing.
[[nodiscard]] Var segment_softmax(Var scores, std::span<const std::size_t> segment, std::size_t segments);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Scalar-valued function of a parameter list, evaluated on the given tape.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares backward() against central differences (f(p+h) - f(p-h)) / 2h
/// coordinate by coordinate and returns the maximum of
/// |analytic - numeric| / max(1, |numeric|).
[[nodiscard]] double grad_check(const ScalarFn& f, std::span<const Tensor> params, double h = 1e-5);

}  // namespace flowguard::ad
