#include "flowguard/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowguard/error.hpp"

namespace flowguard::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
    if (!value.all_finite()) {
        throw NumericError("non-finite value in constant " + value.shape_string());
    }
    nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor value) {
    if (!value.all_finite()) {
        throw NumericError("non-finite value in parameter " + value.shape_string());
    }
    nodes_.push_back(Node{std::move(value), {}, {}, {}, true});
    parameters_.push_back(nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* name, Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
    if (!value.all_finite()) {
        throw NumericError(std::string("non-finite result in ") + name + " " + value.shape_string());
    }
    const bool needs = std::any_of(parents.begin(), parents.end(),
                                   [this](std::size_t p) { return nodes_[p].requires_grad; });
    Node node{std::move(value), {}, std::move(parents), {}, needs};
    if (needs) {
        node.backward = std::move(backward);
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.shape() != n.value.shape() || n.grad.size() != n.value.size()) {
        n.grad = Tensor(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

std::vector<Tensor> Tape::backward(Var loss) {
    if (&loss.tape() != this) {
        throw Error("backward: loss belongs to a different tape");
    }
    const std::size_t root = loss.id();
    if (nodes_[root].value.rows() != 1 || nodes_[root].value.cols() != 1) {
        throw ShapeError("backward on non-scalar loss of shape " + nodes_[root].value.shape_string());
    }
    if (nodes_[root].requires_grad) {
        grad_slot(root)[0] = 1.0;
        for (std::size_t i = root + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.requires_grad || !n.backward || n.grad.empty()) {
                continue;
            }
            n.backward(*this, i);
        }
    }
    std::vector<Tensor> grads;
    grads.reserve(parameters_.size());
    for (const std::size_t p : parameters_) {
        Node& n = nodes_[p];
        if (n.grad.size() == n.value.size() && n.grad.shape() == n.value.shape()) {
            grads.push_back(std::move(n.grad));
        } else {
            grads.emplace_back(n.value.rows(), n.value.cols());
        }
    }
    clear();
    return grads;
}

void Tape::clear() noexcept {
    nodes_.clear();
    parameters_.clear();
}

namespace {

void require_same_tape(Var a, Var b, const char* op) {
    if (&a.tape() != &b.tape()) {
        throw Error(std::string(op) + ": operands recorded on different tapes");
    }
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                     b.shape_string());
}

// C += A * B
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    const std::size_t n = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = pc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aik = pa[i * k + p];
            if (aik == 0.0) {
                continue;
            }
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
}

// C += A * B^T   (A: m x n, B: k x n, C: m x k)
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const std::size_t k = b.rows();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = pb + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += arow[j] * brow[j];
            }
            pc[i * k + p] += acc;
        }
    }
}

// C += A^T * B   (A: m x k, B: m x n, C: k x n)
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    const std::size_t n = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* brow = pb + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = pa[i * k + p];
            if (aip == 0.0) {
                continue;
            }
            double* crow = pc + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                crow[j] += aip * brow[j];
            }
        }
    }
}

bool broadcastable(const Tensor& a, const Tensor& b) {
    return (b.rows() == a.rows() || b.rows() == 1) && (b.cols() == a.cols() || b.cols() == 1);
}

// Sums `g` (shape of a) down to the shape of b along broadcast dimensions.
void accumulate_reduced(const Tensor& g, Tensor& target) {
    const std::size_t rows = g.rows();
    const std::size_t cols = g.cols();
    const bool rr = target.rows() == 1 && rows != 1;
    const bool rc = target.cols() == 1 && cols != 1;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            target(rr ? 0 : i, rc ? 0 : j) += g(i, j);
        }
    }
}

template <typename Fn>
Tensor map_values(const Tensor& a, Fn fn) {
    Tensor out(a.rows(), a.cols());
    auto src = a.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = fn(src[i]);
    }
    return out;
}

// Unary op whose derivative is expressed through input x and output y.
template <typename Forward, typename Derivative>
Var unary(const char* name, Var a, Forward forward, Derivative derivative) {
    Tape& tape = a.tape();
    const std::size_t ia = a.id();
    return tape.record(name, map_values(a.value(), forward), {ia},
                       [ia, derivative](Tape& t, std::size_t self) {
                           const auto& x = t.value(ia).data();
                           const auto& y = t.value(self).data();
                           const auto& g = t.grad(self).data();
                           auto ga = t.grad_slot(ia).data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               ga[i] += g[i] * derivative(x[i], y[i]);
                           }
                       });
}

}  // namespace

Var matmul(Var a, Var b) {
    require_same_tape(a, b, "matmul");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    if (va.cols() != vb.rows()) {
        shape_mismatch("matmul", va, vb);
    }
    Tensor out(va.rows(), vb.cols());
    gemm_nn(va, vb, out);
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record("matmul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) {
            gemm_nt(g, t.value(ib), t.grad_slot(ia));
        }
        if (t.requires_grad(ib)) {
            gemm_tn(t.value(ia), g, t.grad_slot(ib));
        }
    });
}

Var add(Var a, Var b) {
    require_same_tape(a, b, "add");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    if (!broadcastable(va, vb)) {
        shape_mismatch("add", va, vb);
    }
    Tensor out = va;
    const bool br = vb.rows() == 1;
    const bool bc = vb.cols() == 1;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) += vb(br ? 0 : i, bc ? 0 : j);
        }
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record("add", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) {
            auto ga = t.grad_slot(ia).data();
            for (std::size_t i = 0; i < ga.size(); ++i) {
                ga[i] += g[i];
            }
        }
        if (t.requires_grad(ib)) {
            accumulate_reduced(g, t.grad_slot(ib));
        }
    });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
    require_same_tape(a, b, "mul");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    if (!broadcastable(va, vb)) {
        shape_mismatch("mul", va, vb);
    }
    Tensor out = va;
    const bool br = vb.rows() == 1;
    const bool bc = vb.cols() == 1;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) *= vb(br ? 0 : i, bc ? 0 : j);
        }
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record("mul", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& va = t.value(ia);
        const Tensor& vb = t.value(ib);
        const bool br = vb.rows() == 1;
        const bool bc = vb.cols() == 1;
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad_slot(ia);
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    ga(i, j) += g(i, j) * vb(br ? 0 : i, bc ? 0 : j);
                }
            }
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad_slot(ib);
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t j = 0; j < g.cols(); ++j) {
                    gb(br ? 0 : i, bc ? 0 : j) += g(i, j) * va(i, j);
                }
            }
        }
    });
}

Var scale(Var a, double factor) {
    Tape& tape = a.tape();
    const std::size_t ia = a.id();
    return tape.record("scale", map_values(a.value(), [factor](double x) { return x * factor; }), {ia},
                       [ia, factor](Tape& t, std::size_t self) {
                           const auto g = t.grad(self).data();
                           auto ga = t.grad_slot(ia).data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               ga[i] += g[i] * factor;
                           }
                       });
}

Var add_scalar(Var a, double offset) {
    Tape& tape = a.tape();
    const std::size_t ia = a.id();
    return tape.record("add_scalar", map_values(a.value(), [offset](double x) { return x + offset; }),
                       {ia}, [ia](Tape& t, std::size_t self) {
                           const auto g = t.grad(self).data();
                           auto ga = t.grad_slot(ia).data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               ga[i] += g[i];
                           }
                       });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
    if (parts.empty()) {
        throw ShapeError("concat: no inputs");
    }
    if (axis > 1) {
        throw ShapeError("concat: axis must be 0 or 1");
    }
    Tape& tape = parts.front().tape();
    const Tensor& first = parts.front().value();
    std::size_t rows = 0;
    std::size_t cols = 0;
    for (const Var& p : parts) {
        if (&p.tape() != &tape) {
            throw Error("concat: operands recorded on different tapes");
        }
        const Tensor& v = p.value();
        if (axis == 0) {
            if (v.cols() != first.cols()) {
                shape_mismatch("concat", first, v);
            }
            rows += v.rows();
            cols = v.cols();
        } else {
            if (v.rows() != first.rows()) {
                shape_mismatch("concat", first, v);
            }
            cols += v.cols();
            rows = v.rows();
        }
    }
    Tensor out(rows, cols);
    std::vector<std::size_t> ids;
    ids.reserve(parts.size());
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < v.rows(); ++i) {
            for (std::size_t j = 0; j < v.cols(); ++j) {
                if (axis == 0) {
                    out(offset + i, j) = v(i, j);
                } else {
                    out(i, offset + j) = v(i, j);
                }
            }
        }
        offset += axis == 0 ? v.rows() : v.cols();
        ids.push_back(p.id());
    }
    return tape.record("concat", std::move(out), ids, [axis](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (const std::size_t p : t.parents(self)) {
            const Tensor& v = t.value(p);
            if (t.requires_grad(p)) {
                Tensor& gp = t.grad_slot(p);
                for (std::size_t i = 0; i < v.rows(); ++i) {
                    for (std::size_t j = 0; j < v.cols(); ++j) {
                        gp(i, j) += axis == 0 ? g(offset + i, j) : g(i, offset + j);
                    }
                }
            }
            offset += axis == 0 ? v.rows() : v.cols();
        }
    });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
    const Tensor& v = a.value();
    const std::size_t extent = axis == 0 ? v.rows() : v.cols();
    if (axis > 1 || begin > end || end > extent) {
        throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " invalid for shape " + v.shape_string());
    }
    const std::size_t rows = axis == 0 ? end - begin : v.rows();
    const std::size_t cols = axis == 1 ? end - begin : v.cols();
    Tensor out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out(i, j) = axis == 0 ? v(begin + i, j) : v(i, begin + j);
        }
    }
    const std::size_t ia = a.id();
    return a.tape().record("slice", std::move(out), {ia}, [ia, axis, begin](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_slot(ia);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) {
                if (axis == 0) {
                    ga(begin + i, j) += g(i, j);
                } else {
                    ga(i, begin + j) += g(i, j);
                }
            }
        }
    });
}

Var sum(Var a, Axis axis) {
    const Tensor& v = a.value();
    Tensor out = axis == Axis::rows ? Tensor(1, v.cols()) : axis == Axis::cols ? Tensor(v.rows(), 1)
                                                                               : Tensor(1, 1);
    for (std::size_t i = 0; i < v.rows(); ++i) {
        for (std::size_t j = 0; j < v.cols(); ++j) {
            out(axis == Axis::cols ? i : 0, axis == Axis::rows ? j : 0) += v(i, j);
        }
    }
    const std::size_t ia = a.id();
    return a.tape().record("sum", std::move(out), {ia}, [ia, axis](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& ga = t.grad_slot(ia);
        for (std::size_t i = 0; i < ga.rows(); ++i) {
            for (std::size_t j = 0; j < ga.cols(); ++j) {
                ga(i, j) += g(axis == Axis::cols ? i : 0, axis == Axis::rows ? j : 0);
            }
        }
    });
}

Var mean(Var a, Axis axis) {
    const Tensor& v = a.value();
    const std::size_t n = axis == Axis::rows ? v.rows() : axis == Axis::cols ? v.cols() : v.size();
    if (n == 0) {
        throw ShapeError("mean over empty extent of shape " + v.shape_string());
    }
    return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

Var sigmoid(Var a) {
    return unary(
        "sigmoid", a,
        [](double x) {
            if (x >= 0.0) {
                return 1.0 / (1.0 + std::exp(-x));
            }
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var leaky_relu(Var a, double slope) {
    return unary("leaky_relu", a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                 [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var elu(Var a, double alpha) {
    return unary("elu", a, [alpha](double x) { return x > 0.0 ? x : alpha * std::expm1(x); },
                 [alpha](double x, double y) { return x > 0.0 ? 1.0 : y + alpha; });
}

Var exp(Var a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
    return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
    return unary("clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
    const Tensor& v = a.value();
    Tensor out(index.size(), v.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= v.rows()) {
            throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " out of range for " +
                             v.shape_string());
        }
        std::copy_n(v.row(index[i]).begin(), v.cols(), out.row(i).begin());
    }
    const std::size_t ia = a.id();
    std::vector<std::size_t> idx(index.begin(), index.end());
    return a.tape().record("gather_rows", std::move(out), {ia},
                           [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad(self);
                               Tensor& ga = t.grad_slot(ia);
                               for (std::size_t i = 0; i < idx.size(); ++i) {
                                   auto src = g.row(i);
                                   auto dst = ga.row(idx[i]);
                                   for (std::size_t j = 0; j < src.size(); ++j) {
                                       dst[j] += src[j];
                                   }
                               }
                           });
}

Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t segments) {
    const Tensor& v = a.value();
    if (index.size() != v.rows()) {
        throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                         v.shape_string());
    }
    Tensor out(segments, v.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= segments) {
            throw ShapeError("scatter_add_rows: segment " + std::to_string(index[i]) + " >= " +
                             std::to_string(segments));
        }
        auto src = v.row(i);
        auto dst = out.row(index[i]);
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] += src[j];
        }
    }
    const std::size_t ia = a.id();
    std::vector<std::size_t> idx(index.begin(), index.end());
    return a.tape().record("scatter_add_rows", std::move(out), {ia},
                           [ia, idx = std::move(idx)](Tape& t, std::size_t self) {
                               const Tensor& g = t.grad(self);
                               Tensor& ga = t.grad_slot(ia);
                               for (std::size_t i = 0; i < idx.size(); ++i) {
                                   auto src = g.row(idx[i]);
                                   auto dst = ga.row(i);
                                   for (std::size_t j = 0; j < src.size(); ++j) {
                                       dst[j] += src[j];
                                   }
                               }
                           });
}

Var segment_softmax(Var scores, std::span<const std::size_t> segment, std::size_t segments) {
    const Tensor& s = scores.value();
    if (s.cols() != 1 || s.rows() != segment.size()) {
        throw ShapeError("segment_softmax: scores " + s.shape_string() + " with " +
                         std::to_string(segment.size()) + " segment ids");
    }
    std::vector<double> max_score(segments, -std::numeric_limits<double>::infinity());
    for (std::size_t e = 0; e < segment.size(); ++e) {
        if (segment[e] >= segments) {
            throw ShapeError("segment_softmax: segment " + std::to_string(segment[e]) + " >= " +
                             std::to_string(segments));
        }
        max_score[segment[e]] = std::max(max_score[segment[e]], s[e]);
    }
    Tensor out(s.rows(), 1);
    std::vector<double> denom(segments, 0.0);
    for (std::size_t e = 0; e < segment.size(); ++e) {
        out[e] = std::exp(s[e] - max_score[segment[e]]);
        denom[segment[e]] += out[e];
    }
    for (std::size_t e = 0; e < segment.size(); ++e) {
        out[e] /= denom[segment[e]];
    }
    const std::size_t ia = scores.id();
    std::vector<std::size_t> seg(segment.begin(), segment.end());
    return scores.tape().record(
        "segment_softmax", std::move(out), {ia},
        [ia, seg = std::move(seg), segments](Tape& t, std::size_t self) {
            const Tensor& g = t.grad(self);
            const Tensor& y = t.value(self);
            std::vector<double> dot(segments, 0.0);
            for (std::size_t e = 0; e < seg.size(); ++e) {
                dot[seg[e]] += y[e] * g[e];
            }
            Tensor& ga = t.grad_slot(ia);
            for (std::size_t e = 0; e < seg.size(); ++e) {
                ga[e] += y[e] * (g[e] - dot[seg[e]]);
            }
        });
}

double grad_check(const ScalarFn& f, std::span<const Tensor> params, double h) {
    std::vector<Tensor> analytic;
    {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(params.size());
        for (const Tensor& p : params) {
            vars.push_back(tape.parameter(p));
        }
        analytic = tape.backward(f(tape, vars));
    }

    auto evaluate = [&](const std::vector<Tensor>& values) {
        Tape tape;
        std::vector<Var> vars;
        vars.reserve(values.size());
        for (const Tensor& p : values) {
            vars.push_back(tape.constant(p));
        }
        return f(tape, vars).value().item();
    };

    std::vector<Tensor> probe(params.begin(), params.end());
    double worst = 0.0;
    for (std::size_t k = 0; k < probe.size(); ++k) {
        for (std::size_t i = 0; i < probe[k].size(); ++i) {
            const double original = probe[k][i];
            probe[k][i] = original + h;
            const double up = evaluate(probe);
            probe[k][i] = original - h;
            const double down = evaluate(probe);
            probe[k][i] = original;
            const double numeric = (up - down) / (2.0 * h);
            const double err = std::abs(analytic[k][i] - numeric) / std::max(1.0, std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace flowguard::ad
