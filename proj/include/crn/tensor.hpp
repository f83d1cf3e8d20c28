#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "crn/errors.hpp"

namespace crn {

#ifdef CRN_REAL_FLOAT
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

namespace detail {
struct TensorNode {
    Shape shape;
    std::vector<Real> values;
    std::vector<Real> grad;  // allocated lazily, same length as values when present
    bool requires_grad = false;
};
}  // namespace detail

// Dense tensor handle with shared storage. Copies alias the same buffer;
// the tape captures these handles to keep forward values alive for the
// backward sweep.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, Real fill = Real(0))
        : node_(std::make_shared<detail::TensorNode>()) {
        node_->shape = std::move(shape);
        node_->values.assign(shape_numel(node_->shape), fill);
    }

    Tensor(Shape shape, std::vector<Real> values)
        : node_(std::make_shared<detail::TensorNode>()) {
        if (shape_numel(shape) != values.size()) {
            throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                                 std::to_string(values.size()) + " values");
        }
        node_->shape = std::move(shape);
        node_->values = std::move(values);
    }

    static Tensor scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

    static Tensor row_vector(std::vector<Real> v) {
        Shape s{v.size()};
        return Tensor(std::move(s), std::move(v));
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->values.size(); }
    std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }

    Real* data() { return node_->values.data(); }
    const Real* data() const { return node_->values.data(); }
    std::span<Real> values() { return node_->values; }
    std::span<const Real> values() const { return node_->values; }

    Real value() const {
        if (size() != 1) throw RankError("value() on non-scalar tensor " + shape_str(shape()));
        return node_->values[0];
    }

    bool requires_grad() const { return node_ && node_->requires_grad; }

    Tensor& set_requires_grad(bool on = true) {
        node_->requires_grad = on;
        if (on && node_->grad.empty()) node_->grad.assign(node_->values.size(), Real(0));
        return *this;
    }

    bool has_grad() const { return node_ && !node_->grad.empty(); }

    std::span<Real> grad() {
        ensure_grad();
        return node_->grad;
    }
    std::span<const Real> grad() const {
        if (!has_grad()) throw OptimizerError("tensor has no gradient buffer");
        return node_->grad;
    }

    void ensure_grad() {
        if (node_->grad.empty()) node_->grad.assign(node_->values.size(), Real(0));
    }

    void zero_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
    }

    // Identity of the underlying buffer; used by optimizers keyed per parameter.
    const void* id() const { return node_.get(); }

private:
    std::shared_ptr<detail::TensorNode> node_;

    friend class Tape;
};

// Records the executed differentiable operations of one forward pass.
// A Tape on the stack is active for its scope (thread-local); ops record
// their adjoint closures into it, and backward() replays them in exact
// reverse execution order. Gradients accumulate (+=) into grad buffers,
// so callers zero parameter grads between steps. A tape can run backward
// once; a second call without a fresh forward is an error.
class Tape {
public:
    Tape() : prev_(current_slot()) { current_slot() = this; }
    ~Tape() { current_slot() = prev_; }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* current() { return current_slot(); }

    void record(std::function<void()> adjoint) { ops_.push_back(std::move(adjoint)); }

    std::size_t size() const { return ops_.size(); }

    void backward(Tensor loss) {
        if (loss.size() != 1) {
            throw RankError("backward expects a scalar loss, got shape " + shape_str(loss.shape()));
        }
        if (used_) {
            throw Error("backward called twice on one tape; run a fresh forward first");
        }
        used_ = true;
        loss.ensure_grad();
        loss.node_->grad[0] += Real(1);
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

private:
    static Tape*& current_slot() {
        thread_local Tape* active = nullptr;
        return active;
    }

    Tape* prev_;
    std::vector<std::function<void()>> ops_;
    bool used_ = false;

    friend class TapePause;
};

// Masks any active tape for a scope; used for value-only re-evaluations
// such as finite-difference probes.
class TapePause {
public:
    TapePause() : prev_(Tape::current_slot()) { Tape::current_slot() = nullptr; }
    ~TapePause() { Tape::current_slot() = prev_; }
    TapePause(const TapePause&) = delete;
    TapePause& operator=(const TapePause&) = delete;

private:
    Tape* prev_;
};

inline void backward(const Tensor& loss) {
    Tape* tape = Tape::current();
    if (!tape) throw Error("backward requires an active tape");
    tape->backward(loss);
}

namespace detail {

inline bool tracing(const Tensor& a) { return Tape::current() && a.requires_grad(); }
inline bool tracing(const Tensor& a, const Tensor& b) {
    return Tape::current() && (a.requires_grad() || b.requires_grad());
}

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
    }
}

}  // namespace detail

// --- elementwise -----------------------------------------------------------

namespace detail {

template <typename Fwd, typename Bwd>
Tensor unary_op(const char* /*name*/, const Tensor& x, Fwd fwd, Bwd bwd) {
    Tensor out(x.shape());
    const Real* xv = x.data();
    Real* ov = out.data();
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) ov[i] = fwd(xv[i]);
    if (tracing(x)) {
        out.set_requires_grad(true);
        Tape::current()->record([x(x), out(out), bwd]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            auto xg = x.grad();
            const Real* xv = x.data();
            const Real* ov = out.data();
            for (std::size_t i = 0; i < g.size(); ++i) xg[i] += bwd(xv[i], ov[i]) * g[i];
        });
    }
    return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::check_same_shape("add", a, b);
    Tensor out(a.shape());
    const std::size_t n = a.size();
    const Real* av = a.data();
    const Real* bv = b.data();
    Real* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i];
    if (detail::tracing(a, b)) {
        out.set_requires_grad(true);
        Tape::current()->record([a(a), b(b), out(out)]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ag = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
            }
            if (b.requires_grad()) {
                auto bg = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i];
            }
        });
    }
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_shape("sub", a, b);
    Tensor out(a.shape());
    const std::size_t n = a.size();
    const Real* av = a.data();
    const Real* bv = b.data();
    Real* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] - bv[i];
    if (detail::tracing(a, b)) {
        out.set_requires_grad(true);
        Tape::current()->record([a(a), b(b), out(out)]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ag = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
            }
            if (b.requires_grad()) {
                auto bg = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] -= g[i];
            }
        });
    }
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::check_same_shape("mul", a, b);
    Tensor out(a.shape());
    const std::size_t n = a.size();
    const Real* av = a.data();
    const Real* bv = b.data();
    Real* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = av[i] * bv[i];
    if (detail::tracing(a, b)) {
        out.set_requires_grad(true);
        Tape::current()->record([a(a), b(b), out(out)]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ag = a.grad();
                const Real* bv = b.data();
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += bv[i] * g[i];
            }
            if (b.requires_grad()) {
                auto bg = b.grad();
                const Real* av = a.data();
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] += av[i] * g[i];
            }
        });
    }
    return out;
}

inline Tensor scale(const Tensor& x, Real k) {
    return detail::unary_op(
        "scale", x, [k](Real v) { return k * v; }, [k](Real, Real) { return k; });
}

inline Tensor tanh(const Tensor& x) {
    return detail::unary_op(
        "tanh", x, [](Real v) { return std::tanh(v); },
        [](Real, Real y) { return Real(1) - y * y; });
}

inline Tensor sigmoid(const Tensor& x) {
    return detail::unary_op(
        "sigmoid", x,
        [](Real v) {
            // split on sign to avoid overflowing exp
            if (v >= 0) {
                const Real e = std::exp(-v);
                return Real(1) / (Real(1) + e);
            }
            const Real e = std::exp(v);
            return e / (Real(1) + e);
        },
        [](Real, Real y) { return y * (Real(1) - y); });
}

inline Tensor relu(const Tensor& x) {
    return detail::unary_op(
        "relu", x, [](Real v) { return v > 0 ? v : Real(0); },
        [](Real v, Real) { return v > 0 ? Real(1) : Real(0); });
}

inline Tensor abs(const Tensor& x) {
    return detail::unary_op(
        "abs", x, [](Real v) { return v < 0 ? -v : v; },
        [](Real v, Real) { return v > 0 ? Real(1) : (v < 0 ? Real(-1) : Real(0)); });
}

// --- linear algebra ---------------------------------------------------------

// [m x k] @ [k x n] -> [m x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor out(Shape{m, n});
    const Real* av = a.data();
    const Real* bv = b.data();
    Real* ov = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const Real aip = av[i * k + p];
            if (aip == Real(0)) continue;
            const Real* brow = bv + p * n;
            Real* orow = ov + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
    if (detail::tracing(a, b)) {
        out.set_requires_grad(true);
        Tape::current()->record([a(a), b(b), out(out), m, k, n]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ag = a.grad();
                const Real* bv = b.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        Real acc = 0;
                        const Real* grow = g.data() + i * n;
                        const Real* brow = bv + p * n;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        ag[i * k + p] += acc;
                    }
            }
            if (b.requires_grad()) {
                auto bg = b.grad();
                const Real* av = a.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const Real aip = av[i * k + p];
                        if (aip == Real(0)) continue;
                        Real* brow = bg.data() + p * n;
                        const Real* grow = g.data() + i * n;
                        for (std::size_t j = 0; j < n; ++j) brow[j] += aip * grow[j];
                    }
            }
        });
    }
    return out;
}

// [m x k] @ [k] -> [m]
inline Tensor matvec(const Tensor& a, const Tensor& x) {
    if (a.rank() != 2 || x.rank() != 1 || a.extent(1) != x.extent(0)) {
        throw DimensionError("matvec: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(x.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1);
    Tensor out(Shape{m});
    const Real* av = a.data();
    const Real* xv = x.data();
    Real* ov = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        Real acc = 0;
        const Real* arow = av + i * k;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * xv[p];
        ov[i] = acc;
    }
    if (detail::tracing(a, x)) {
        out.set_requires_grad(true);
        Tape::current()->record([a(a), x(x), out(out), m, k]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ag = a.grad();
                const Real* xv = x.data();
                for (std::size_t i = 0; i < m; ++i) {
                    const Real gi = g[i];
                    if (gi == Real(0)) continue;
                    Real* arow = ag.data() + i * k;
                    for (std::size_t p = 0; p < k; ++p) arow[p] += gi * xv[p];
                }
            }
            if (x.requires_grad()) {
                auto xg = x.grad();
                const Real* av = a.data();
                for (std::size_t i = 0; i < m; ++i) {
                    const Real gi = g[i];
                    if (gi == Real(0)) continue;
                    const Real* arow = av + i * k;
                    for (std::size_t p = 0; p < k; ++p) xg[p] += gi * arow[p];
                }
            }
        });
    }
    return out;
}

// A^T @ y: [m x k], [m] -> [k]. Row-weighted sum without materializing A^T.
inline Tensor matvec_t(const Tensor& a, const Tensor& y) {
    if (a.rank() != 2 || y.rank() != 1 || a.extent(0) != y.extent(0)) {
        throw DimensionError("matvec_t: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(y.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1);
    Tensor out(Shape{k});
    const Real* av = a.data();
    const Real* yv = y.data();
    Real* ov = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        const Real yi = yv[i];
        if (yi == Real(0)) continue;
        const Real* arow = av + i * k;
        for (std::size_t p = 0; p < k; ++p) ov[p] += yi * arow[p];
    }
    if (detail::tracing(a, y)) {
        out.set_requires_grad(true);
        Tape::current()->record([a(a), y(y), out(out), m, k]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ag = a.grad();
                const Real* yv = y.data();
                for (std::size_t i = 0; i < m; ++i) {
                    const Real yi = yv[i];
                    if (yi == Real(0)) continue;
                    Real* arow = ag.data() + i * k;
                    for (std::size_t p = 0; p < k; ++p) arow[p] += yi * g[p];
                }
            }
            if (y.requires_grad()) {
                auto yg = y.grad();
                const Real* av = a.data();
                for (std::size_t i = 0; i < m; ++i) {
                    Real acc = 0;
                    const Real* arow = av + i * k;
                    for (std::size_t p = 0; p < k; ++p) acc += arow[p] * g[p];
                    yg[i] += acc;
                }
            }
        });
    }
    return out;
}

// Row-batched affine map: X [n x in], W [out x in], b [out] -> X W^T + b, [n x out].
inline Tensor linear_rows(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.extent(1) != w.extent(1) ||
        w.extent(0) != b.extent(0)) {
        throw DimensionError("linear_rows: incompatible shapes " + shape_str(x.shape()) + ", " +
                             shape_str(w.shape()) + ", " + shape_str(b.shape()));
    }
    const std::size_t n = x.extent(0), in = x.extent(1), out_dim = w.extent(0);
    Tensor out(Shape{n, out_dim});
    const Real* xv = x.data();
    const Real* wv = w.data();
    const Real* bv = b.data();
    Real* ov = out.data();
    for (std::size_t r = 0; r < n; ++r) {
        const Real* xrow = xv + r * in;
        Real* orow = ov + r * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) {
            Real acc = bv[o];
            const Real* wrow = wv + o * in;
            for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * xrow[i];
            orow[o] = acc;
        }
    }
    if (Tape::current() && (x.requires_grad() || w.requires_grad() || b.requires_grad())) {
        out.set_requires_grad(true);
        Tape::current()->record([x(x), w(w), b(b), out(out), n, in, out_dim]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            if (x.requires_grad()) {
                auto xg = x.grad();
                const Real* wv = w.data();
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t o = 0; o < out_dim; ++o) {
                        const Real go = g[r * out_dim + o];
                        if (go == Real(0)) continue;
                        const Real* wrow = wv + o * in;
                        Real* xrow = xg.data() + r * in;
                        for (std::size_t i = 0; i < in; ++i) xrow[i] += go * wrow[i];
                    }
            }
            if (w.requires_grad()) {
                auto wg = w.grad();
                const Real* xv = x.data();
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t o = 0; o < out_dim; ++o) {
                        const Real go = g[r * out_dim + o];
                        if (go == Real(0)) continue;
                        const Real* xrow = xv + r * in;
                        Real* wrow = wg.data() + o * in;
                        for (std::size_t i = 0; i < in; ++i) wrow[i] += go * xrow[i];
                    }
            }
            if (b.requires_grad()) {
                auto bg = b.grad();
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t o = 0; o < out_dim; ++o) bg[o] += g[r * out_dim + o];
            }
        });
    }
    return out;
}

// --- structure ops ----------------------------------------------------------

// Stack rank-1 rows of equal extent into [n x d].
inline Tensor stack_rows(std::span<const Tensor> rows) {
    if (rows.empty()) throw EmptyInputError("stack_rows: no rows");
    const std::size_t d = rows[0].size();
    for (const Tensor& r : rows) {
        if (r.rank() != 1 || r.size() != d) {
            throw DimensionError("stack_rows: row shape " + shape_str(r.shape()) +
                                 " does not match extent " + std::to_string(d));
        }
    }
    const std::size_t n = rows.size();
    Tensor out(Shape{n, d});
    Real* ov = out.data();
    for (std::size_t r = 0; r < n; ++r)
        std::copy(rows[r].data(), rows[r].data() + d, ov + r * d);
    bool any_grad = false;
    for (const Tensor& r : rows) any_grad = any_grad || r.requires_grad();
    if (Tape::current() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> captured(rows.begin(), rows.end());
        Tape::current()->record([captured(std::move(captured)), out(out), d]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            for (std::size_t r = 0; r < captured.size(); ++r) {
                if (!captured[r].requires_grad()) continue;
                auto rg = captured[r].grad();
                const Real* grow = g.data() + r * d;
                for (std::size_t i = 0; i < d; ++i) rg[i] += grow[i];
            }
        });
    }
    return out;
}

inline Tensor stack_rows(const std::vector<Tensor>& rows) {
    return stack_rows(std::span<const Tensor>(rows.data(), rows.size()));
}

// Contiguous slice of a rank-1 tensor.
inline Tensor slice(const Tensor& x, std::size_t offset, std::size_t len) {
    if (x.rank() != 1 || offset + len > x.size()) {
        throw DimensionError("slice: [" + std::to_string(offset) + ", " +
                             std::to_string(offset + len) + ") out of " + shape_str(x.shape()));
    }
    Tensor out(Shape{len});
    std::copy(x.data() + offset, x.data() + offset + len, out.data());
    if (detail::tracing(x)) {
        out.set_requires_grad(true);
        Tape::current()->record([x(x), out(out), offset, len]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            auto xg = x.grad();
            for (std::size_t i = 0; i < len; ++i) xg[offset + i] += g[i];
        });
    }
    return out;
}

inline Tensor concat(std::span<const Tensor> parts) {
    if (parts.empty()) throw EmptyInputError("concat: no operands");
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != 1) throw DimensionError("concat: operand shape " + shape_str(p.shape()));
        total += p.size();
    }
    Tensor out(Shape{total});
    Real* ov = out.data();
    std::size_t at = 0;
    for (const Tensor& p : parts) {
        std::copy(p.data(), p.data() + p.size(), ov + at);
        at += p.size();
    }
    bool any_grad = false;
    for (const Tensor& p : parts) any_grad = any_grad || p.requires_grad();
    if (Tape::current() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> captured(parts.begin(), parts.end());
        Tape::current()->record([captured(std::move(captured)), out(out)]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            std::size_t at = 0;
            for (Tensor& p : captured) {
                if (p.requires_grad()) {
                    auto pg = p.grad();
                    for (std::size_t i = 0; i < p.size(); ++i) pg[i] += g[at + i];
                }
                at += p.size();
            }
        });
    }
    return out;
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
    const Tensor parts[2] = {a, b};
    return concat(std::span<const Tensor>(parts, 2));
}

// Scalar element pick from a rank-1 tensor.
inline Tensor pick(const Tensor& x, std::size_t index) {
    if (x.rank() != 1 || index >= x.size()) {
        throw DimensionError("pick: index " + std::to_string(index) + " out of " +
                             shape_str(x.shape()));
    }
    Tensor out = Tensor::scalar(x.data()[index]);
    if (detail::tracing(x)) {
        out.set_requires_grad(true);
        Tape::current()->record([x(x), out(out), index]() mutable {
            if (!out.has_grad()) return;
            x.grad()[index] += out.grad()[0];
        });
    }
    return out;
}

inline Tensor sum(const Tensor& x) {
    Real acc = 0;
    for (Real v : x.values()) acc += v;
    Tensor out = Tensor::scalar(acc);
    if (detail::tracing(x)) {
        out.set_requires_grad(true);
        Tape::current()->record([x(x), out(out)]() mutable {
            if (!out.has_grad()) return;
            const Real g = out.grad()[0];
            auto xg = x.grad();
            for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g;
        });
    }
    return out;
}

// Sum of many scalars in one node (keeps loss graphs shallow).
inline Tensor sum_of(std::span<const Tensor> terms) {
    if (terms.empty()) throw EmptyInputError("sum_of: no terms");
    Real acc = 0;
    bool any_grad = false;
    for (const Tensor& t : terms) {
        if (t.size() != 1) throw RankError("sum_of: non-scalar term " + shape_str(t.shape()));
        acc += t.data()[0];
        any_grad = any_grad || t.requires_grad();
    }
    Tensor out = Tensor::scalar(acc);
    if (Tape::current() && any_grad) {
        out.set_requires_grad(true);
        std::vector<Tensor> captured(terms.begin(), terms.end());
        Tape::current()->record([captured(std::move(captured)), out(out)]() mutable {
            if (!out.has_grad()) return;
            const Real g = out.grad()[0];
            for (Tensor& t : captured)
                if (t.requires_grad()) t.grad()[0] += g;
        });
    }
    return out;
}

inline Tensor sum_of(const std::vector<Tensor>& terms) {
    return sum_of(std::span<const Tensor>(terms.data(), terms.size()));
}

// Column-wise max over the rows of [r x c] -> [c]. Ties route the gradient
// to the first maximal row, which keeps backward deterministic.
inline Tensor max_over_rows(const Tensor& x) {
    if (x.rank() != 2 || x.extent(0) == 0) {
        throw DimensionError("max_over_rows: need non-empty rank-2 input, got " +
                             shape_str(x.shape()));
    }
    const std::size_t r = x.extent(0), c = x.extent(1);
    Tensor out(Shape{c});
    std::vector<std::size_t> argmax(c, 0);
    const Real* xv = x.data();
    Real* ov = out.data();
    for (std::size_t j = 0; j < c; ++j) ov[j] = xv[j];
    for (std::size_t i = 1; i < r; ++i) {
        const Real* row = xv + i * c;
        for (std::size_t j = 0; j < c; ++j) {
            if (row[j] > ov[j]) {
                ov[j] = row[j];
                argmax[j] = i;
            }
        }
    }
    if (detail::tracing(x)) {
        out.set_requires_grad(true);
        Tape::current()->record([x(x), out(out), argmax(std::move(argmax)), c]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            auto xg = x.grad();
            for (std::size_t j = 0; j < c; ++j) xg[argmax[j] * c + j] += g[j];
        });
    }
    return out;
}

// --- softmax family ---------------------------------------------------------

// Probability weights over the unmasked positions; masked entries are
// exactly zero and receive no gradient.
inline Tensor masked_softmax(const Tensor& scores, const std::vector<bool>& mask) {
    if (scores.rank() != 1 || scores.size() != mask.size()) {
        throw DimensionError("masked_softmax: scores " + shape_str(scores.shape()) + " vs mask of " +
                             std::to_string(mask.size()));
    }
    const std::size_t n = scores.size();
    Real max_v = 0;
    bool any = false;
    const Real* sv = scores.data();
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        if (!any || sv[i] > max_v) max_v = sv[i];
        any = true;
    }
    if (!any) throw EmptySupportError("masked_softmax: every position is masked");
    Tensor out(Shape{n});
    Real* ov = out.data();
    Real z = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i]) {
            ov[i] = std::exp(sv[i] - max_v);
            z += ov[i];
        } else {
            ov[i] = 0;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) ov[i] /= z;
    if (detail::tracing(scores)) {
        out.set_requires_grad(true);
        Tape::current()->record([scores(scores), out(out), mask(mask)]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            auto sg = scores.grad();
            const Real* y = out.data();
            Real dot = 0;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (mask[i]) dot += g[i] * y[i];
            for (std::size_t i = 0; i < g.size(); ++i)
                if (mask[i]) sg[i] += y[i] * (g[i] - dot);
        });
    }
    return out;
}

inline Tensor softmax(const Tensor& scores) {
    return masked_softmax(scores, std::vector<bool>(scores.size(), true));
}

// Numerically stable log-softmax over a rank-1 tensor.
inline Tensor log_softmax(const Tensor& scores) {
    if (scores.rank() != 1 || scores.size() == 0) {
        throw DimensionError("log_softmax: need non-empty rank-1 input, got " +
                             shape_str(scores.shape()));
    }
    const std::size_t n = scores.size();
    const Real* sv = scores.data();
    Real max_v = sv[0];
    for (std::size_t i = 1; i < n; ++i) max_v = std::max(max_v, sv[i]);
    Real z = 0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(sv[i] - max_v);
    const Real log_z = std::log(z) + max_v;
    Tensor out(Shape{n});
    Real* ov = out.data();
    for (std::size_t i = 0; i < n; ++i) ov[i] = sv[i] - log_z;
    if (detail::tracing(scores)) {
        out.set_requires_grad(true);
        Tape::current()->record([scores(scores), out(out)]() mutable {
            if (!out.has_grad()) return;
            auto g = out.grad();
            auto sg = scores.grad();
            const Real* y = out.data();
            Real gsum = 0;
            for (std::size_t i = 0; i < g.size(); ++i) gsum += g[i];
            for (std::size_t i = 0; i < g.size(); ++i) sg[i] += g[i] - std::exp(y[i]) * gsum;
        });
    }
    return out;
}

// Single-vector affine map: W [out x in] @ x [in] + b [out].
inline Tensor affine(const Tensor& w, const Tensor& x, const Tensor& b) {
    return add(matvec(w, x), b);
}

}  // namespace crn
