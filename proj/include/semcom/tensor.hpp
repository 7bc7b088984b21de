#pragma once

// Reverse-mode differentiation core. Tensors are shared handles onto flat
// float storage; every primitive records its pullback on an explicit Tape
// whose execution order is the topological order of the forward pass.
// The scalar type is a template parameter: models train in float32, and the
// float64 instantiation exists for finite-difference gradient checking.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semcom/rng.hpp"

namespace semcom::core {

inline std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

template <class S>
struct TensorStorage {
    std::vector<std::size_t> shape;
    std::vector<S> value;
    std::vector<S> grad;  // allocated lazily, same length as value
    bool requires_grad = false;
    std::string name;  // non-empty for registered parameters
};

template <class S>
class TensorT {
public:
    using Scalar = S;

    TensorT() = default;

    static TensorT zeros(std::vector<std::size_t> shape) {
        TensorT t;
        t.s_ = std::make_shared<TensorStorage<S>>();
        t.s_->shape = std::move(shape);
        t.s_->value.assign(t.count(t.s_->shape), S(0));
        return t;
    }

    static TensorT full(std::vector<std::size_t> shape, S v) {
        TensorT t = zeros(std::move(shape));
        std::fill(t.value().begin(), t.value().end(), v);
        return t;
    }

    static TensorT from_vector(std::vector<std::size_t> shape, std::vector<S> data) {
        TensorT t;
        t.s_ = std::make_shared<TensorStorage<S>>();
        if (t.count(shape) != data.size()) {
            throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                        " does not match shape " + shape_str(shape));
        }
        t.s_->shape = std::move(shape);
        t.s_->value = std::move(data);
        return t;
    }

    static TensorT scalar(S v) { return from_vector({1}, {v}); }

    bool defined() const { return static_cast<bool>(s_); }
    const std::vector<std::size_t>& shape() const { return s_->shape; }
    std::size_t rank() const { return s_->shape.size(); }
    std::size_t size() const { return s_->value.size(); }
    std::size_t rows() const { return s_->shape.empty() ? 0 : s_->shape[0]; }
    std::size_t cols() const { return s_->shape.size() < 2 ? 1 : s_->shape[1]; }

    std::vector<S>& value() { return s_->value; }
    const std::vector<S>& value() const { return s_->value; }

    bool requires_grad() const { return s_->requires_grad; }
    void set_requires_grad(bool b) { s_->requires_grad = b; }

    const std::string& name() const { return s_->name; }
    void set_name(std::string n) { s_->name = std::move(n); }

    bool has_grad() const { return !s_->grad.empty(); }
    std::vector<S>& grad() {
        if (s_->grad.empty()) s_->grad.assign(s_->value.size(), S(0));
        return s_->grad;
    }
    const std::vector<S>& grad() const { return s_->grad; }
    void zero_grad() { std::fill(s_->grad.begin(), s_->grad.end(), S(0)); }
    void drop_grad() { s_->grad.clear(); }

    S at(std::size_t i) const { return s_->value[i]; }
    S at(std::size_t r, std::size_t c) const { return s_->value[r * cols() + c]; }
    void set(std::size_t i, S v) { s_->value[i] = v; }
    void set(std::size_t r, std::size_t c, S v) { s_->value[r * cols() + c] = v; }

    S scalar_value() const {
        if (size() != 1) throw std::invalid_argument("scalar_value on tensor " + shape_str(shape()));
        return s_->value[0];
    }

    // Storage identity; used to assert weight tying.
    const void* storage_id() const { return s_.get(); }

    bool same_storage(const TensorT& other) const { return s_.get() == other.s_.get(); }

private:
    std::size_t count(const std::vector<std::size_t>& shape) const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

    std::shared_ptr<TensorStorage<S>> s_;
};

// Ordered record of executed primitives. Ops are appended in forward order,
// so replaying the pullbacks back-to-front is a valid reverse topological
// traversal; gradients accumulate additively across fan-out.
template <class S>
class TapeT {
public:
    void record(std::function<void()> pullback) { ops_.push_back(std::move(pullback)); }

    std::size_t size() const { return ops_.size(); }

    void clear() { ops_.clear(); }

    void backward(TensorT<S> loss) {
        if (loss.size() != 1) {
            throw std::invalid_argument("backward requires a scalar loss, got " + shape_str(loss.shape()));
        }
        if (ops_.empty()) throw std::invalid_argument("backward on empty tape");
        loss.grad()[0] += S(1);
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

private:
    std::vector<std::function<void()>> ops_;
};

using Tensor = TensorT<float>;
using Tape = TapeT<float>;

namespace detail {

template <class S>
using EMat = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using ECMat = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <class S>
inline bool track(const TapeT<S>* tape, std::initializer_list<const TensorT<S>*> inputs) {
    if (!tape) return false;
    for (const auto* t : inputs)
        if ((*t).requires_grad()) return true;
    return false;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

template <class S>
TensorT<S> matmul(TapeT<S>* tape, const TensorT<S>& a, const TensorT<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw std::invalid_argument("matmul shape mismatch: " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    const auto m = static_cast<Eigen::Index>(a.rows());
    const auto k = static_cast<Eigen::Index>(a.cols());
    const auto n = static_cast<Eigen::Index>(b.cols());
    auto out = TensorT<S>::zeros({a.rows(), b.cols()});
    detail::EMat<S>(out.value().data(), m, n).noalias() =
        detail::ECMat<S>(a.value().data(), m, k) * detail::ECMat<S>(b.value().data(), k, n);
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad(true);
        auto ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc, m, k, n]() mutable {
            detail::ECMat<S> go(oc.grad().data(), m, n);
            if (ac.requires_grad()) {
                detail::EMat<S>(ac.grad().data(), m, k).noalias() +=
                    go * detail::ECMat<S>(bc.value().data(), k, n).transpose();
            }
            if (bc.requires_grad()) {
                detail::EMat<S>(bc.grad().data(), k, n).noalias() +=
                    detail::ECMat<S>(ac.value().data(), m, k).transpose() * go;
            }
        });
    }
    return out;
}

template <class S>
TensorT<S> add(TapeT<S>* tape, const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("add shape mismatch: " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    auto out = TensorT<S>::zeros(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out.value()[i] = a.value()[i] + b.value()[i];
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad(true);
        auto ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc]() mutable {
            if (ac.requires_grad())
                for (std::size_t i = 0; i < oc.size(); ++i) ac.grad()[i] += oc.grad()[i];
            if (bc.requires_grad())
                for (std::size_t i = 0; i < oc.size(); ++i) bc.grad()[i] += oc.grad()[i];
        });
    }
    return out;
}

template <class S>
TensorT<S> sub(TapeT<S>* tape, const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("sub shape mismatch: " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    auto out = TensorT<S>::zeros(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out.value()[i] = a.value()[i] - b.value()[i];
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad(true);
        auto ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc]() mutable {
            if (ac.requires_grad())
                for (std::size_t i = 0; i < oc.size(); ++i) ac.grad()[i] += oc.grad()[i];
            if (bc.requires_grad())
                for (std::size_t i = 0; i < oc.size(); ++i) bc.grad()[i] -= oc.grad()[i];
        });
    }
    return out;
}

template <class S>
TensorT<S> mul(TapeT<S>* tape, const TensorT<S>& a, const TensorT<S>& b) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument("mul shape mismatch: " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    auto out = TensorT<S>::zeros(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out.value()[i] = a.value()[i] * b.value()[i];
    if (detail::track(tape, {&a, &b})) {
        out.set_requires_grad(true);
        auto ac = a, bc = b, oc = out;
        tape->record([ac, bc, oc]() mutable {
            if (ac.requires_grad())
                for (std::size_t i = 0; i < oc.size(); ++i) ac.grad()[i] += oc.grad()[i] * bc.value()[i];
            if (bc.requires_grad())
                for (std::size_t i = 0; i < oc.size(); ++i) bc.grad()[i] += oc.grad()[i] * ac.value()[i];
        });
    }
    return out;
}

template <class S>
TensorT<S> scale(TapeT<S>* tape, const TensorT<S>& a, S c) {
    auto out = TensorT<S>::zeros(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out.value()[i] = a.value()[i] * c;
    if (detail::track(tape, {&a})) {
        out.set_requires_grad(true);
        auto ac = a, oc = out;
        tape->record([ac, oc, c]() mutable {
            for (std::size_t i = 0; i < oc.size(); ++i) ac.grad()[i] += oc.grad()[i] * c;
        });
    }
    return out;
}

// out[r,c] = x[r,c] + b[c]
template <class S>
TensorT<S> add_rowwise(TapeT<S>* tape, const TensorT<S>& x, const TensorT<S>& b) {
    if (b.size() != x.cols()) {
        throw std::invalid_argument("add_rowwise bias size " + shape_str(b.shape()) +
                                    " does not match columns of " + shape_str(x.shape()));
    }
    auto out = TensorT<S>::zeros(x.shape());
    const std::size_t r = x.rows(), c = x.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.value()[i * c + j] = x.value()[i * c + j] + b.value()[j];
    if (detail::track(tape, {&x, &b})) {
        out.set_requires_grad(true);
        auto xc = x, bc = b, oc = out;
        tape->record([xc, bc, oc, r, c]() mutable {
            if (xc.requires_grad())
                for (std::size_t i = 0; i < r * c; ++i) xc.grad()[i] += oc.grad()[i];
            if (bc.requires_grad())
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) bc.grad()[j] += oc.grad()[i * c + j];
        });
    }
    return out;
}

// out[r,c] = x[r,c] * w[r]   (per-row scaling; w is [r] or [r x 1])
template <class S>
TensorT<S> mul_colvec(TapeT<S>* tape, const TensorT<S>& x, const TensorT<S>& w) {
    if (w.size() != x.rows()) {
        throw std::invalid_argument("mul_colvec weight size " + shape_str(w.shape()) +
                                    " does not match rows of " + shape_str(x.shape()));
    }
    auto out = TensorT<S>::zeros(x.shape());
    const std::size_t r = x.rows(), c = x.cols();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.value()[i * c + j] = x.value()[i * c + j] * w.value()[i];
    if (detail::track(tape, {&x, &w})) {
        out.set_requires_grad(true);
        auto xc = x, wc = w, oc = out;
        tape->record([xc, wc, oc, r, c]() mutable {
            if (xc.requires_grad())
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) xc.grad()[i * c + j] += oc.grad()[i * c + j] * wc.value()[i];
            if (wc.requires_grad())
                for (std::size_t i = 0; i < r; ++i) {
                    S acc = 0;
                    for (std::size_t j = 0; j < c; ++j) acc += oc.grad()[i * c + j] * xc.value()[i * c + j];
                    wc.grad()[i] += acc;
                }
        });
    }
    return out;
}

// out = x * s where s is a scalar tensor (participates in backward).
template <class S>
TensorT<S> mul_scalar(TapeT<S>* tape, const TensorT<S>& x, const TensorT<S>& s) {
    if (s.size() != 1) throw std::invalid_argument("mul_scalar expects scalar, got " + shape_str(s.shape()));
    auto out = TensorT<S>::zeros(x.shape());
    const S sv = s.value()[0];
    for (std::size_t i = 0; i < out.size(); ++i) out.value()[i] = x.value()[i] * sv;
    if (detail::track(tape, {&x, &s})) {
        out.set_requires_grad(true);
        auto xc = x, sc = s, oc = out;
        tape->record([xc, sc, oc, sv]() mutable {
            if (xc.requires_grad())
                for (std::size_t i = 0; i < oc.size(); ++i) xc.grad()[i] += oc.grad()[i] * sv;
            if (sc.requires_grad()) {
                S acc = 0;
                for (std::size_t i = 0; i < oc.size(); ++i) acc += oc.grad()[i] * xc.value()[i];
                sc.grad()[0] += acc;
            }
        });
    }
    return out;
}

template <class S>
TensorT<S> relu(TapeT<S>* tape, const TensorT<S>& x) {
    auto out = TensorT<S>::zeros(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const S v = x.value()[i];
        // NaN must propagate, not flush to zero: non-finite values are an
        // error state that the loss check has to see.
        out.value()[i] = (v != v) ? v : (v > S(0) ? v : S(0));
    }
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            for (std::size_t i = 0; i < oc.size(); ++i)
                if (xc.value()[i] > S(0)) xc.grad()[i] += oc.grad()[i];
        });
    }
    return out;
}

template <class S>
TensorT<S> sigmoid(TapeT<S>* tape, const TensorT<S>& x) {
    auto out = TensorT<S>::zeros(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out.value()[i] = S(1) / (S(1) + std::exp(-x.value()[i]));
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            for (std::size_t i = 0; i < oc.size(); ++i) {
                const S s = oc.value()[i];
                xc.grad()[i] += oc.grad()[i] * s * (S(1) - s);
            }
        });
    }
    return out;
}

// Row-wise softmax with max subtraction; each output row sums to 1.
template <class S>
TensorT<S> softmax_rows(TapeT<S>* tape, const TensorT<S>& x) {
    auto out = TensorT<S>::zeros(x.shape());
    const std::size_t r = x.rows(), c = x.cols();
    for (std::size_t i = 0; i < r; ++i) {
        const S* xi = x.value().data() + i * c;
        S* oi = out.value().data() + i * c;
        S mx = xi[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, xi[j]);
        S sum = 0;
        for (std::size_t j = 0; j < c; ++j) {
            oi[j] = std::exp(xi[j] - mx);
            sum += oi[j];
        }
        const S inv = S(1) / sum;
        for (std::size_t j = 0; j < c; ++j) oi[j] *= inv;
    }
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc, r, c]() mutable {
            for (std::size_t i = 0; i < r; ++i) {
                const S* oi = oc.value().data() + i * c;
                const S* gi = oc.grad().data() + i * c;
                S dot = 0;
                for (std::size_t j = 0; j < c; ++j) dot += gi[j] * oi[j];
                S* xi = xc.grad().data() + i * c;
                for (std::size_t j = 0; j < c; ++j) xi[j] += oi[j] * (gi[j] - dot);
            }
        });
    }
    return out;
}

// Per-row standardization followed by the elementwise affine (gain, bias).
template <class S>
TensorT<S> layer_norm(TapeT<S>* tape, const TensorT<S>& x, const TensorT<S>& gain,
                      const TensorT<S>& bias, S eps = S(1e-6)) {
    const std::size_t r = x.rows(), c = x.cols();
    if (gain.size() != c || bias.size() != c) {
        throw std::invalid_argument("layer_norm gain/bias must match last dim " + std::to_string(c));
    }
    auto out = TensorT<S>::zeros(x.shape());
    std::vector<S> inv_std(r), means(r);
    for (std::size_t i = 0; i < r; ++i) {
        const S* xi = x.value().data() + i * c;
        S mean = 0;
        for (std::size_t j = 0; j < c; ++j) mean += xi[j];
        mean /= static_cast<S>(c);
        S var = 0;
        for (std::size_t j = 0; j < c; ++j) var += (xi[j] - mean) * (xi[j] - mean);
        var /= static_cast<S>(c);
        const S istd = S(1) / std::sqrt(var + eps);
        means[i] = mean;
        inv_std[i] = istd;
        S* oi = out.value().data() + i * c;
        for (std::size_t j = 0; j < c; ++j)
            oi[j] = (xi[j] - mean) * istd * gain.value()[j] + bias.value()[j];
    }
    if (detail::track(tape, {&x, &gain, &bias})) {
        out.set_requires_grad(true);
        auto xc = x, gc = gain, bc = bias, oc = out;
        tape->record([xc, gc, bc, oc, r, c, inv_std, means]() mutable {
            for (std::size_t i = 0; i < r; ++i) {
                const S* xi = xc.value().data() + i * c;
                const S* gi = oc.grad().data() + i * c;
                const S istd = inv_std[i], mean = means[i];
                // xhat = (x - mean) * istd
                S sum_gy = 0, sum_gy_xhat = 0;
                for (std::size_t j = 0; j < c; ++j) {
                    const S xhat = (xi[j] - mean) * istd;
                    const S gy = gi[j] * gc.value()[j];
                    sum_gy += gy;
                    sum_gy_xhat += gy * xhat;
                }
                if (xc.requires_grad()) {
                    S* xg = xc.grad().data() + i * c;
                    const S invc = S(1) / static_cast<S>(c);
                    for (std::size_t j = 0; j < c; ++j) {
                        const S xhat = (xi[j] - mean) * istd;
                        const S gy = gi[j] * gc.value()[j];
                        xg[j] += istd * (gy - invc * sum_gy - invc * xhat * sum_gy_xhat);
                    }
                }
                if (gc.requires_grad() || bc.requires_grad()) {
                    for (std::size_t j = 0; j < c; ++j) {
                        const S xhat = (xi[j] - mean) * istd;
                        if (gc.requires_grad()) gc.grad()[j] += gi[j] * xhat;
                        if (bc.requires_grad()) bc.grad()[j] += gi[j];
                    }
                }
            }
        });
    }
    return out;
}

template <class S>
TensorT<S> transpose(TapeT<S>* tape, const TensorT<S>& x) {
    if (x.rank() != 2) throw std::invalid_argument("transpose requires rank-2 tensor");
    const std::size_t r = x.rows(), c = x.cols();
    auto out = TensorT<S>::zeros({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.value()[j * r + i] = x.value()[i * c + j];
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc, r, c]() mutable {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) xc.grad()[i * c + j] += oc.grad()[j * r + i];
        });
    }
    return out;
}

// Copy of rows [r0, r1).
template <class S>
TensorT<S> slice_rows(TapeT<S>* tape, const TensorT<S>& x, std::size_t r0, std::size_t r1) {
    if (r1 > x.rows() || r0 > r1) throw std::invalid_argument("slice_rows out of range");
    const std::size_t c = x.cols();
    auto out = TensorT<S>::zeros({r1 - r0, c});
    std::copy(x.value().begin() + r0 * c, x.value().begin() + r1 * c, out.value().begin());
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc, r0, c]() mutable {
            for (std::size_t i = 0; i < oc.size(); ++i) xc.grad()[r0 * c + i] += oc.grad()[i];
        });
    }
    return out;
}

template <class S>
TensorT<S> concat_rows(TapeT<S>* tape, const std::vector<TensorT<S>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows of nothing");
    const std::size_t c = parts[0].cols();
    std::size_t r = 0;
    for (const auto& p : parts) {
        if (p.cols() != c) throw std::invalid_argument("concat_rows column mismatch");
        r += p.rows();
    }
    auto out = TensorT<S>::zeros({r, c});
    std::size_t off = 0;
    bool needs = false;
    for (const auto& p : parts) {
        std::copy(p.value().begin(), p.value().end(), out.value().begin() + off);
        off += p.size();
        needs = needs || p.requires_grad();
    }
    if (tape && needs) {
        out.set_requires_grad(true);
        auto pc = parts;
        auto oc = out;
        tape->record([pc, oc]() mutable {
            std::size_t off = 0;
            for (auto& p : pc) {
                if (p.requires_grad())
                    for (std::size_t i = 0; i < p.size(); ++i) p.grad()[i] += oc.grad()[off + i];
                off += p.size();
            }
        });
    }
    return out;
}

// Copy of columns [c0, c1).
template <class S>
TensorT<S> slice_cols(TapeT<S>* tape, const TensorT<S>& x, std::size_t c0, std::size_t c1) {
    if (c1 > x.cols() || c0 > c1) throw std::invalid_argument("slice_cols out of range");
    const std::size_t r = x.rows(), c = x.cols(), w = c1 - c0;
    auto out = TensorT<S>::zeros({r, w});
    for (std::size_t i = 0; i < r; ++i)
        std::copy(x.value().begin() + i * c + c0, x.value().begin() + i * c + c1,
                  out.value().begin() + i * w);
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc, r, c, c0, w]() mutable {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < w; ++j) xc.grad()[i * c + c0 + j] += oc.grad()[i * w + j];
        });
    }
    return out;
}

template <class S>
TensorT<S> concat_cols(TapeT<S>* tape, const std::vector<TensorT<S>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols of nothing");
    const std::size_t r = parts[0].rows();
    std::size_t c = 0;
    for (const auto& p : parts) {
        if (p.rows() != r) throw std::invalid_argument("concat_cols row mismatch");
        c += p.cols();
    }
    auto out = TensorT<S>::zeros({r, c});
    std::size_t coff = 0;
    bool needs = false;
    for (const auto& p : parts) {
        const std::size_t w = p.cols();
        for (std::size_t i = 0; i < r; ++i)
            std::copy(p.value().begin() + i * w, p.value().begin() + (i + 1) * w,
                      out.value().begin() + i * c + coff);
        coff += w;
        needs = needs || p.requires_grad();
    }
    if (tape && needs) {
        out.set_requires_grad(true);
        auto pc = parts;
        auto oc = out;
        tape->record([pc, oc, r, c]() mutable {
            std::size_t coff = 0;
            for (auto& p : pc) {
                const std::size_t w = p.cols();
                if (p.requires_grad())
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                            p.grad()[i * w + j] += oc.grad()[i * c + coff + j];
                coff += w;
            }
        });
    }
    return out;
}

// Gather rows of `table` by integer id; pullback scatter-adds into the table.
template <class S>
TensorT<S> embedding_lookup(TapeT<S>* tape, const TensorT<S>& table, const std::vector<int>& ids) {
    const std::size_t v = table.rows(), d = table.cols();
    auto out = TensorT<S>::zeros({ids.size(), d});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const int id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw std::invalid_argument("embedding id " + std::to_string(id) + " out of range");
        std::copy(table.value().begin() + id * d, table.value().begin() + (id + 1) * d,
                  out.value().begin() + i * d);
    }
    if (detail::track(tape, {&table})) {
        out.set_requires_grad(true);
        auto tc = table, oc = out;
        tape->record([tc, oc, ids, d]() mutable {
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = 0; j < d; ++j) tc.grad()[ids[i] * d + j] += oc.grad()[i * d + j];
        });
    }
    return out;
}

template <class S>
TensorT<S> sum(TapeT<S>* tape, const TensorT<S>& x) {
    S acc = 0;
    for (S v : x.value()) acc += v;
    auto out = TensorT<S>::scalar(acc);
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            const S g = oc.grad()[0];
            for (std::size_t i = 0; i < xc.size(); ++i) xc.grad()[i] += g;
        });
    }
    return out;
}

template <class S>
TensorT<S> mean(TapeT<S>* tape, const TensorT<S>& x) {
    S acc = 0;
    for (S v : x.value()) acc += v;
    const S inv = S(1) / static_cast<S>(x.size());
    auto out = TensorT<S>::scalar(acc * inv);
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc, inv]() mutable {
            const S g = oc.grad()[0] * inv;
            for (std::size_t i = 0; i < xc.size(); ++i) xc.grad()[i] += g;
        });
    }
    return out;
}

// Mean over entries where keep[i] != 0 (mask is a constant).
template <class S>
TensorT<S> masked_mean(TapeT<S>* tape, const TensorT<S>& x, const std::vector<char>& keep) {
    if (keep.size() != x.size()) throw std::invalid_argument("masked_mean mask length mismatch");
    std::size_t n = 0;
    S acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (keep[i]) {
            acc += x.value()[i];
            ++n;
        }
    if (n == 0) throw std::invalid_argument("masked_mean over empty selection");
    const S inv = S(1) / static_cast<S>(n);
    auto out = TensorT<S>::scalar(acc * inv);
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc, keep, inv]() mutable {
            const S g = oc.grad()[0] * inv;
            for (std::size_t i = 0; i < xc.size(); ++i)
                if (keep[i]) xc.grad()[i] += g;
        });
    }
    return out;
}

// y = 1/sqrt(x), elementwise.
template <class S>
TensorT<S> rsqrt(TapeT<S>* tape, const TensorT<S>& x) {
    auto out = TensorT<S>::zeros(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (x.value()[i] <= S(0)) throw std::invalid_argument("rsqrt of non-positive value");
        out.value()[i] = S(1) / std::sqrt(x.value()[i]);
    }
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc]() mutable {
            for (std::size_t i = 0; i < oc.size(); ++i) {
                const S y = oc.value()[i];
                xc.grad()[i] += oc.grad()[i] * (S(-0.5) * y * y * y);
            }
        });
    }
    return out;
}

// Columns [0,2,4,...] -> first output; [1,3,5,...] -> second.
template <class S>
std::pair<TensorT<S>, TensorT<S>> deinterleave_cols(TapeT<S>* tape, const TensorT<S>& x) {
    const std::size_t r = x.rows(), c = x.cols();
    if (c % 2 != 0) throw std::invalid_argument("deinterleave_cols requires even column count");
    const std::size_t k = c / 2;
    auto even = TensorT<S>::zeros({r, k}), odd = TensorT<S>::zeros({r, k});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            even.value()[i * k + j] = x.value()[i * c + 2 * j];
            odd.value()[i * k + j] = x.value()[i * c + 2 * j + 1];
        }
    if (detail::track(tape, {&x})) {
        even.set_requires_grad(true);
        odd.set_requires_grad(true);
        auto xc = x, ec = even, dc = odd;
        tape->record([xc, ec, dc, r, c, k]() mutable {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    xc.grad()[i * c + 2 * j] += ec.grad()[i * k + j];
                    xc.grad()[i * c + 2 * j + 1] += dc.grad()[i * k + j];
                }
        });
    }
    return {even, odd};
}

template <class S>
TensorT<S> interleave_cols(TapeT<S>* tape, const TensorT<S>& even, const TensorT<S>& odd) {
    if (even.shape() != odd.shape()) throw std::invalid_argument("interleave_cols shape mismatch");
    const std::size_t r = even.rows(), k = even.cols(), c = 2 * k;
    auto out = TensorT<S>::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            out.value()[i * c + 2 * j] = even.value()[i * k + j];
            out.value()[i * c + 2 * j + 1] = odd.value()[i * k + j];
        }
    if (detail::track(tape, {&even, &odd})) {
        out.set_requires_grad(true);
        auto ec = even, dc = odd, oc = out;
        tape->record([ec, dc, oc, r, c, k]() mutable {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < k; ++j) {
                    if (ec.requires_grad()) ec.grad()[i * k + j] += oc.grad()[i * c + 2 * j];
                    if (dc.requires_grad()) dc.grad()[i * k + j] += oc.grad()[i * c + 2 * j + 1];
                }
        });
    }
    return out;
}

// Per-row categorical cross-entropy against integer targets, computed from
// logits with a fused log-sum-exp. Returns an [r x 1] tensor of losses.
template <class S>
TensorT<S> cross_entropy_rows(TapeT<S>* tape, const TensorT<S>& logits, const std::vector<int>& targets) {
    const std::size_t r = logits.rows(), c = logits.cols();
    if (targets.size() != r) throw std::invalid_argument("cross_entropy_rows target count mismatch");
    auto out = TensorT<S>::zeros({r, 1});
    std::vector<S> lse(r), mx(r);
    for (std::size_t i = 0; i < r; ++i) {
        const int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= c)
            throw std::invalid_argument("cross_entropy target id out of range");
        const S* li = logits.value().data() + i * c;
        S m = li[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, li[j]);
        S sum = 0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(li[j] - m);
        mx[i] = m;
        lse[i] = m + std::log(sum);
        out.value()[i] = lse[i] - li[t];
    }
    if (detail::track(tape, {&logits})) {
        out.set_requires_grad(true);
        auto lc = logits, oc = out;
        tape->record([lc, oc, targets, lse, r, c]() mutable {
            for (std::size_t i = 0; i < r; ++i) {
                const S g = oc.grad()[i];
                if (g == S(0)) continue;
                const S* li = lc.value().data() + i * c;
                S* gi = lc.grad().data() + i * c;
                for (std::size_t j = 0; j < c; ++j) gi[j] += g * std::exp(li[j] - lse[i]);
                gi[targets[i]] -= g;
            }
        });
    }
    return out;
}

// Word-wise binary cross-entropy summed over the whole dictionary row
// (one-vs-rest form); probabilities from a row softmax. Returns [r x 1].
template <class S>
TensorT<S> binary_cross_entropy_rows(TapeT<S>* tape, const TensorT<S>& logits,
                                     const std::vector<int>& targets) {
    auto probs = softmax_rows(tape, logits);
    const std::size_t r = probs.rows(), c = probs.cols();
    if (targets.size() != r) throw std::invalid_argument("binary_cross_entropy target count mismatch");
    auto out = TensorT<S>::zeros({r, 1});
    const S eps = S(1e-9);
    for (std::size_t i = 0; i < r; ++i) {
        const S* pi = probs.value().data() + i * c;
        S acc = 0;
        for (std::size_t j = 0; j < c; ++j) {
            const S p = std::min(std::max(pi[j], eps), S(1) - eps);
            if (static_cast<int>(j) == targets[i])
                acc -= std::log(p);
            else
                acc -= std::log(S(1) - p);
        }
        out.value()[i] = acc;
    }
    if (detail::track(tape, {&probs})) {
        out.set_requires_grad(true);
        auto pc = probs, oc = out;
        tape->record([pc, oc, targets, r, c, eps]() mutable {
            for (std::size_t i = 0; i < r; ++i) {
                const S g = oc.grad()[i];
                if (g == S(0)) continue;
                const S* pi = pc.value().data() + i * c;
                S* gi = pc.grad().data() + i * c;
                for (std::size_t j = 0; j < c; ++j) {
                    const S p = std::min(std::max(pi[j], eps), S(1) - eps);
                    if (static_cast<int>(j) == targets[i])
                        gi[j] += g * (-S(1) / p);
                    else
                        gi[j] += g * (S(1) / (S(1) - p));
                }
            }
        });
    }
    return out;
}

// Inverted dropout; the mask is drawn once and treated as a constant.
template <class S>
TensorT<S> dropout(TapeT<S>* tape, const TensorT<S>& x, double rate, Rng& rng, bool training) {
    if (!training || rate <= 0.0) return x;
    if (rate >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
    auto mask = std::make_shared<std::vector<S>>(x.size());
    const S keep_inv = S(1.0 / (1.0 - rate));
    for (auto& m : *mask) m = rng.uniform() < rate ? S(0) : keep_inv;
    auto out = TensorT<S>::zeros(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out.value()[i] = x.value()[i] * (*mask)[i];
    if (detail::track(tape, {&x})) {
        out.set_requires_grad(true);
        auto xc = x, oc = out;
        tape->record([xc, oc, mask]() mutable {
            for (std::size_t i = 0; i < oc.size(); ++i) xc.grad()[i] += oc.grad()[i] * (*mask)[i];
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parameter groups and optimizer
// ---------------------------------------------------------------------------

template <class S>
struct ParamGroupT {
    std::string name;
    S learning_rate = S(0);
    std::vector<TensorT<S>> params;
};

using ParamGroup = ParamGroupT<float>;

enum class OptKind { sgd, momentum, adam };

inline OptKind opt_kind_from_string(const std::string& s) {
    if (s == "sgd") return OptKind::sgd;
    if (s == "momentum") return OptKind::momentum;
    if (s == "adam") return OptKind::adam;
    throw std::invalid_argument("unknown optimizer kind: " + s);
}

// Plain SGD update p <- p - lr * grad, with optional momentum / adam variants
// behind the same interface. Gradients are zeroed after the step.
template <class S>
class OptimizerT {
public:
    explicit OptimizerT(OptKind kind = OptKind::sgd, S momentum = S(0.9), S beta1 = S(0.9),
                        S beta2 = S(0.999), S eps = S(1e-8))
        : kind_(kind), momentum_(momentum), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<ParamGroupT<S>>& groups) {
        ++t_;
        for (auto& g : groups) {
            for (auto& p : g.params) {
                if (!p.has_grad()) {
                    throw std::runtime_error("parameter '" + (p.name().empty() ? "<unnamed>" : p.name()) +
                                             "' has no gradient; run backward first");
                }
                update(p, g.learning_rate);
                p.zero_grad();
            }
        }
    }

private:
    void update(TensorT<S>& p, S lr) {
        auto& v = p.value();
        auto& gr = p.grad();
        switch (kind_) {
            case OptKind::sgd:
                for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * gr[i];
                break;
            case OptKind::momentum: {
                auto& m = state(p, 0);
                for (std::size_t i = 0; i < v.size(); ++i) {
                    m[i] = momentum_ * m[i] + gr[i];
                    v[i] -= lr * m[i];
                }
                break;
            }
            case OptKind::adam: {
                auto& m = state(p, 0);
                auto& u = state(p, 1);
                const S bc1 = S(1) - std::pow(beta1_, static_cast<S>(t_));
                const S bc2 = S(1) - std::pow(beta2_, static_cast<S>(t_));
                for (std::size_t i = 0; i < v.size(); ++i) {
                    m[i] = beta1_ * m[i] + (S(1) - beta1_) * gr[i];
                    u[i] = beta2_ * u[i] + (S(1) - beta2_) * gr[i] * gr[i];
                    v[i] -= lr * (m[i] / bc1) / (std::sqrt(u[i] / bc2) + eps_);
                }
                break;
            }
        }
    }

    std::vector<S>& state(const TensorT<S>& p, int slot) {
        auto& s = state_[{p.storage_id(), slot}];
        if (s.size() != p.size()) s.assign(p.size(), S(0));
        return s;
    }

    OptKind kind_;
    S momentum_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::map<std::pair<const void*, int>, std::vector<S>> state_;
};

using Optimizer = OptimizerT<float>;

// Convenience wrapper matching the plain-SGD contract.
template <class S>
void sgd_step(std::vector<ParamGroupT<S>>& groups) {
    for (auto& g : groups) {
        for (auto& p : g.params) {
            if (!p.has_grad()) {
                throw std::runtime_error("parameter '" + (p.name().empty() ? "<unnamed>" : p.name()) +
                                         "' has no gradient; run backward first");
            }
            for (std::size_t i = 0; i < p.size(); ++i) p.value()[i] -= g.learning_rate * p.grad()[i];
            p.zero_grad();
        }
    }
}

// Scales all gradients so their global L2 norm is at most max_norm.
template <class S>
S clip_global_norm(std::vector<ParamGroupT<S>>& groups, S max_norm) {
    double sq = 0;
    for (auto& g : groups)
        for (auto& p : g.params)
            if (p.has_grad())
                for (S v : p.grad()) sq += static_cast<double>(v) * static_cast<double>(v);
    const S norm = static_cast<S>(std::sqrt(sq));
    if (norm > max_norm && norm > S(0)) {
        const S f = max_norm / norm;
        for (auto& g : groups)
            for (auto& p : g.params)
                if (p.has_grad())
                    for (auto& v : p.grad()) v *= f;
    }
    return norm;
}

// Uniform init scaled by 1/sqrt(fan_in).
template <class S>
void init_uniform_fan_in(TensorT<S>& t, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.value()) v = static_cast<S>(rng.uniform(-bound, bound));
}

template <class S>
bool all_finite(const TensorT<S>& t) {
    for (S v : t.value())
        if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
}

}  // namespace semcom::core
