#pragma once

// Minimal dense tensor with reverse-mode differentiation. Row-major
// contiguous storage, trailing-dimension broadcasting, tape-free graph:
// each op output holds shared_ptrs to its inputs plus a backprop closure,
// and backward() walks the subgraph in reverse creation order.
//
// f32 is the working precision; f64 exists for gradcheck and tests.
// Any op that produces a non-finite value throws NumericError.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "gsu/common.hpp"
#include "gsu/kernels.hpp"

namespace gsu::ten {

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (size_t i = 0; i < s.size(); ++i) os << s[i] << (i + 1 < s.size() ? "," : "");
    os << ')';
    return os.str();
}

// Broadcast shape under trailing-dimension alignment; throws with both
// shapes in the message on mismatch.
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    Shape out(std::max(a.size(), b.size()));
    for (size_t i = 0; i < out.size(); ++i) {
        int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1)
            throw Error("shape mismatch: cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        out[out.size() - 1 - i] = std::max(da, db);
    }
    return out;
}

inline uint64_t next_node_seq() {
    static std::atomic<uint64_t> counter{0};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

// Grad recording mode (thread-local).
bool grad_enabled();
void set_grad_enabled(bool on);

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(grad_enabled()) { set_grad_enabled(false); }
    ~NoGradGuard() { set_grad_enabled(prev); }
};

template <class T>
struct Node {
    Shape shape;
    std::shared_ptr<std::vector<T>> val;  // shared so reshape can alias
    std::vector<T> grad;                  // lazily sized
    bool requires_grad = false;
    bool leaf = true;
    uint64_t seq = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;

    int64_t numel() const { return numel_of(shape); }
    void ensure_grad() {
        if (grad.size() != static_cast<size_t>(numel())) grad.assign(numel(), T(0));
    }
};

template <class T>
void ensure_all_finite(const std::vector<T>& v, const char* op) {
    for (const T& x : v)
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
}

template <class T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

    static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false) {
        if (numel_of(shape) != static_cast<int64_t>(data.size()))
            throw Error("tensor data length " + std::to_string(data.size()) +
                        " does not match shape " + shape_str(shape));
        ensure_all_finite(data, "tensor construction");
        auto n = std::make_shared<Node<T>>();
        n->shape = std::move(shape);
        n->val = std::make_shared<std::vector<T>>(std::move(data));
        n->requires_grad = requires_grad;
        n->seq = next_node_seq();
        return Tensor(std::move(n));
    }
    static Tensor full(Shape shape, T v, bool requires_grad = false) {
        return from(std::move(shape), std::vector<T>(numel_of(shape), v), requires_grad);
    }
    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), T(0), requires_grad);
    }
    static Tensor ones(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), T(1), requires_grad);
    }
    static Tensor scalar(T v) { return from({1}, {v}); }

    bool valid() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t rank() const { return static_cast<int64_t>(node_->shape.size()); }
    int64_t dim(int64_t i) const { return node_->shape[i]; }
    int64_t numel() const { return node_->numel(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::span<T> data() { return {node_->val->data(), node_->val->size()}; }
    std::span<const T> data() const { return {node_->val->data(), node_->val->size()}; }

    T item() const {
        if (numel() != 1) throw Error("item() on non-scalar tensor " + shape_str(shape()));
        return (*node_->val)[0];
    }

    const std::vector<T>& grad() const { return node_->grad; }
    void zero_grad() { node_->grad.assign(numel(), T(0)); }
    void drop_grad() { node_->grad.clear(); }

    std::shared_ptr<Node<T>>& node() { return node_; }
    const std::shared_ptr<Node<T>>& node() const { return node_; }

private:
    std::shared_ptr<Node<T>> node_;
};

// Low-level op constructor. Public so tests can register deliberately
// wrong rules; backprop receives the output node with grad populated.
template <class T>
Tensor<T> make_op(Shape shape, std::vector<T> val, const char* opname,
                  std::vector<Tensor<T>> parents, std::function<void(Node<T>&)> backprop,
                  bool check_finite = true) {
    if (numel_of(shape) != static_cast<int64_t>(val.size()))
        throw Error(std::string(opname) + ": output size mismatch");
    if (check_finite) ensure_all_finite(val, opname);
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->val = std::make_shared<std::vector<T>>(std::move(val));
    n->leaf = false;
    n->seq = next_node_seq();
    bool need = false;
    if (grad_enabled())
        for (auto& p : parents) need = need || p.requires_grad();
    if (need) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(p.node());
        n->backprop = std::move(backprop);
    }
    return Tensor<T>(std::move(n));
}

// ---------------------------------------------------------------------------
// Broadcast iteration: odometer over the output index space giving flat
// offsets into both (possibly broadcast) inputs. Deterministic order.

struct Bcast2 {
    std::vector<int64_t> dims, sa, sb;
    int64_t n = 1;

    Bcast2(const Shape& a, const Shape& b, const Shape& out) {
        dims.assign(out.begin(), out.end());
        n = numel_of(out);
        sa = strides_for(a, out);
        sb = strides_for(b, out);
    }

    static std::vector<int64_t> strides_for(const Shape& s, const Shape& out) {
        std::vector<int64_t> full(out.size(), 0);
        int64_t stride = 1;
        for (size_t i = 0; i < s.size(); ++i) {
            size_t si = s.size() - 1 - i;
            size_t oi = out.size() - 1 - i;
            full[oi] = (s[si] == 1 && out[oi] != 1) ? 0 : stride;
            stride *= s[si];
        }
        return full;
    }

    template <class F>
    void for_each(F&& f) const {
        size_t r = dims.size();
        std::vector<int64_t> idx(r, 0);
        int64_t oa = 0, ob = 0;
        for (int64_t i = 0; i < n; ++i) {
            f(i, oa, ob);
            for (size_t dd = r; dd-- > 0;) {
                ++idx[dd];
                oa += sa[dd];
                ob += sb[dd];
                if (idx[dd] < dims[dd]) break;
                oa -= sa[dd] * dims[dd];
                ob -= sb[dd] * dims[dd];
                idx[dd] = 0;
            }
        }
    }
};

// True when `b` equals the trailing suffix of `out`, so the op tiles as
// contiguous chunks of b.numel().
inline bool is_suffix_shape(const Shape& b, const Shape& out) {
    if (b.size() > out.size()) return false;
    for (size_t i = 0; i < b.size(); ++i)
        if (b[b.size() - 1 - i] != out[out.size() - 1 - i]) return false;
    return true;
}

enum class BinKind { Add, Sub, Mul, Div };

template <class T>
void binary_forward(BinKind k, const T* a, const T* b, T* o, int64_t n) {
    const auto& kt = kern::active<T>();
    switch (k) {
        case BinKind::Add: kt.add(a, b, o, n); break;
        case BinKind::Sub: kt.sub(a, b, o, n); break;
        case BinKind::Mul: kt.mul(a, b, o, n); break;
        case BinKind::Div: kt.div(a, b, o, n); break;
    }
}

template <class T>
T binary_scalar(BinKind k, T a, T b) {
    switch (k) {
        case BinKind::Add: return a + b;
        case BinKind::Sub: return a - b;
        case BinKind::Mul: return a * b;
        default: return a / b;
    }
}

template <class T>
const char* binary_name(BinKind k) {
    switch (k) {
        case BinKind::Add: return "add";
        case BinKind::Sub: return "sub";
        case BinKind::Mul: return "mul";
        default: return "div";
    }
}

template <class T>
Tensor<T> binary_op(BinKind k, const Tensor<T>& a, const Tensor<T>& b) {
    Shape out_shape = broadcast_shape(a.shape(), b.shape());
    int64_t n = numel_of(out_shape);
    std::vector<T> out(n);
    const T* pa = a.data().data();
    const T* pb = b.data().data();

    bool same = a.shape() == b.shape();
    if (same) {
        binary_forward(k, pa, pb, out.data(), n);
    } else if (is_suffix_shape(b.shape(), out_shape) && a.shape() == out_shape) {
        int64_t bn = b.numel();
        for (int64_t off = 0; off < n; off += bn)
            binary_forward(k, pa + off, pb, out.data() + off, bn);
    } else {
        Bcast2 it(a.shape(), b.shape(), out_shape);
        it.for_each([&](int64_t i, int64_t oa, int64_t ob) {
            out[i] = binary_scalar(k, pa[oa], pb[ob]);
        });
    }

    auto an = a.node();
    auto bn_ = b.node();
    return make_op<T>(
        out_shape, std::move(out), binary_name<T>(k), {a, b}, [k, an, bn_](Node<T>& o) {
            const T* g = o.grad.data();
            const auto& kt = kern::active<T>();
            auto backprop_side = [&](const std::shared_ptr<Node<T>>& tgt, bool is_a) {
                if (!tgt->requires_grad) return;
                tgt->ensure_grad();
                T* dst = tgt->grad.data();
                const T* va = an->val->data();
                const T* vb = bn_->val->data();
                bool same_shape = tgt->shape == o.shape;
                if (same_shape && an->shape == bn_->shape) {
                    int64_t n = o.numel();
                    switch (k) {
                        case BinKind::Add: kt.saxpy(T(1), g, dst, n); return;
                        case BinKind::Sub: kt.saxpy(is_a ? T(1) : T(-1), g, dst, n); return;
                        case BinKind::Mul: kt.madd(g, is_a ? vb : va, dst, n); return;
                        case BinKind::Div:
                            if (is_a) {
                                for (int64_t i = 0; i < n; ++i) dst[i] += g[i] / vb[i];
                            } else {
                                for (int64_t i = 0; i < n; ++i)
                                    dst[i] -= g[i] * va[i] / (vb[i] * vb[i]);
                            }
                            return;
                    }
                }
                Bcast2 it(an->shape, bn_->shape, o.shape);
                it.for_each([&](int64_t i, int64_t oa, int64_t ob) {
                    T gi = g[i];
                    switch (k) {
                        case BinKind::Add: dst[is_a ? oa : ob] += gi; break;
                        case BinKind::Sub: dst[is_a ? oa : ob] += is_a ? gi : -gi; break;
                        case BinKind::Mul: dst[is_a ? oa : ob] += gi * (is_a ? vb[ob] : va[oa]); break;
                        case BinKind::Div:
                            if (is_a)
                                dst[oa] += gi / vb[ob];
                            else
                                dst[ob] -= gi * va[oa] / (vb[ob] * vb[ob]);
                            break;
                    }
                });
            };
            backprop_side(an, true);
            backprop_side(bn_, false);
        });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) { return binary_op(BinKind::Add, a, b); }
template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) { return binary_op(BinKind::Sub, a, b); }
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) { return binary_op(BinKind::Mul, a, b); }
template <class T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) { return binary_op(BinKind::Div, a, b); }

// Tensor-scalar forms.
template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
    std::vector<T> out(a.numel());
    kern::active<T>().add_s(a.data().data(), s, out.data(), a.numel());
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(out), "add_scalar", {a}, [an](Node<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        kern::active<T>().saxpy(T(1), o.grad.data(), an->grad.data(), o.numel());
    });
}

template <class T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
    std::vector<T> out(a.numel());
    kern::active<T>().mul_s(a.data().data(), s, out.data(), a.numel());
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(out), "mul_scalar", {a}, [an, s](Node<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        kern::active<T>().saxpy(s, o.grad.data(), an->grad.data(), o.numel());
    });
}

template <class T>
Tensor<T> sub_scalar_rev(const Tensor<T>& a, T s) {  // s - a
    std::vector<T> out(a.numel());
    kern::active<T>().rsub_s(a.data().data(), s, out.data(), a.numel());
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(out), "rsub_scalar", {a}, [an](Node<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        kern::active<T>().saxpy(T(-1), o.grad.data(), an->grad.data(), o.numel());
    });
}

template <class T>
Tensor<T> div_scalar(const Tensor<T>& a, T s) {  // a / s
    std::vector<T> out(a.numel());
    kern::active<T>().div_s(a.data().data(), s, out.data(), a.numel());
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(out), "div_scalar", {a}, [an, s](Node<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        T* dst = an->grad.data();
        const T* g = o.grad.data();
        for (int64_t i = 0; i < o.numel(); ++i) dst[i] += g[i] / s;
    });
}

template <class T>
Tensor<T> neg(const Tensor<T>& a) { return mul_scalar(a, T(-1)); }

// Operators (tensor-tensor and tensor-scalar).
template <class T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <class T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <class T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <class T> Tensor<T> operator/(const Tensor<T>& a, const Tensor<T>& b) { return div(a, b); }
template <class T> Tensor<T> operator+(const Tensor<T>& a, T s) { return add_scalar(a, s); }
template <class T> Tensor<T> operator+(T s, const Tensor<T>& a) { return add_scalar(a, s); }
template <class T> Tensor<T> operator-(const Tensor<T>& a, T s) { return add_scalar(a, -s); }
template <class T> Tensor<T> operator-(T s, const Tensor<T>& a) { return sub_scalar_rev(a, s); }
template <class T> Tensor<T> operator*(const Tensor<T>& a, T s) { return mul_scalar(a, s); }
template <class T> Tensor<T> operator*(T s, const Tensor<T>& a) { return mul_scalar(a, s); }
template <class T> Tensor<T> operator/(const Tensor<T>& a, T s) { return div_scalar(a, s); }
template <class T> Tensor<T> operator-(const Tensor<T>& a) { return neg(a); }

// Unary ops.
template <class T>
Tensor<T> silu(const Tensor<T>& a) {
    int64_t n = a.numel();
    std::vector<T> out(n);
    const T* pa = a.data().data();
    for (int64_t i = 0; i < n; ++i) {
        T sig = T(1) / (T(1) + std::exp(-pa[i]));
        out[i] = pa[i] * sig;
    }
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(out), "silu", {a}, [an](Node<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        const T* x = an->val->data();
        const T* g = o.grad.data();
        T* dst = an->grad.data();
        for (int64_t i = 0; i < o.numel(); ++i) {
            T sig = T(1) / (T(1) + std::exp(-x[i]));
            dst[i] += g[i] * sig * (T(1) + x[i] * (T(1) - sig));
        }
    });
}

template <class T>
Tensor<T> log(const Tensor<T>& a) {
    int64_t n = a.numel();
    std::vector<T> out(n);
    const T* pa = a.data().data();
    for (int64_t i = 0; i < n; ++i) out[i] = std::log(pa[i]);
    auto an = a.node();
    return make_op<T>(a.shape(), std::move(out), "log", {a}, [an](Node<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        const T* x = an->val->data();
        const T* g = o.grad.data();
        T* dst = an->grad.data();
        for (int64_t i = 0; i < o.numel(); ++i) dst[i] += g[i] / x[i];
    });
}

// Non-differentiating clamp; for sampler-side stabilization.
template <class T>
Tensor<T> clamp_values(const Tensor<T>& a, T lo, T hi) {
    std::vector<T> out(a.numel());
    kern::active<T>().clamp(a.data().data(), lo, hi, out.data(), a.numel());
    return Tensor<T>::from(a.shape(), std::move(out));
}

// Data movement.
template <class T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    if (numel_of(shape) != a.numel())
        throw Error("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->val = a.node()->val;  // aliases parent storage
    n->leaf = false;
    n->seq = next_node_seq();
    if (grad_enabled() && a.requires_grad()) {
        auto an = a.node();
        n->requires_grad = true;
        n->parents = {an};
        n->backprop = [an](Node<T>& o) {
            an->ensure_grad();
            kern::active<T>().saxpy(T(1), o.grad.data(), an->grad.data(), o.numel());
        };
    }
    return Tensor<T>(std::move(n));
}

template <class T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<int64_t>& perm) {
    int64_t r = a.rank();
    if (static_cast<int64_t>(perm.size()) != r) throw Error("permute: rank mismatch");
    Shape out_shape(r);
    for (int64_t i = 0; i < r; ++i) out_shape[i] = a.dim(perm[i]);

    std::vector<int64_t> in_strides(r, 1);
    for (int64_t i = r - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * a.dim(i + 1);
    std::vector<int64_t> gather_stride(r);
    for (int64_t i = 0; i < r; ++i) gather_stride[i] = in_strides[perm[i]];

    int64_t n = a.numel();
    std::vector<T> out(n);
    const T* pa = a.data().data();
    std::vector<int64_t> idx(r, 0);
    int64_t src = 0;
    for (int64_t i = 0; i < n; ++i) {
        out[i] = pa[src];
        for (int64_t d = r; d-- > 0;) {
            ++idx[d];
            src += gather_stride[d];
            if (idx[d] < out_shape[d]) break;
            src -= gather_stride[d] * out_shape[d];
            idx[d] = 0;
        }
    }

    auto an = a.node();
    return make_op<T>(
        out_shape, std::move(out), "permute", {a},
        [an, out_shape, gather_stride](Node<T>& o) {
            if (!an->requires_grad) return;
            an->ensure_grad();
            int64_t r = static_cast<int64_t>(out_shape.size());
            const T* g = o.grad.data();
            T* dst = an->grad.data();
            std::vector<int64_t> idx(r, 0);
            int64_t src = 0;
            for (int64_t i = 0; i < o.numel(); ++i) {
                dst[src] += g[i];
                for (int64_t d = r; d-- > 0;) {
                    ++idx[d];
                    src += gather_stride[d];
                    if (idx[d] < out_shape[d]) break;
                    src -= gather_stride[d] * out_shape[d];
                    idx[d] = 0;
                }
            }
        },
        /*check_finite=*/false);
}

template <class T>
Tensor<T> concat(const std::vector<Tensor<T>>& xs, int64_t axis) {
    if (xs.empty()) throw Error("concat: empty input list");
    int64_t r = xs[0].rank();
    if (axis < 0) axis += r;
    check(axis >= 0 && axis < r, "concat: axis out of range");
    Shape out_shape = xs[0].shape();
    int64_t axis_total = 0;
    for (const auto& x : xs) {
        if (x.rank() != r) throw Error("concat: rank mismatch");
        for (int64_t d = 0; d < r; ++d)
            if (d != axis && x.dim(d) != out_shape[d])
                throw Error("concat: shape mismatch " + shape_str(x.shape()) + " vs " +
                            shape_str(out_shape));
        axis_total += x.dim(axis);
    }
    out_shape[axis] = axis_total;

    int64_t outer = 1, inner = 1;
    for (int64_t d = 0; d < axis; ++d) outer *= out_shape[d];
    for (int64_t d = axis + 1; d < r; ++d) inner *= out_shape[d];

    std::vector<T> out(numel_of(out_shape));
    int64_t out_row = axis_total * inner;
    int64_t col_off = 0;
    for (const auto& x : xs) {
        int64_t w = x.dim(axis) * inner;
        const T* px = x.data().data();
        for (int64_t i = 0; i < outer; ++i)
            std::memcpy(out.data() + i * out_row + col_off, px + i * w, sizeof(T) * w);
        col_off += w;
    }

    std::vector<std::shared_ptr<Node<T>>> pnodes;
    std::vector<int64_t> widths;
    for (const auto& x : xs) {
        pnodes.push_back(x.node());
        widths.push_back(x.dim(axis) * inner);
    }
    return make_op<T>(
        out_shape, std::move(out), "concat", xs,
        [pnodes, widths, outer, out_row](Node<T>& o) {
            const T* g = o.grad.data();
            int64_t col_off = 0;
            for (size_t pi = 0; pi < pnodes.size(); ++pi) {
                auto& p = pnodes[pi];
                int64_t w = widths[pi];
                if (p->requires_grad) {
                    p->ensure_grad();
                    T* dst = p->grad.data();
                    for (int64_t i = 0; i < outer; ++i)
                        kern::active<T>().saxpy(T(1), g + i * out_row + col_off, dst + i * w, w);
                }
                col_off += w;
            }
        },
        /*check_finite=*/false);
}

template <class T>
Tensor<T> concat2(const Tensor<T>& a, const Tensor<T>& b, int64_t axis) {
    return concat<T>({a, b}, axis);
}

// Row gather from a (R, C) table; backward scatter-adds.
template <class T>
Tensor<T> gather_rows(const Tensor<T>& table, const std::vector<int64_t>& indices) {
    check(table.rank() == 2, "gather_rows: table must be rank 2");
    int64_t rows = table.dim(0), cols = table.dim(1);
    for (int64_t idx : indices)
        check(idx >= 0 && idx < rows, "gather_rows: index out of range");
    int64_t L = static_cast<int64_t>(indices.size());
    std::vector<T> out(L * cols);
    const T* pt = table.data().data();
    for (int64_t i = 0; i < L; ++i)
        std::memcpy(out.data() + i * cols, pt + indices[i] * cols, sizeof(T) * cols);
    auto tn = table.node();
    return make_op<T>(
        {L, cols}, std::move(out), "gather_rows", {table},
        [tn, indices, cols](Node<T>& o) {
            if (!tn->requires_grad) return;
            tn->ensure_grad();
            const T* g = o.grad.data();
            T* dst = tn->grad.data();
            for (size_t i = 0; i < indices.size(); ++i)
                kern::active<T>().saxpy(T(1), g + i * cols, dst + indices[i] * cols, cols);
        },
        /*check_finite=*/false);
}

// Reductions (sequential accumulation; deterministic).
template <class T>
Tensor<T> sum_all(const Tensor<T>& a) {
    const T* pa = a.data().data();
    T s = 0;
    for (int64_t i = 0; i < a.numel(); ++i) s += pa[i];
    auto an = a.node();
    return make_op<T>({1}, {s}, "sum", {a}, [an](Node<T>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        T g = o.grad[0];
        T* dst = an->grad.data();
        for (int64_t i = 0; i < an->numel(); ++i) dst[i] += g;
    });
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& a) {
    return div_scalar(sum_all(a), static_cast<T>(a.numel()));
}

// backward: reverse-creation-order traversal of the recorded subgraph.
template <class T>
void backward(Tensor<T>& loss) {
    if (loss.numel() != 1) throw Error("backward: loss must be scalar, got " + shape_str(loss.shape()));
    if (!loss.requires_grad()) throw Error("backward: loss does not require grad");

    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<Node<T>*> stack{loss.node().get()};
    while (!stack.empty()) {
        Node<T>* n = stack.back();
        stack.pop_back();
        if (!n->requires_grad || seen.count(n)) continue;
        seen.insert(n);
        order.push_back(n);
        for (auto& p : n->parents) stack.push_back(p.get());
    }
    std::sort(order.begin(), order.end(),
              [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

    loss.node()->ensure_grad();
    loss.node()->grad[0] = T(1);
    for (Node<T>* n : order) {
        if (n->backprop && !n->grad.empty()) n->backprop(*n);
    }
}

}  // namespace gsu::ten
