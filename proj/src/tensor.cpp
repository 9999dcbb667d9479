#include "t4dr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "t4dr/error.hpp"
#include "t4dr/kernels.hpp"

namespace t4dr {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
}

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;  // set only for op outputs

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
    }
};

class TapeImpl {
public:
    std::vector<std::shared_ptr<Node>> order;
};

namespace {
thread_local TapeImpl* g_tape = nullptr;
thread_local bool g_grad_enabled = true;
}  // namespace

}  // namespace detail

using detail::Node;

// ----- Tensor basics ---------------------------------------------------------

static std::shared_ptr<Node> make_leaf(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        throw ContractViolation("tensor data size " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    return n;
}

Tensor Tensor::zeros(Shape shape) {
    auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0)));
}

Tensor Tensor::full(Shape shape, double value) {
    auto n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(static_cast<size_t>(n), value)));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
    return Tensor(make_leaf(std::move(shape), std::move(data)));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::randn(Shape shape, Rng& rng, double stdev) {
    auto n = shape_numel(shape);
    std::vector<double> d(static_cast<size_t>(n));
    for (auto& v : d) v = rng.normal() * stdev;
    return from(std::move(shape), std::move(d));
}

const Shape& Tensor::shape() const { return n_->shape; }
int Tensor::rank() const { return static_cast<int>(n_->shape.size()); }
int64_t Tensor::dim(int i) const { return n_->shape[static_cast<size_t>(i)]; }
int64_t Tensor::numel() const { return n_->numel(); }
const std::vector<double>& Tensor::data() const { return n_->data; }

double Tensor::item() const {
    if (numel() != 1) throw ContractViolation("item() on non-scalar tensor " + shape_str(shape()));
    return n_->data[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
    const Shape& s = n_->shape;
    if (idx.size() != s.size()) throw ContractViolation("index rank mismatch");
    int64_t off = 0;
    size_t k = 0;
    for (int64_t i : idx) {
        off = off * s[k] + i;
        ++k;
    }
    return n_->data[static_cast<size_t>(off)];
}

Tensor& Tensor::set_requires_grad(bool v) {
    if (n_->backward) throw ContractViolation("requires_grad may only be toggled on leaf tensors");
    n_->requires_grad = v;
    return *this;
}

bool Tensor::requires_grad() const { return n_->requires_grad; }

const std::vector<double>& Tensor::grad() const { return n_->grad; }

void Tensor::zero_grad() { std::fill(n_->grad.begin(), n_->grad.end(), 0.0); }

void Tensor::add_to_grad(const std::vector<double>& g) {
    if (g.size() != n_->data.size()) throw ContractViolation("grad size mismatch");
    n_->ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) n_->grad[i] += g[i];
}

Tensor Tensor::detached() const { return from(n_->shape, n_->data); }

std::vector<double>& Tensor::mutable_data() {
    if (n_->backward) throw ContractViolation("cannot mutate an op output");
    return n_->data;
}

// ----- Tape ------------------------------------------------------------------

Tape::Tape() : impl_(std::make_unique<detail::TapeImpl>()) {}
Tape::~Tape() = default;
size_t Tape::size() const { return impl_->order.size(); }

TapeScope::TapeScope(Tape& tape) : prev_(detail::g_tape) { detail::g_tape = tape.impl(); }
TapeScope::~TapeScope() { detail::g_tape = prev_; }

NoGradScope::NoGradScope() : prev_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
NoGradScope::~NoGradScope() { detail::g_grad_enabled = prev_; }

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw ContractViolation("backward requires a scalar loss, got " +
                                (loss.defined() ? shape_str(loss.shape()) : std::string("<empty>")));
    Node* root = loss.node().get();
    if (!root->backward)
        throw ContractViolation("loss is not an op output recorded on a tape");
    // intermediates restart from zero each call; leaves accumulate
    for (auto& n : impl_->order) {
        if (n->backward) std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
    root->ensure_grad();
    root->grad[0] = 1.0;
    for (auto it = impl_->order.rbegin(); it != impl_->order.rend(); ++it) {
        Node& n = **it;
        if (n.backward && !n.grad.empty()) n.backward(n);
    }
}

// ----- op plumbing ------------------------------------------------------------

static bool recording() { return detail::g_tape != nullptr && detail::g_grad_enabled; }

static Tensor make_op(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                      std::function<void(Node&)> bw) {
    auto out = std::make_shared<Node>();
    out->shape = std::move(shape);
    out->data = std::move(data);
    if (recording()) {
        bool needs = false;
        for (const auto& p : parents) needs |= p.requires_grad();
        if (needs) {
            out->requires_grad = true;
            out->parents.reserve(parents.size());
            for (auto& p : parents) out->parents.push_back(p.node());
            out->backward = std::move(bw);
            detail::g_tape->order.push_back(out);
        }
    }
    return Tensor(out);
}

static void accumulate(Node& dst, const std::vector<double>& g) {
    dst.ensure_grad();
    for (size_t i = 0; i < g.size(); ++i) dst.grad[i] += g[i];
}

static void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ContractViolation(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

// ----- ops --------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ContractViolation("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
    int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(static_cast<size_t>(m * n));
    kern::matmul_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    return make_op({m, n}, std::move(out), {a, b}, [m, k, n](Node& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        if (pa.requires_grad) {
            std::vector<double> ga(static_cast<size_t>(m * k));
            kern::matmul_nt(o.grad.data(), pb.data.data(), ga.data(), m, n, k);
            accumulate(pa, ga);
        }
        if (pb.requires_grad) {
            std::vector<double> gb(static_cast<size_t>(k * n));
            kern::matmul_tn(pa.data.data(), o.grad.data(), gb.data(), m, k, n);
            accumulate(pb, gb);
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    bool bias = (b.rank() == 1 && a.rank() >= 1 && a.dim(a.rank() - 1) == b.dim(0) &&
                 a.shape() != b.shape());
    if (!bias) check_same_shape("add", a, b);
    std::vector<double> out(a.data());
    int64_t n = a.numel();
    if (bias) {
        int64_t w = b.dim(0);
        for (int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i)] += b.data()[static_cast<size_t>(i % w)];
    } else {
        kern::map_binary(a.data().data(), b.data().data(), out.data(), n,
                         [](double x, double y) { return x + y; });
    }
    return make_op(a.shape(), std::move(out), {a, b}, [bias](Node& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        if (pa.requires_grad) accumulate(pa, o.grad);
        if (pb.requires_grad) {
            if (bias) {
                pb.ensure_grad();
                int64_t w = pb.numel();
                int64_t n = o.numel();
                for (int64_t i = 0; i < n; ++i) pb.grad[static_cast<size_t>(i % w)] += o.grad[static_cast<size_t>(i)];
            } else {
                accumulate(pb, o.grad);
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    std::vector<double> out(a.numel() ? static_cast<size_t>(a.numel()) : 0);
    kern::map_binary(a.data().data(), b.data().data(), out.data(), a.numel(),
                     [](double x, double y) { return x - y; });
    return make_op(a.shape(), std::move(out), {a, b}, [](Node& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        if (pa.requires_grad) accumulate(pa, o.grad);
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (size_t i = 0; i < o.grad.size(); ++i) pb.grad[i] -= o.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    bool a_scalar = a.numel() == 1 && b.numel() != 1;
    bool b_scalar = b.numel() == 1 && a.numel() != 1;
    if (!a_scalar && !b_scalar) check_same_shape("mul", a, b);
    const Tensor& big = a_scalar ? b : a;
    std::vector<double> out(static_cast<size_t>(big.numel()));
    if (a_scalar || b_scalar) {
        double s = (a_scalar ? a : b).item();
        kern::map_unary(big.data().data(), out.data(), big.numel(),
                        [s](double x) { return s * x; });
    } else {
        kern::map_binary(a.data().data(), b.data().data(), out.data(), a.numel(),
                         [](double x, double y) { return x * y; });
    }
    return make_op(big.shape(), std::move(out), {a, b}, [a_scalar, b_scalar](Node& o) {
        auto& pa = *o.parents[0];
        auto& pb = *o.parents[1];
        auto scalar_side = [&](Node& sc, Node& other) {
            if (sc.requires_grad) {
                double s = 0;
                for (size_t i = 0; i < o.grad.size(); ++i) s += o.grad[i] * other.data[i];
                sc.ensure_grad();
                sc.grad[0] += s;
            }
            if (other.requires_grad) {
                other.ensure_grad();
                double s = sc.data[0];
                for (size_t i = 0; i < o.grad.size(); ++i) other.grad[i] += s * o.grad[i];
            }
        };
        if (a_scalar) {
            scalar_side(pa, pb);
        } else if (b_scalar) {
            scalar_side(pb, pa);
        } else {
            if (pa.requires_grad) {
                pa.ensure_grad();
                for (size_t i = 0; i < o.grad.size(); ++i) pa.grad[i] += o.grad[i] * pb.data[i];
            }
            if (pb.requires_grad) {
                pb.ensure_grad();
                for (size_t i = 0; i < o.grad.size(); ++i) pb.grad[i] += o.grad[i] * pa.data[i];
            }
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(static_cast<size_t>(a.numel()));
    kern::map_unary(a.data().data(), out.data(), a.numel(), [s](double x) { return s * x; });
    return make_op(a.shape(), std::move(out), {a}, [s](Node& o) {
        auto& p = *o.parents[0];
        if (p.requires_grad) {
            p.ensure_grad();
            for (size_t i = 0; i < o.grad.size(); ++i) p.grad[i] += s * o.grad[i];
        }
    });
}

Tensor addc(const Tensor& a, double c) {
    std::vector<double> out(static_cast<size_t>(a.numel()));
    kern::map_unary(a.data().data(), out.data(), a.numel(), [c](double x) { return x + c; });
    return make_op(a.shape(), std::move(out), {a}, [](Node& o) {
        auto& p = *o.parents[0];
        if (p.requires_grad) accumulate(p, o.grad);
    });
}

namespace {

// outer * axis_dim * inner decomposition used by concat/slice/softmax/layernorm
struct AxisView {
    int64_t outer = 1, n = 1, inner = 1;
};

AxisView axis_view(const Shape& s, int axis) {
    AxisView v;
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
        if (i < axis) v.outer *= s[static_cast<size_t>(i)];
        else if (i == axis) v.n = s[static_cast<size_t>(i)];
        else v.inner *= s[static_cast<size_t>(i)];
    }
    return v;
}

int check_axis(const Shape& s, int axis, const char* op) {
    int r = static_cast<int>(s.size());
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r)
        throw ContractViolation(std::string(op) + ": axis out of range for " + shape_str(s));
    return axis;
}

}  // namespace

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractViolation("concat: no inputs");
    const Shape& s0 = parts[0].shape();
    int ax = check_axis(s0, axis, "concat");
    Shape out_shape = s0;
    int64_t total = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != s0.size())
            throw ContractViolation("concat: rank mismatch " + shape_str(s0) + " vs " + shape_str(s));
        for (int i = 0; i < static_cast<int>(s.size()); ++i)
            if (i != ax && s[static_cast<size_t>(i)] != s0[static_cast<size_t>(i)])
                throw ContractViolation("concat: shape mismatch " + shape_str(s0) + " vs " + shape_str(s));
        total += s[static_cast<size_t>(ax)];
    }
    out_shape[static_cast<size_t>(ax)] = total;
    AxisView v = axis_view(out_shape, ax);
    std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
    std::vector<int64_t> part_n(parts.size());
    for (size_t pi = 0; pi < parts.size(); ++pi) part_n[pi] = parts[pi].dim(ax);
    for (int64_t o = 0; o < v.outer; ++o) {
        int64_t row_off = 0;
        for (size_t pi = 0; pi < parts.size(); ++pi) {
            int64_t slab = part_n[pi] * v.inner;
            const double* src = parts[pi].data().data() + o * slab;
            double* dst = out.data() + (o * v.n + row_off) * v.inner;
            std::copy(src, src + slab, dst);
            row_off += part_n[pi];
        }
    }
    std::vector<Tensor> ps = parts;
    return make_op(out_shape, std::move(out), std::move(ps), [v, part_n](Node& o) {
        int64_t row_off = 0;
        for (size_t pi = 0; pi < o.parents.size(); ++pi) {
            auto& p = *o.parents[pi];
            int64_t slab = part_n[pi] * v.inner;
            if (p.requires_grad) {
                p.ensure_grad();
                for (int64_t ou = 0; ou < v.outer; ++ou) {
                    const double* g = o.grad.data() + (ou * v.n + row_off) * v.inner;
                    double* dst = p.grad.data() + ou * slab;
                    for (int64_t i = 0; i < slab; ++i) dst[i] += g[i];
                }
            }
            row_off += part_n[pi];
        }
    });
}

Tensor slice(const Tensor& a, int axis, int64_t start, int64_t len) {
    int ax = check_axis(a.shape(), axis, "slice");
    int64_t n = a.dim(ax);
    if (start < 0 || len < 0 || start + len > n)
        throw ContractViolation("slice: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of bounds for axis size " +
                                std::to_string(n));
    Shape out_shape = a.shape();
    out_shape[static_cast<size_t>(ax)] = len;
    AxisView v = axis_view(a.shape(), ax);
    std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
    for (int64_t o = 0; o < v.outer; ++o) {
        const double* src = a.data().data() + (o * v.n + start) * v.inner;
        std::copy(src, src + len * v.inner, out.data() + o * len * v.inner);
    }
    return make_op(out_shape, std::move(out), {a}, [v, start, len](Node& o) {
        auto& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t ou = 0; ou < v.outer; ++ou) {
            const double* g = o.grad.data() + ou * len * v.inner;
            double* dst = p.grad.data() + (ou * v.n + start) * v.inner;
            for (int64_t i = 0; i < len * v.inner; ++i) dst[i] += g[i];
        }
    });
}

Tensor softmax(const Tensor& a, int axis) {
    int ax = check_axis(a.shape(), axis, "softmax");
    AxisView v = axis_view(a.shape(), ax);
    std::vector<double> out(static_cast<size_t>(a.numel()));
    if (v.inner == 1) {
        kern::rows_softmax(a.data().data(), out.data(), v.outer, v.n);
    } else {
        std::vector<double> lane(static_cast<size_t>(v.n)), res(static_cast<size_t>(v.n));
        for (int64_t o = 0; o < v.outer; ++o)
            for (int64_t in = 0; in < v.inner; ++in) {
                for (int64_t j = 0; j < v.n; ++j)
                    lane[static_cast<size_t>(j)] = a.data()[static_cast<size_t>((o * v.n + j) * v.inner + in)];
                kern::rows_softmax(lane.data(), res.data(), 1, v.n);
                for (int64_t j = 0; j < v.n; ++j)
                    out[static_cast<size_t>((o * v.n + j) * v.inner + in)] = res[static_cast<size_t>(j)];
            }
    }
    std::vector<double> saved = out;
    return make_op(a.shape(), std::move(out), {a}, [v, saved = std::move(saved)](Node& o) {
        auto& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t ou = 0; ou < v.outer; ++ou)
            for (int64_t in = 0; in < v.inner; ++in) {
                double dot = 0;
                for (int64_t j = 0; j < v.n; ++j) {
                    size_t idx = static_cast<size_t>((ou * v.n + j) * v.inner + in);
                    dot += o.grad[idx] * saved[idx];
                }
                for (int64_t j = 0; j < v.n; ++j) {
                    size_t idx = static_cast<size_t>((ou * v.n + j) * v.inner + in);
                    p.grad[idx] += saved[idx] * (o.grad[idx] - dot);
                }
            }
    });
}

Tensor layernorm(const Tensor& a, int axis, double eps) {
    int ax = check_axis(a.shape(), axis, "layernorm");
    AxisView v = axis_view(a.shape(), ax);
    std::vector<double> out(static_cast<size_t>(a.numel()));
    std::vector<double> inv_std(static_cast<size_t>(v.outer * v.inner));
    if (v.inner == 1) {
        kern::rows_layernorm(a.data().data(), out.data(), v.outer, v.n, eps, inv_std.data());
    } else {
        std::vector<double> lane(static_cast<size_t>(v.n)), res(static_cast<size_t>(v.n));
        for (int64_t o = 0; o < v.outer; ++o)
            for (int64_t in = 0; in < v.inner; ++in) {
                for (int64_t j = 0; j < v.n; ++j)
                    lane[static_cast<size_t>(j)] = a.data()[static_cast<size_t>((o * v.n + j) * v.inner + in)];
                double is;
                kern::rows_layernorm(lane.data(), res.data(), 1, v.n, eps, &is);
                inv_std[static_cast<size_t>(o * v.inner + in)] = is;
                for (int64_t j = 0; j < v.n; ++j)
                    out[static_cast<size_t>((o * v.n + j) * v.inner + in)] = res[static_cast<size_t>(j)];
            }
    }
    std::vector<double> saved = out;
    return make_op(a.shape(), std::move(out), {a},
                   [v, saved = std::move(saved), inv_std = std::move(inv_std)](Node& o) {
        auto& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        double nn = static_cast<double>(v.n);
        for (int64_t ou = 0; ou < v.outer; ++ou)
            for (int64_t in = 0; in < v.inner; ++in) {
                double gm = 0, gym = 0;
                for (int64_t j = 0; j < v.n; ++j) {
                    size_t idx = static_cast<size_t>((ou * v.n + j) * v.inner + in);
                    gm += o.grad[idx];
                    gym += o.grad[idx] * saved[idx];
                }
                gm /= nn;
                gym /= nn;
                double is = inv_std[static_cast<size_t>(ou * v.inner + in)];
                for (int64_t j = 0; j < v.n; ++j) {
                    size_t idx = static_cast<size_t>((ou * v.n + j) * v.inner + in);
                    p.grad[idx] += is * (o.grad[idx] - gm - saved[idx] * gym);
                }
            }
    });
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <class FwdF, class GradF>
Tensor unary_op(const Tensor& a, FwdF f, GradF df) {
    std::vector<double> out(static_cast<size_t>(a.numel()));
    kern::map_unary(a.data().data(), out.data(), a.numel(), f);
    return make_op(a.shape(), std::move(out), {a}, [df](Node& o) {
        auto& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < o.grad.size(); ++i) p.grad[i] += df(p.data[i], o.data[i]) * o.grad[i];
    });
}

template <class Reduce, class GradF>
Tensor reduce_op(const Tensor& a, Reduce r, GradF df) {
    double v = r(a.data().data(), a.numel());
    return make_op({1}, {v}, {a}, [df](Node& o) {
        auto& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        double g = o.grad[0];
        for (size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += df(p.data[i], p.numel()) * g;
    });
}

}  // namespace

Tensor gelu(const Tensor& a) {
    return unary_op(
        a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
        [](double x, double) {
            double phi_cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            double phi_pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            return phi_cdf + x * phi_pdf;
        });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
    return unary_op(
        a, [](double x) { return x > 0 ? x : 0.0; },
        [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
    return reduce_op(a, kern::reduce_sum, [](double, int64_t) { return 1.0; });
}

Tensor mean(const Tensor& a) {
    return reduce_op(a, [](const double* x, int64_t n) { return kern::reduce_sum(x, n) / static_cast<double>(n); },
                     [](double, int64_t n) { return 1.0 / static_cast<double>(n); });
}

Tensor l1(const Tensor& a) {
    return reduce_op(a, kern::reduce_abs_sum,
                     [](double x, int64_t) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor l2(const Tensor& a) {
    return reduce_op(a, kern::reduce_sq_sum, [](double x, int64_t) { return 2.0 * x; });
}

Tensor log(const Tensor& a) {
    for (double v : a.data())
        if (!(v > 0))
            throw RejectedInput("log: input " + std::to_string(v) + " outside domain (0, inf)");
    return unary_op(a, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
    for (double v : a.data())
        if (v > 709.0) throw RejectedInput("exp: input " + std::to_string(v) + " would overflow");
    return unary_op(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor sqrt(const Tensor& a) {
    for (double v : a.data())
        if (v < 0) throw RejectedInput("sqrt: negative input " + std::to_string(v));
    return unary_op(a, [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Tensor abs(const Tensor& a) {
    return unary_op(a, [](double x) { return std::abs(x); },
                    [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor atan(const Tensor& a) {
    return unary_op(a, [](double x) { return std::atan(x); },
                    [](double x, double) { return 1.0 / (1.0 + x * x); });
}

Tensor sin(const Tensor& a) {
    return unary_op(a, [](double x) { return std::sin(x); },
                    [](double x, double) { return std::cos(x); });
}

Tensor cos(const Tensor& a) {
    return unary_op(a, [](double x) { return std::cos(x); },
                    [](double x, double) { return -std::sin(x); });
}

Tensor recip(const Tensor& a) {
    for (double v : a.data())
        if (v == 0.0) throw RejectedInput("recip: zero input");
    return unary_op(a, [](double x) { return 1.0 / x; },
                    [](double x, double) { return -1.0 / (x * x); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    if (!(lo <= hi)) throw ContractViolation("clamp: lo > hi");
    return unary_op(a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
                    [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ContractViolation("transpose: expects rank 2, got " + shape_str(a.shape()));
    int64_t m = a.dim(0), n = a.dim(1);
    std::vector<double> out(static_cast<size_t>(m * n));
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j)
            out[static_cast<size_t>(j * m + i)] = a.data()[static_cast<size_t>(i * n + j)];
    return make_op({n, m}, std::move(out), {a}, [m, n](Node& o) {
        auto& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j)
                p.grad[static_cast<size_t>(i * n + j)] += o.grad[static_cast<size_t>(j * m + i)];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw ContractViolation("reshape: numel mismatch " + shape_str(a.shape()) + " -> " +
                                shape_str(shape));
    std::vector<double> out(a.data());
    return make_op(std::move(shape), std::move(out), {a}, [](Node& o) {
        auto& p = *o.parents[0];
        if (p.requires_grad) accumulate(p, o.grad);
    });
}

Tensor permute_rows(const Tensor& a, const std::vector<int64_t>& index) {
    if (a.rank() != 2) throw ContractViolation("permute_rows: expects rank 2, got " + shape_str(a.shape()));
    int64_t rows = a.dim(0), cols = a.dim(1);
    for (int64_t i : index)
        if (i < 0 || i >= rows)
            throw ContractViolation("permute_rows: index " + std::to_string(i) + " out of range " +
                                    std::to_string(rows));
    int64_t n = static_cast<int64_t>(index.size());
    std::vector<double> out(static_cast<size_t>(n * cols));
    for (int64_t i = 0; i < n; ++i)
        std::copy(a.data().begin() + index[static_cast<size_t>(i)] * cols,
                  a.data().begin() + (index[static_cast<size_t>(i)] + 1) * cols,
                  out.begin() + i * cols);
    return make_op({n, cols}, std::move(out), {a}, [index, cols](Node& o) {
        auto& p = *o.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (size_t i = 0; i < index.size(); ++i)
            for (int64_t c = 0; c < cols; ++c)
                p.grad[static_cast<size_t>(index[i] * cols + c)] +=
                    o.grad[i * static_cast<size_t>(cols) + static_cast<size_t>(c)];
    });
}

// ----- dispatch ----------------------------------------------------------------

const char* op_name(Op op) {
    switch (op) {
        case Op::Matmul: return "matmul";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Scale: return "scale";
        case Op::Addc: return "addc";
        case Op::Concat: return "concat";
        case Op::Slice: return "slice";
        case Op::Softmax: return "softmax";
        case Op::Layernorm: return "layernorm";
        case Op::Gelu: return "gelu";
        case Op::Sigmoid: return "sigmoid";
        case Op::Relu: return "relu";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::L1: return "l1";
        case Op::L2: return "l2";
        case Op::Log: return "log";
        case Op::Exp: return "exp";
        case Op::Sqrt: return "sqrt";
        case Op::Abs: return "abs";
        case Op::Atan: return "atan";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Recip: return "recip";
        case Op::Clamp: return "clamp";
        case Op::Transpose: return "transpose";
        case Op::Reshape: return "reshape";
    }
    return "?";
}

Tensor apply(Op op, const std::vector<Tensor>& in, const OpArgs& args) {
    auto need = [&](size_t n) {
        if (in.size() != n)
            throw ContractViolation(std::string(op_name(op)) + ": expected " + std::to_string(n) +
                                    " inputs, got " + std::to_string(in.size()));
    };
    switch (op) {
        case Op::Matmul: need(2); return matmul(in[0], in[1]);
        case Op::Add: need(2); return add(in[0], in[1]);
        case Op::Sub: need(2); return sub(in[0], in[1]);
        case Op::Mul: need(2); return mul(in[0], in[1]);
        case Op::Scale: need(1); return scale(in[0], args.a);
        case Op::Addc: need(1); return addc(in[0], args.a);
        case Op::Concat: return concat(in, args.axis);
        case Op::Slice: need(1); return slice(in[0], args.axis, args.start, args.len);
        case Op::Softmax: need(1); return softmax(in[0], args.axis);
        case Op::Layernorm: need(1); return layernorm(in[0], args.axis);
        case Op::Gelu: need(1); return gelu(in[0]);
        case Op::Sigmoid: need(1); return sigmoid(in[0]);
        case Op::Relu: need(1); return relu(in[0]);
        case Op::Sum: need(1); return sum(in[0]);
        case Op::Mean: need(1); return mean(in[0]);
        case Op::L1: need(1); return l1(in[0]);
        case Op::L2: need(1); return l2(in[0]);
        case Op::Log: need(1); return log(in[0]);
        case Op::Exp: need(1); return exp(in[0]);
        case Op::Sqrt: need(1); return sqrt(in[0]);
        case Op::Abs: need(1); return abs(in[0]);
        case Op::Atan: need(1); return atan(in[0]);
        case Op::Sin: need(1); return sin(in[0]);
        case Op::Cos: need(1); return cos(in[0]);
        case Op::Recip: need(1); return recip(in[0]);
        case Op::Clamp: need(1); return clamp(in[0], args.a, args.b);
        case Op::Transpose: need(1); return transpose(in[0]);
        case Op::Reshape: need(1); return reshape(in[0], args.shape);
    }
    throw ContractViolation("unknown op tag");
}

// ----- grad_check ----------------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double eps) {
    Tensor leaf = x.detached().set_requires_grad(true);
    std::vector<double> analytic;
    {
        Tape tape;
        TapeScope scope(tape);
        Tensor y = f(leaf);
        if (y.numel() != 1) throw ContractViolation("grad_check: f must be scalar-valued");
        tape.backward(y);
        analytic = leaf.grad().empty() ? std::vector<double>(static_cast<size_t>(x.numel()), 0.0)
                                       : leaf.grad();
    }
    GradCheckReport rep;
    NoGradScope ng;
    std::vector<double> base = x.data();
    for (int64_t i = 0; i < x.numel(); ++i) {
        std::vector<double> dp = base, dm = base;
        dp[static_cast<size_t>(i)] += eps;
        dm[static_cast<size_t>(i)] -= eps;
        double fp = f(Tensor::from(x.shape(), std::move(dp))).item();
        double fm = f(Tensor::from(x.shape(), std::move(dm))).item();
        double num = (fp - fm) / (2.0 * eps);
        double ana = analytic[static_cast<size_t>(i)];
        double denom = std::max(std::abs(ana), std::abs(num));
        double err = denom < 1e-6 ? std::abs(ana - num) : std::abs(ana - num) / denom;
        if (err > rep.max_rel_err) {
            rep.max_rel_err = err;
            rep.worst_index = i;
            rep.analytic_at_worst = ana;
            rep.numeric_at_worst = num;
        }
    }
    return rep;
}

}  // namespace t4dr
