#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "t4dr/rng.hpp"

namespace t4dr {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {
struct Node;
class TapeImpl;
}  // namespace detail

// Dense row-major f64 tensor. Values are immutable after construction; only
// the gradient buffer mutates. Copies share the underlying node.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> data);
    static Tensor scalar(double value);
    static Tensor randn(Shape shape, Rng& rng, double stdev = 1.0);

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const;
    int rank() const;
    int64_t dim(int i) const;
    int64_t numel() const;
    const std::vector<double>& data() const;
    double item() const;  // scalar tensors only
    double at(std::initializer_list<int64_t> idx) const;

    Tensor& set_requires_grad(bool v = true);
    bool requires_grad() const;
    const std::vector<double>& grad() const;  // empty when no grad accumulated
    void zero_grad();
    void add_to_grad(const std::vector<double>& g);  // optimizer-side helper

    Tensor detached() const;  // same values, no graph linkage

    // mutation escape hatch for builders (invalid once the tensor is on a tape)
    std::vector<double>& mutable_data();

    std::shared_ptr<detail::Node> node() const { return n_; }
    explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}

private:
    std::shared_ptr<detail::Node> n_;
};

// Ordered record of executed ops; backward walks it once in reverse. A tape is
// single-writer; independent tapes may live on different threads.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // loss must be a scalar recorded on this tape. Leaf gradients accumulate
    // across repeated calls; intermediate gradients are reset per call.
    void backward(const Tensor& loss);

    size_t size() const;

    detail::TapeImpl* impl() const { return impl_.get(); }

private:
    std::unique_ptr<detail::TapeImpl> impl_;
};

// Makes `tape` the recording target for ops executed in this thread.
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    detail::TapeImpl* prev_;
};

// Disables recording; forward values are unaffected.
class NoGradScope {
public:
    NoGradScope();
    ~NoGradScope();

private:
    bool prev_;
};

// ----- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);           // 2-d (m,k)x(k,n)
Tensor add(const Tensor& a, const Tensor& b);              // same shape, or trailing-axis bias
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);              // same shape, or one scalar operand
Tensor scale(const Tensor& a, double s);
Tensor addc(const Tensor& a, double c);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int64_t start, int64_t len);
Tensor softmax(const Tensor& a, int axis);
Tensor layernorm(const Tensor& a, int axis, double eps = 1e-6);
Tensor gelu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor l1(const Tensor& a);   // sum of absolute values
Tensor l2(const Tensor& a);   // sum of squares
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor atan(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor recip(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor transpose(const Tensor& a);  // 2-d
Tensor reshape(const Tensor& a, Shape shape);
// row gather on a 2-d tensor: out[i] = a[index[i]]; gradient scatter-adds
Tensor permute_rows(const Tensor& a, const std::vector<int64_t>& index);

// ----- tag dispatch ----------------------------------------------------------

enum class Op {
    Matmul, Add, Sub, Mul, Scale, Addc, Concat, Slice, Softmax, Layernorm,
    Gelu, Sigmoid, Relu, Sum, Mean, L1, L2, Log, Exp, Sqrt, Abs, Atan, Sin,
    Cos, Recip, Clamp, Transpose, Reshape,
};

struct OpArgs {
    int axis = -1;
    int64_t start = 0;
    int64_t len = 0;
    double a = 0.0;
    double b = 0.0;
    Shape shape;
};

Tensor apply(Op op, const std::vector<Tensor>& inputs, const OpArgs& args = {});
const char* op_name(Op op);

// ----- gradient checking -----------------------------------------------------

struct GradCheckReport {
    double max_rel_err = 0.0;
    int64_t worst_index = -1;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Central-difference check of d f(x) / dx against the tape gradient.
// f must be scalar-valued and a pure function of x.
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double eps = 1e-5);

}  // namespace t4dr
