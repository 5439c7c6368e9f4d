#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "dgm/errors.hpp"

namespace dgm {

using Shape = std::vector<std::size_t>;

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // sized lazily on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backprop;  // pushes this->grad into parents

    std::size_t size() const { return values.size(); }
    void accumulate(const std::vector<double>& g);
};

}  // namespace detail

class Tensor;

// Define-by-run tape. Constructing a Tape makes it the active recorder for
// the current thread; destruction restores the previous one. The tape is
// rebuilt every forward pass since the sampled graph topology changes.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Seeds a scalar root with gradient 1 and replays recorded ops in exact
    // reverse recording order, accumulating additively into every parent.
    void backward(const Tensor& root);

    void record(std::shared_ptr<detail::Node> node) { order_.push_back(std::move(node)); }
    std::size_t num_recorded() const { return order_.size(); }

    static Tape* active();

private:
    std::vector<std::shared_ptr<detail::Node>> order_;
    Tape* prev_;
};

// Shape-tagged double-precision array with an optional gradient slot.
// Copying a Tensor copies the handle, not the storage.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor scalar(double v);
    // Leaf with requires_grad set; its grad persists across tapes until
    // zero_grad() so an optimizer can read it after backward().
    static Tensor parameter(Shape shape, std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    const std::vector<double>& values() const { return node_->values; }
    std::vector<double>& values() { return node_->values; }
    const std::vector<double>& grad() const;
    bool requires_grad() const { return node_->requires_grad; }
    void zero_grad();

    double item() const;
    double at(std::size_t i, std::size_t j) const;

    // Same values, no gradient tracking.
    Tensor detach() const;

    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

// Generic differentiable op: given output values and a vector-Jacobian
// product returning one gradient array per input, records the node on the
// active tape. This is the extension point other modules use for custom ops
// (e.g. the numerically stable cross-entropy).
Tensor custom_op(Shape out_shape, std::vector<double> out_values,
                 const std::vector<Tensor>& inputs,
                 std::function<std::vector<std::vector<double>>(const std::vector<double>& grad_out)> vjp);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
// out[i][j] = ||x_i - x_j||^2; symmetric, zero diagonal.
Tensor pairwise_sq_dist(const Tensor& x);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);  // equal shapes or scalar broadcast
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double c);
Tensor mul(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
// With clamp_inputs, arguments below eps_log are clamped before the log
// (zero gradient in the clamped region); otherwise non-positive input throws.
Tensor log(const Tensor& a, bool clamp_inputs = false);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor clamp(const Tensor& a, double lo, double hi);

constexpr double kEpsLog = 1e-12;

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// ---- reductions ----
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);
// Ties route the gradient to the lowest index.
Tensor max(const Tensor& x);
Tensor max(const Tensor& x, std::size_t axis);

// ---- structure ----
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);
// Selects entries x[i][j]; gradient scatter-adds back.
Tensor gather_entries(const Tensor& x, const std::vector<std::pair<std::size_t, std::size_t>>& ij);
// Sums consecutive blocks of `block` rows: [B*block x d] -> [B x d].
Tensor row_block_sum(const Tensor& x, std::size_t block);
// x[N x d] + b[d] broadcast over rows.
Tensor add_rowvec(const Tensor& x, const Tensor& b);

// ---- verification ----
struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<double> analytic;
    std::vector<double> numeric;
    std::vector<double> rel_errors;
    bool pass(double tol) const { return max_rel_error < tol; }
};

// Central finite differences against the tape gradient for a scalar-valued
// function of in-place perturbable parameters.
GradCheckReport check_gradient(const std::function<Tensor()>& fn, const std::vector<Tensor>& params,
                               double step = 1e-6);
GradCheckReport check_gradient(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x,
                               double step = 1e-6);

}  // namespace dgm
