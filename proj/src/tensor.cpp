#include "dgm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dgm {

namespace {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

thread_local Tape* g_active_tape = nullptr;

}  // namespace

namespace detail {

void Node::accumulate(const std::vector<double>& g) {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

}  // namespace detail

// ---------------------------------------------------------------- Tape

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::backward(const Tensor& root) {
    if (root.size() != 1) throw ShapeError("backward() root must be scalar, got " + shape_str(root.shape()));
    auto& rn = *root.node();
    if (!rn.requires_grad) return;
    rn.grad.assign(1, 1.0);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        detail::Node& n = **it;
        if (!n.backprop || n.grad.empty()) continue;
        n.backprop();
    }
}

// ---------------------------------------------------------------- Tensor

Tensor Tensor::zeros(Shape shape) {
    auto n = std::make_shared<detail::Node>();
    n->values.assign(shape_numel(shape), 0.0);
    n->shape = std::move(shape);
    return Tensor(std::move(n));
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size())
        throw ShapeError("constant: shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    Tensor t = constant(std::move(shape), std::move(values));
    t.node()->requires_grad = true;
    return t;
}

std::size_t Tensor::rows() const {
    return node_->shape.empty() ? 1 : node_->shape[0];
}

std::size_t Tensor::cols() const {
    return node_->shape.size() < 2 ? 1 : node_->shape[1];
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.size() != node_->values.size()) node_->grad.assign(node_->values.size(), 0.0);
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->values.size(), 0.0); }

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->values[0];
}

double Tensor::at(std::size_t i, std::size_t j) const { return node_->values[i * cols() + j]; }

Tensor Tensor::detach() const {
    auto n = std::make_shared<detail::Node>();
    n->shape = node_->shape;
    n->values = node_->values;
    return Tensor(std::move(n));
}

// ---------------------------------------------------------------- custom_op

Tensor custom_op(Shape out_shape, std::vector<double> out_values, const std::vector<Tensor>& inputs,
                 std::function<std::vector<std::vector<double>>(const std::vector<double>&)> vjp) {
    if (shape_numel(out_shape) != out_values.size())
        throw ShapeError("custom_op: output shape/value size mismatch");
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(out_shape);
    n->values = std::move(out_values);

    bool track = false;
    if (Tape::active()) {
        for (const auto& in : inputs)
            if (in.requires_grad()) { track = true; break; }
    }
    if (track) {
        n->requires_grad = true;
        for (const auto& in : inputs) n->parents.push_back(in.node());
        detail::Node* self = n.get();
        n->backprop = [self, vjp = std::move(vjp)]() {
            auto grads = vjp(self->grad);
            for (std::size_t i = 0; i < self->parents.size(); ++i) {
                if (self->parents[i]->requires_grad) self->parents[i]->accumulate(grads[i]);
            }
        };
        Tape::active()->record(n);
    }
    return Tensor(std::move(n));
}

// ---------------------------------------------------------------- linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
        }
    auto an = a.node();
    auto bn = b.node();
    return custom_op({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](const std::vector<double>& g) {
        // dA = G B^T, dB = A^T G
        std::vector<double> da(m * k, 0.0), db(k * n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bn->values[p * n + j];
                da[i * k + p] = acc;
            }
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) acc += an->values[i * k + p] * g[i * n + j];
                db[p * n + j] = acc;
            }
        return std::vector<std::vector<double>>{std::move(da), std::move(db)};
    });
}

Tensor pairwise_sq_dist(const Tensor& x) {
    if (x.shape().size() != 2 || x.rows() < 1 || x.cols() < 1)
        throw ShapeError("pairwise_sq_dist: need an NxD matrix, got " + shape_str(x.shape()));
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> out(n * n, 0.0);
    const auto& xv = x.values();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = xv[i * d + c] - xv[j * d + c];
                s += diff * diff;
            }
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    auto xn = x.node();
    return custom_op({n, n}, std::move(out), {x}, [xn, n, d](const std::vector<double>& g) {
        std::vector<double> dx(n * d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double w = g[i * n + j] + g[j * n + i];
                if (w == 0.0 || i == j) continue;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = xn->values[i * d + c] - xn->values[j * d + c];
                    dx[i * d + c] += 2.0 * w * diff;
                }
            }
        return std::vector<std::vector<double>>{std::move(dx)};
    });
}

// ---------------------------------------------------------------- elementwise

namespace {

enum class Binary { add, sub, mul };

Tensor binary_op(const Tensor& a, const Tensor& b, Binary op) {
    const bool a_scalar = a.size() == 1;
    const bool b_scalar = b.size() == 1;
    if (!a_scalar && !b_scalar && a.shape() != b.shape())
        throw ShapeError("elementwise: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " differ and neither is scalar");
    const Tensor& big = a_scalar && !b_scalar ? b : a;
    const std::size_t n = big.size();
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = av[a_scalar ? 0 : i];
        const double y = bv[b_scalar ? 0 : i];
        out[i] = op == Binary::add ? x + y : op == Binary::sub ? x - y : x * y;
    }
    auto an = a.node();
    auto bn = b.node();
    return custom_op(big.shape(), std::move(out), {a, b},
                     [an, bn, a_scalar, b_scalar, n, op](const std::vector<double>& g) {
                         std::vector<double> da(a_scalar ? 1 : n, 0.0), db(b_scalar ? 1 : n, 0.0);
                         for (std::size_t i = 0; i < n; ++i) {
                             double ga = g[i], gb = g[i];
                             if (op == Binary::sub) gb = -gb;
                             if (op == Binary::mul) {
                                 ga = g[i] * bn->values[b_scalar ? 0 : i];
                                 gb = g[i] * an->values[a_scalar ? 0 : i];
                             }
                             da[a_scalar ? 0 : i] += ga;
                             db[b_scalar ? 0 : i] += gb;
                         }
                         return std::vector<std::vector<double>>{std::move(da), std::move(db)};
                     });
}

Tensor unary_op(const Tensor& a, const std::function<double(double)>& f,
                const std::function<double(double, double)>& dfdx /* (x, y) -> dy/dx */) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(a.values()[i]);
    auto an = a.node();
    auto on = std::make_shared<std::vector<double>>(out);
    return custom_op(a.shape(), std::move(out), {a}, [an, on, n, dfdx](const std::vector<double>& g) {
        std::vector<double> da(n);
        for (std::size_t i = 0; i < n; ++i) da[i] = g[i] * dfdx(an->values[i], (*on)[i]);
        return std::vector<std::vector<double>>{std::move(da)};
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(a, b, Binary::add); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(a, b, Binary::sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(a, b, Binary::mul); }
Tensor add(const Tensor& a, double c) { return add(a, Tensor::scalar(c)); }
Tensor mul(const Tensor& a, double c) { return mul(a, Tensor::scalar(c)); }

Tensor neg(const Tensor& a) {
    return unary_op(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a, bool clamp_inputs) {
    if (!clamp_inputs) {
        for (double v : a.values())
            if (v <= 0.0) throw DomainError("log of non-positive value " + std::to_string(v));
        return unary_op(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
    }
    return unary_op(a, [](double x) { return std::log(std::max(x, kEpsLog)); },
                    [](double x, double) { return x > kEpsLog ? 1.0 / x : 0.0; });
}

Tensor relu(const Tensor& a) {
    return unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                    [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
    return unary_op(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
                    [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary_op(a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
                    [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------- reductions

Tensor sum(const Tensor& x) {
    const std::size_t n = x.size();
    double s = std::accumulate(x.values().begin(), x.values().end(), 0.0);
    return custom_op({1}, {s}, {x}, [n](const std::vector<double>& g) {
        return std::vector<std::vector<double>>{std::vector<double>(n, g[0])};
    });
}

Tensor mean(const Tensor& x) { return mul(sum(x), 1.0 / static_cast<double>(x.size())); }

namespace {

// Iterates a 2D tensor along `axis`, producing one output per slice.
void check_axis(const Tensor& x, std::size_t axis) {
    if (x.shape().size() != 2) throw ShapeError("axis reduction requires a matrix");
    if (axis > 1) throw ShapeError("axis must be 0 or 1");
    if (x.rows() == 0 || x.cols() == 0) throw ShapeError("reduction over empty axis");
}

}  // namespace

Tensor sum(const Tensor& x, std::size_t axis) {
    check_axis(x, axis);
    const std::size_t r = x.rows(), c = x.cols();
    const std::size_t out_n = axis == 0 ? c : r;
    std::vector<double> out(out_n, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[axis == 0 ? j : i] += x.at(i, j);
    return custom_op({out_n}, std::move(out), {x}, [r, c, axis](const std::vector<double>& g) {
        std::vector<double> dx(r * c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) dx[i * c + j] = g[axis == 0 ? j : i];
        return std::vector<std::vector<double>>{std::move(dx)};
    });
}

Tensor mean(const Tensor& x, std::size_t axis) {
    check_axis(x, axis);
    const double denom = axis == 0 ? static_cast<double>(x.rows()) : static_cast<double>(x.cols());
    return mul(sum(x, axis), 1.0 / denom);
}

Tensor max(const Tensor& x) {
    const std::size_t n = x.size();
    if (n == 0) throw ShapeError("max of empty tensor");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (x.values()[i] > x.values()[arg]) arg = i;  // strict: ties keep lowest index
    return custom_op({1}, {x.values()[arg]}, {x}, [n, arg](const std::vector<double>& g) {
        std::vector<double> dx(n, 0.0);
        dx[arg] = g[0];
        return std::vector<std::vector<double>>{std::move(dx)};
    });
}

Tensor max(const Tensor& x, std::size_t axis) {
    check_axis(x, axis);
    const std::size_t r = x.rows(), c = x.cols();
    const std::size_t out_n = axis == 0 ? c : r;
    std::vector<double> out(out_n);
    std::vector<std::size_t> arg(out_n);
    for (std::size_t o = 0; o < out_n; ++o) {
        const std::size_t len = axis == 0 ? r : c;
        std::size_t best = 0;
        for (std::size_t t = 1; t < len; ++t) {
            const double v = axis == 0 ? x.at(t, o) : x.at(o, t);
            const double bv = axis == 0 ? x.at(best, o) : x.at(o, best);
            if (v > bv) best = t;
        }
        arg[o] = best;
        out[o] = axis == 0 ? x.at(best, o) : x.at(o, best);
    }
    return custom_op({out_n}, std::move(out), {x}, [r, c, axis, arg](const std::vector<double>& g) {
        std::vector<double> dx(r * c, 0.0);
        for (std::size_t o = 0; o < g.size(); ++o) {
            const std::size_t i = axis == 0 ? arg[o] : o;
            const std::size_t j = axis == 0 ? o : arg[o];
            dx[i * c + j] = g[o];
        }
        return std::vector<std::vector<double>>{std::move(dx)};
    });
}

// ---------------------------------------------------------------- structure

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.rows() != b.rows())
        throw ShapeError("concat_cols: row counts differ, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const std::size_t n = a.rows(), d1 = a.cols(), d2 = b.cols();
    std::vector<double> out(n * (d1 + d2));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d1; ++j) out[i * (d1 + d2) + j] = a.at(i, j);
        for (std::size_t j = 0; j < d2; ++j) out[i * (d1 + d2) + d1 + j] = b.at(i, j);
    }
    return custom_op({n, d1 + d2}, std::move(out), {a, b}, [n, d1, d2](const std::vector<double>& g) {
        std::vector<double> da(n * d1), db(n * d2);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d1; ++j) da[i * d1 + j] = g[i * (d1 + d2) + j];
            for (std::size_t j = 0; j < d2; ++j) db[i * d2 + j] = g[i * (d1 + d2) + d1 + j];
        }
        return std::vector<std::vector<double>>{std::move(da), std::move(db)};
    });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
    if (x.shape().size() != 2) throw ShapeError("gather_rows: need a matrix");
    const std::size_t n = x.rows(), d = x.cols();
    for (std::size_t i : idx)
        if (i >= n) throw IndexError("gather_rows: index " + std::to_string(i) + " out of range [0, " +
                                     std::to_string(n) + ")");
    std::vector<double> out(idx.size() * d);
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x.at(idx[r], j);
    return custom_op({idx.size(), d}, std::move(out), {x}, [n, d, idx](const std::vector<double>& g) {
        std::vector<double> dx(n * d, 0.0);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t j = 0; j < d; ++j) dx[idx[r] * d + j] += g[r * d + j];
        return std::vector<std::vector<double>>{std::move(dx)};
    });
}

Tensor gather_entries(const Tensor& x, const std::vector<std::pair<std::size_t, std::size_t>>& ij) {
    if (x.shape().size() != 2) throw ShapeError("gather_entries: need a matrix");
    const std::size_t r = x.rows(), c = x.cols();
    std::vector<double> out(ij.size());
    for (std::size_t e = 0; e < ij.size(); ++e) {
        if (ij[e].first >= r || ij[e].second >= c) throw IndexError("gather_entries: index out of range");
        out[e] = x.at(ij[e].first, ij[e].second);
    }
    return custom_op({ij.size()}, std::move(out), {x}, [r, c, ij](const std::vector<double>& g) {
        std::vector<double> dx(r * c, 0.0);
        for (std::size_t e = 0; e < ij.size(); ++e) dx[ij[e].first * c + ij[e].second] += g[e];
        return std::vector<std::vector<double>>{std::move(dx)};
    });
}

Tensor row_block_sum(const Tensor& x, std::size_t block) {
    if (x.shape().empty() || x.shape().size() > 2 || block == 0 || x.rows() % block != 0)
        throw ShapeError("row_block_sum: row count " + std::to_string(x.rows()) + " not divisible by block " +
                         std::to_string(block));
    const std::size_t b = x.rows() / block, d = x.cols();
    std::vector<double> out(b * d, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j) out[(i / block) * d + j] += x.values()[i * d + j];
    Shape out_shape = x.shape().size() == 1 ? Shape{b} : Shape{b, d};
    return custom_op(std::move(out_shape), std::move(out), {x}, [b, block, d](const std::vector<double>& g) {
        std::vector<double> dx(b * block * d);
        for (std::size_t i = 0; i < b * block; ++i)
            for (std::size_t j = 0; j < d; ++j) dx[i * d + j] = g[(i / block) * d + j];
        return std::vector<std::vector<double>>{std::move(dx)};
    });
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    if (x.shape().size() != 2 || b.size() != x.cols())
        throw ShapeError("add_rowvec: bias length " + std::to_string(b.size()) + " != columns " +
                         std::to_string(x.cols()));
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x.at(i, j) + b.values()[j];
    return custom_op({n, d}, std::move(out), {x, b}, [n, d](const std::vector<double>& g) {
        std::vector<double> db(d, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) db[j] += g[i * d + j];
        return std::vector<std::vector<double>>{g, std::move(db)};
    });
}

// ---------------------------------------------------------------- gradcheck

GradCheckReport check_gradient(const std::function<Tensor()>& fn, const std::vector<Tensor>& params,
                               double step) {
    GradCheckReport report;
    {
        Tape tape;
        for (const auto& p : params) const_cast<Tensor&>(p).zero_grad();
        Tensor y = fn();
        tape.backward(y);
        for (const auto& p : params)
            report.analytic.insert(report.analytic.end(), p.grad().begin(), p.grad().end());
    }
    for (const auto& p : params) {
        auto& vals = const_cast<Tensor&>(p).values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + step;
            const double hi = fn().item();
            vals[i] = saved - step;
            const double lo = fn().item();
            vals[i] = saved;
            report.numeric.push_back((hi - lo) / (2.0 * step));
        }
    }
    report.rel_errors.resize(report.analytic.size());
    for (std::size_t i = 0; i < report.analytic.size(); ++i) {
        const double a = report.analytic[i], nu = report.numeric[i];
        const double denom = std::max({std::abs(a), std::abs(nu), 1e-4});
        report.rel_errors[i] = std::abs(a - nu) / denom;
        report.max_rel_error = std::max(report.max_rel_error, report.rel_errors[i]);
    }
    return report;
}

GradCheckReport check_gradient(const std::function<Tensor(const Tensor&)>& fn, const Tensor& x, double step) {
    return check_gradient([&]() { return fn(x); }, {x}, step);
}

}  // namespace dgm
