#include "gmvae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gmvae {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto e : s) n *= e;
    return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(shape_numel(shape_), fill)) {
    for (auto e : shape_) {
        if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape_));
    }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::make_shared<std::vector<double>>(std::move(data))) {
    if (shape_numel(shape_) != data_->size()) {
        throw DimensionError("tensor data length " + std::to_string(data_->size()) +
                             " does not match shape " + shape_str(shape_));
    }
}

double Tensor::item() const {
    if (!is_scalar()) throw ContractError("item(): tensor of shape " + shape_str(shape_) + " is not scalar");
    return (*data_)[0];
}

// ---- tape ------------------------------------------------------------------

int Tape::push(std::size_t numel, std::vector<int> inputs) {
    if (consumed_) throw ContractError("tape already consumed by backward; build a fresh tape per forward pass");
    Node n;
    n.inputs = std::move(inputs);
    n.numel = numel;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad(int node) {
    Node& n = nodes_.at(node);
    if (n.grad.empty()) n.grad.assign(n.numel, 0.0);
    return n.grad;
}

Tensor Tape::watch(Parameter& p) {
    int id = push(p.value.numel(), {});
    nodes_[id].param = &p;
    Tensor t = p.value;
    t.tape_ = this;
    t.node_ = id;
    return t;
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw ContractError("tape already consumed by backward");
    if (loss.tape() != this || loss.node() < 0) throw ContractError("backward: loss does not live on this tape");
    if (!loss.is_scalar()) {
        throw ContractError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    }
    grad(loss.node())[0] = 1.0;
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.grad.empty()) continue;  // nothing flowed into this node
        if (n.param != nullptr) {
            auto& g = n.param->grad.data();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        } else if (n.backprop) {
            n.backprop();
        }
    }
    consumed_ = true;
}

// Internal access point for operation implementations.
struct OpBuilder {
    static Tape* pick_tape(const Tensor& a) { return a.tape_; }

    static Tape* pick_tape(const Tensor& a, const Tensor& b) {
        if (a.tape_ && b.tape_ && a.tape_ != b.tape_) {
            throw ContractError("operands live on different tapes");
        }
        return a.tape_ ? a.tape_ : b.tape_;
    }

    static Tensor emit(Tape* tape, Tensor out, std::vector<int> inputs,
                       std::function<std::function<void()>(Tape*, int)> make_backprop) {
        if (!tape) return out;
        int id = tape->push(out.numel(), std::move(inputs));
        out.tape_ = tape;
        out.node_ = id;
        tape->set_backprop(id, make_backprop(tape, id));
        return out;
    }

    static const std::vector<double>& out_grad(Tape* t, int id) { return t->nodes_[id].grad; }
    static std::vector<double>& in_grad(Tape* t, int id) { return t->grad(id); }
};

using OB = OpBuilder;

namespace {

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor operand");
}

using Data = std::shared_ptr<std::vector<double>>;

// ---- dense kernels ----

// C += A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

// C += A[m x n] * B[k x n]^T  -> [m x k]
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        for (std::size_t q = 0; q < k; ++q) {
            const double* bq = b + q * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += ai[j] * bq[j];
            c[i * k + q] += s;
        }
    }
}

// C += A[m x k]^T * B[m x n]  -> [k x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* bi = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double v = ai[p];
            if (v == 0.0) continue;
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += v * bi[j];
        }
    }
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

enum class BinKind { add, sub, mul, div };

Tensor binary_op(BinKind kind, const char* name, const Tensor& a, const Tensor& b) {
    require_defined(a, name);
    require_defined(b, name);
    const bool a_scalar = a.is_scalar();
    const bool b_scalar = b.is_scalar();
    if (!a_scalar && !b_scalar && a.shape() != b.shape()) {
        throw DimensionError(std::string(name) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    const Shape& out_shape = a_scalar ? b.shape() : a.shape();
    const std::size_t n = shape_numel(out_shape);
    std::vector<double> out(n);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = av[a_scalar ? 0 : i];
        const double y = bv[b_scalar ? 0 : i];
        switch (kind) {
            case BinKind::add: out[i] = x + y; break;
            case BinKind::sub: out[i] = x - y; break;
            case BinKind::mul: out[i] = x * y; break;
            case BinKind::div:
                if (y == 0.0) throw DomainError("div: divisor element is zero");
                out[i] = x / y;
                break;
        }
    }
    Tape* tape = OB::pick_tape(a, b);
    Tensor result(out_shape, std::move(out));
    if (!tape) return result;

    const int an = a.node(), bn = b.node();
    Data ad = a.storage(), bd = b.storage();
    return OB::emit(tape, std::move(result), {an, bn}, [=](Tape* tp, int self) {
        return [=]() {
            const auto& g = OB::out_grad(tp, self);
            if (an >= 0) {
                auto& ga = OB::in_grad(tp, an);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double y = (*bd)[b_scalar ? 0 : i];
                    double d = 0.0;
                    switch (kind) {
                        case BinKind::add: d = g[i]; break;
                        case BinKind::sub: d = g[i]; break;
                        case BinKind::mul: d = g[i] * y; break;
                        case BinKind::div: d = g[i] / y; break;
                    }
                    ga[a_scalar ? 0 : i] += d;
                }
            }
            if (bn >= 0) {
                auto& gb = OB::in_grad(tp, bn);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double x = (*ad)[a_scalar ? 0 : i];
                    const double y = (*bd)[b_scalar ? 0 : i];
                    double d = 0.0;
                    switch (kind) {
                        case BinKind::add: d = g[i]; break;
                        case BinKind::sub: d = -g[i]; break;
                        case BinKind::mul: d = g[i] * x; break;
                        case BinKind::div: d = -g[i] * x / (y * y); break;
                    }
                    gb[b_scalar ? 0 : i] += d;
                }
            }
        };
    });
}

enum class UnKind { exp, log, neg, relu, sigmoid, softplus };

Tensor unary_op(UnKind kind, const char* name, const Tensor& x) {
    require_defined(x, name);
    const std::size_t n = x.numel();
    std::vector<double> out(n);
    const auto& xv = x.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double v = xv[i];
        switch (kind) {
            case UnKind::exp: out[i] = std::exp(v); break;
            case UnKind::log:
                if (v <= 0.0) throw DomainError("log: requires strictly positive input, got " + std::to_string(v));
                out[i] = std::log(v);
                break;
            case UnKind::neg: out[i] = -v; break;
            case UnKind::relu: out[i] = v > 0.0 ? v : 0.0; break;
            case UnKind::sigmoid: out[i] = stable_sigmoid(v); break;
            case UnKind::softplus: out[i] = (v > 0.0 ? v : 0.0) + std::log1p(std::exp(-std::abs(v))); break;
        }
    }
    Tape* tape = OB::pick_tape(x);
    Tensor result(x.shape(), std::move(out));
    if (!tape) return result;

    const int xn = x.node();
    Data xd = x.storage(), od = result.storage();
    return OB::emit(tape, std::move(result), {xn}, [=](Tape* tp, int self) {
        return [=]() {
            if (xn < 0) return;
            const auto& g = OB::out_grad(tp, self);
            auto& gx = OB::in_grad(tp, xn);
            for (std::size_t i = 0; i < g.size(); ++i) {
                double d = 0.0;
                switch (kind) {
                    case UnKind::exp: d = g[i] * (*od)[i]; break;
                    case UnKind::log: d = g[i] / (*xd)[i]; break;
                    case UnKind::neg: d = -g[i]; break;
                    case UnKind::relu: d = (*xd)[i] > 0.0 ? g[i] : 0.0; break;
                    case UnKind::sigmoid: d = g[i] * (*od)[i] * (1.0 - (*od)[i]); break;
                    case UnKind::softplus: d = g[i] * stable_sigmoid((*xd)[i]); break;
                }
                gx[i] += d;
            }
        };
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(BinKind::add, "add", a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(BinKind::sub, "sub", a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(BinKind::mul, "mul", a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op(BinKind::div, "div", a, b); }

Tensor exp(const Tensor& x) { return unary_op(UnKind::exp, "exp", x); }
Tensor log(const Tensor& x) { return unary_op(UnKind::log, "log", x); }
Tensor neg(const Tensor& x) { return unary_op(UnKind::neg, "neg", x); }
Tensor relu(const Tensor& x) { return unary_op(UnKind::relu, "relu", x); }
Tensor sigmoid(const Tensor& x) { return unary_op(UnKind::sigmoid, "sigmoid", x); }
Tensor softplus(const Tensor& x) { return unary_op(UnKind::softplus, "softplus", x); }

Tensor scale(const Tensor& x, double c) { return mul(x, Tensor::scalar(c)); }
Tensor add_scalar(const Tensor& x, double c) { return add(x, Tensor::scalar(c)); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor result(Shape{m, n}, 0.0);
    gemm_nn(m, k, n, a.data().data(), b.data().data(), result.data().data());

    Tape* tape = OB::pick_tape(a, b);
    if (!tape) return result;
    const int an = a.node(), bn = b.node();
    Data ad = a.storage(), bd = b.storage();
    return OB::emit(tape, std::move(result), {an, bn}, [=](Tape* tp, int self) {
        return [=]() {
            const auto& g = OB::out_grad(tp, self);
            if (an >= 0) gemm_nt(m, n, k, g.data(), bd->data(), OB::in_grad(tp, an).data());
            if (bn >= 0) gemm_tn(m, k, n, ad->data(), g.data(), OB::in_grad(tp, bn).data());
        };
    });
}

Tensor log_softmax(const Tensor& x, int axis) {
    require_defined(x, "log_softmax");
    if (x.rank() == 0 || x.rank() > 2) {
        throw DimensionError("log_softmax: expects rank 1 or 2, got " + shape_str(x.shape()));
    }
    if (axis < 0 || static_cast<std::size_t>(axis) >= x.rank()) {
        throw DimensionError("log_softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(x.shape()));
    }
    // lines: contiguous-strided 1-d slices along `axis`
    const bool row_wise = (x.rank() == 1) || axis == 1;
    const std::size_t lines = x.rank() == 1 ? 1 : (row_wise ? x.shape()[0] : x.shape()[1]);
    const std::size_t len = x.rank() == 1 ? x.shape()[0] : (row_wise ? x.shape()[1] : x.shape()[0]);
    const std::size_t stride = row_wise ? 1 : x.shape()[1];
    const std::size_t line_step = row_wise ? len : 1;

    std::vector<double> out(x.numel());
    const auto& xv = x.data();
    for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t base = l * line_step;
        double mx = -INFINITY;
        for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, xv[base + i * stride]);
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += std::exp(xv[base + i * stride] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t i = 0; i < len; ++i) out[base + i * stride] = xv[base + i * stride] - lse;
    }

    Tape* tape = OB::pick_tape(x);
    Tensor result(x.shape(), std::move(out));
    if (!tape) return result;
    const int xn = x.node();
    Data od = result.storage();
    return OB::emit(tape, std::move(result), {xn}, [=](Tape* tp, int self) {
        return [=]() {
            if (xn < 0) return;
            const auto& g = OB::out_grad(tp, self);
            auto& gx = OB::in_grad(tp, xn);
            for (std::size_t l = 0; l < lines; ++l) {
                const std::size_t base = l * line_step;
                double gsum = 0.0;
                for (std::size_t i = 0; i < len; ++i) gsum += g[base + i * stride];
                for (std::size_t i = 0; i < len; ++i) {
                    const std::size_t idx = base + i * stride;
                    gx[idx] += g[idx] - std::exp((*od)[idx]) * gsum;
                }
            }
        };
    });
}

namespace {

Tensor reduce_op(const Tensor& x, std::optional<int> axis, bool mean, const char* name) {
    require_defined(x, name);
    const auto& xv = x.data();

    if (!axis.has_value()) {
        double s = 0.0;
        for (double v : xv) s += v;
        const double denom = mean ? static_cast<double>(x.numel()) : 1.0;
        Tensor result = Tensor::scalar(s / denom);
        Tape* tape = OB::pick_tape(x);
        if (!tape) return result;
        const int xn = x.node();
        const std::size_t n = x.numel();
        return OB::emit(tape, std::move(result), {xn}, [=](Tape* tp, int self) {
            return [=]() {
                if (xn < 0) return;
                const double g = OB::out_grad(tp, self)[0] / denom;
                auto& gx = OB::in_grad(tp, xn);
                for (std::size_t i = 0; i < n; ++i) gx[i] += g;
            };
        });
    }

    const int ax = *axis;
    if (x.rank() == 1) {
        if (ax != 0) throw DimensionError(std::string(name) + ": axis invalid for " + shape_str(x.shape()));
        return reduce_op(x, std::nullopt, mean, name);
    }
    if (x.rank() != 2 || ax < 0 || ax > 1) {
        throw DimensionError(std::string(name) + ": axis " + std::to_string(ax) + " invalid for " +
                             shape_str(x.shape()));
    }
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    const std::size_t out_len = ax == 0 ? cols : rows;
    const double denom = mean ? static_cast<double>(ax == 0 ? rows : cols) : 1.0;
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out[ax == 0 ? j : i] += xv[i * cols + j];
        }
    }
    for (auto& v : out) v /= denom;

    Tape* tape = OB::pick_tape(x);
    Tensor result(Shape{out_len}, std::move(out));
    if (!tape) return result;
    const int xn = x.node();
    return OB::emit(tape, std::move(result), {xn}, [=](Tape* tp, int self) {
        return [=]() {
            if (xn < 0) return;
            const auto& g = OB::out_grad(tp, self);
            auto& gx = OB::in_grad(tp, xn);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    gx[i * cols + j] += g[ax == 0 ? j : i] / denom;
                }
            }
        };
    });
}

}  // namespace

Tensor reduce_sum(const Tensor& x, std::optional<int> axis) { return reduce_op(x, axis, false, "reduce_sum"); }
Tensor reduce_mean(const Tensor& x, std::optional<int> axis) { return reduce_op(x, axis, true, "reduce_mean"); }

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat: no operands");
    for (const auto& p : parts) require_defined(p, "concat");
    const std::size_t rank = parts[0].rank();
    if (rank == 0 || rank > 2 || axis < 0 || static_cast<std::size_t>(axis) >= rank) {
        throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for rank " + std::to_string(rank));
    }
    for (const auto& p : parts) {
        if (p.rank() != rank) throw DimensionError("concat: rank mismatch");
        for (std::size_t d = 0; d < rank; ++d) {
            if (d != static_cast<std::size_t>(axis) && p.shape()[d] != parts[0].shape()[d]) {
                throw DimensionError("concat: non-concat extents differ: " + shape_str(parts[0].shape()) +
                                     " vs " + shape_str(p.shape()));
            }
        }
    }

    Shape out_shape = parts[0].shape();
    out_shape[axis] = 0;
    for (const auto& p : parts) out_shape[axis] += p.shape()[axis];

    const std::size_t rows = rank == 1 ? 1 : (axis == 1 ? out_shape[0] : 1);
    Tensor result(out_shape, 0.0);
    auto& ov = result.data();

    // offsets of each part along the concat axis
    std::vector<std::size_t> offsets(parts.size(), 0);
    for (std::size_t p = 1; p < parts.size(); ++p) offsets[p] = offsets[p - 1] + parts[p - 1].shape()[axis];

    if (rank == 1 || axis == 0) {
        std::size_t pos = 0;
        for (const auto& p : parts) {
            std::copy(p.data().begin(), p.data().end(), ov.begin() + pos);
            pos += p.numel();
        }
    } else {
        const std::size_t out_cols = out_shape[1];
        for (std::size_t pi = 0; pi < parts.size(); ++pi) {
            const auto& pv = parts[pi].data();
            const std::size_t cols = parts[pi].shape()[1];
            for (std::size_t i = 0; i < rows; ++i) {
                std::copy(pv.begin() + i * cols, pv.begin() + (i + 1) * cols,
                          ov.begin() + i * out_cols + offsets[pi]);
            }
        }
    }

    Tape* tape = nullptr;
    for (const auto& p : parts) {
        Tape* t = OB::pick_tape(p);
        if (t) {
            if (tape && tape != t) throw ContractError("concat: operands live on different tapes");
            tape = t;
        }
    }
    if (!tape) return result;

    std::vector<int> input_nodes;
    std::vector<std::size_t> part_extents;
    input_nodes.reserve(parts.size());
    for (const auto& p : parts) {
        input_nodes.push_back(p.node());
        part_extents.push_back(p.shape()[axis]);
    }
    const std::size_t out_cols = rank == 2 ? out_shape[1] : out_shape[0];
    const bool column_concat = (rank == 2 && axis == 1);
    return OB::emit(tape, std::move(result), input_nodes, [=](Tape* tp, int self) {
        return [=]() {
            const auto& g = OB::out_grad(tp, self);
            for (std::size_t pi = 0; pi < input_nodes.size(); ++pi) {
                if (input_nodes[pi] < 0) continue;
                auto& gp = OB::in_grad(tp, input_nodes[pi]);
                if (!column_concat) {
                    // row/1-d concat: flat offset is the sum of preceding numels
                    std::size_t flat = 0;
                    for (std::size_t q = 0; q < pi; ++q) flat += part_extents[q] * (rank == 2 ? out_cols : 1);
                    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[flat + i];
                } else {
                    const std::size_t cols = part_extents[pi];
                    for (std::size_t i = 0; i < rows; ++i) {
                        for (std::size_t j = 0; j < cols; ++j) {
                            gp[i * cols + j] += g[i * out_cols + offsets[pi] + j];
                        }
                    }
                }
            }
        };
    });
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) { return concat(std::vector<Tensor>{a, b}, axis); }

Tensor one_hot(std::size_t index, std::size_t k) {
    if (index >= k) {
        throw BoundsError("one_hot: index " + std::to_string(index) + " out of range [0, " + std::to_string(k) + ")");
    }
    Tensor t(Shape{k}, 0.0);
    t[index] = 1.0;
    return t;
}

Tensor reshape(const Tensor& x, Shape shape) {
    require_defined(x, "reshape");
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    Tensor result(shape, x.data());
    Tape* tape = OB::pick_tape(x);
    if (!tape) return result;
    const int xn = x.node();
    return OB::emit(tape, std::move(result), {xn}, [=](Tape* tp, int self) {
        return [=]() {
            if (xn < 0) return;
            const auto& g = OB::out_grad(tp, self);
            auto& gx = OB::in_grad(tp, xn);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        };
    });
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
    require_defined(x, "slice_cols");
    if (x.rank() != 2) throw DimensionError("slice_cols: expects rank 2, got " + shape_str(x.shape()));
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    if (c0 >= c1 || c1 > cols) {
        throw BoundsError("slice_cols: range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                          ") invalid for " + shape_str(x.shape()));
    }
    const std::size_t w = c1 - c0;
    Tensor result(Shape{rows, w}, 0.0);
    auto& ov = result.data();
    const auto& xv = x.data();
    for (std::size_t i = 0; i < rows; ++i) {
        std::copy(xv.begin() + i * cols + c0, xv.begin() + i * cols + c1, ov.begin() + i * w);
    }
    Tape* tape = OB::pick_tape(x);
    if (!tape) return result;
    const int xn = x.node();
    return OB::emit(tape, std::move(result), {xn}, [=](Tape* tp, int self) {
        return [=]() {
            if (xn < 0) return;
            const auto& g = OB::out_grad(tp, self);
            auto& gx = OB::in_grad(tp, xn);
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < w; ++j) gx[i * cols + c0 + j] += g[i * w + j];
            }
        };
    });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    require_defined(x, "add_bias");
    require_defined(bias, "add_bias");
    if (x.rank() != 2 || bias.rank() != 1 || bias.shape()[0] != x.shape()[1]) {
        throw DimensionError("add_bias: incompatible shapes " + shape_str(x.shape()) + " and " +
                             shape_str(bias.shape()));
    }
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    Tensor result(x.shape(), 0.0);
    auto& ov = result.data();
    const auto& xv = x.data();
    const auto& bv = bias.data();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) ov[i * cols + j] = xv[i * cols + j] + bv[j];
    }
    Tape* tape = OB::pick_tape(x, bias);
    if (!tape) return result;
    const int xn = x.node(), bn = bias.node();
    return OB::emit(tape, std::move(result), {xn, bn}, [=](Tape* tp, int self) {
        return [=]() {
            const auto& g = OB::out_grad(tp, self);
            if (xn >= 0) {
                auto& gx = OB::in_grad(tp, xn);
                for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
            }
            if (bn >= 0) {
                auto& gb = OB::in_grad(tp, bn);
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < cols; ++j) gb[j] += g[i * cols + j];
                }
            }
        };
    });
}

Tensor tile_rows(const Tensor& row, std::size_t b) {
    require_defined(row, "tile_rows");
    if (row.rank() != 1) throw DimensionError("tile_rows: expects rank 1, got " + shape_str(row.shape()));
    if (b == 0) throw DimensionError("tile_rows: row count must be positive");
    const std::size_t n = row.shape()[0];
    Tensor result(Shape{b, n}, 0.0);
    auto& ov = result.data();
    for (std::size_t i = 0; i < b; ++i) {
        std::copy(row.data().begin(), row.data().end(), ov.begin() + i * n);
    }
    Tape* tape = OB::pick_tape(row);
    if (!tape) return result;
    const int rn = row.node();
    return OB::emit(tape, std::move(result), {rn}, [=](Tape* tp, int self) {
        return [=]() {
            if (rn < 0) return;
            const auto& g = OB::out_grad(tp, self);
            auto& gr = OB::in_grad(tp, rn);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
            }
        };
    });
}

std::vector<std::size_t> argmax_rows(const Tensor& x) {
    require_defined(x, "argmax_rows");
    if (x.rank() == 1) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < x.shape()[0]; ++i) {
            if (x[i] > x[best]) best = i;
        }
        return {best};
    }
    if (x.rank() != 2) throw DimensionError("argmax_rows: expects rank 1 or 2, got " + shape_str(x.shape()));
    const std::size_t rows = x.shape()[0], cols = x.shape()[1];
    std::vector<std::size_t> out(rows, 0);
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < cols; ++j) {
            if (x.at2(i, j) > x.at2(i, best)) best = j;
        }
        out[i] = best;
    }
    return out;
}

}  // namespace gmvae
