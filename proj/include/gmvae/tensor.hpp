#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gmvae/error.hpp"

namespace gmvae {

class Tape;

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense row-major tensor of doubles. A tensor is either a constant
// (node() < 0) or the output of a tape node, in which case backward()
// on its tape propagates gradients through it.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor filled(Shape shape, double v) { return Tensor(std::move(shape), v); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_ ? data_->size() : 0; }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    bool defined() const { return data_ != nullptr; }
    bool is_scalar() const { return numel() == 1; }

    double item() const;

    double operator[](std::size_t i) const { return (*data_)[i]; }
    double& operator[](std::size_t i) { return (*data_)[i]; }
    double at2(std::size_t r, std::size_t c) const { return (*data_)[r * shape_[1] + c]; }

    const std::vector<double>& data() const { return *data_; }
    std::vector<double>& data() { return *data_; }
    const std::shared_ptr<std::vector<double>>& storage() const { return data_; }

    Tape* tape() const { return tape_; }
    int node() const { return node_; }

private:
    Shape shape_;
    std::shared_ptr<std::vector<double>> data_;
    Tape* tape_ = nullptr;
    int node_ = -1;

    friend class Tape;
};

// Named trainable tensor with a persistent gradient accumulator.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape())) {}

    void zero_grad() { std::fill(grad.data().begin(), grad.data().end(), 0.0); }
};

// Reverse-mode tape. Built per forward pass: operations append nodes in
// topological order; backward() sweeps them once in reverse and then marks
// the tape consumed. A Tape is not copyable or movable (nodes capture its
// address) and is used by one thread at a time.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Registers a parameter as a leaf; gradients accumulate into p.grad.
    Tensor watch(Parameter& p);

    // loss must be a scalar living on this tape.
    void backward(const Tensor& loss);

    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }
    const std::vector<int>& inputs_of(int node) const { return nodes_.at(node).inputs; }

private:
    struct Node {
        std::vector<int> inputs;
        std::size_t numel = 0;
        std::vector<double> grad;              // lazily allocated during backward
        std::function<void()> backprop;        // empty for leaves and constants
        Parameter* param = nullptr;
    };

    int push(std::size_t numel, std::vector<int> inputs);
    std::vector<double>& grad(int node);
    bool has_grad(int node) const { return !nodes_[node].grad.empty(); }
    void add_grad(int node, std::size_t i, double v);
    void set_backprop(int node, std::function<void()> fn) { nodes_[node].backprop = std::move(fn); }
    Tensor bind(Tensor t, int node);

    std::vector<Node> nodes_;
    bool consumed_ = false;

    friend Tape* common_tape(const Tensor&, const Tensor&);
    friend struct OpBuilder;
};

// ---- differentiable operations ------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

// binary elementwise; shapes must match exactly, or one operand may be a
// scalar (numel 1). No other broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor neg(const Tensor& x);
Tensor relu(const Tensor& x);   // derivative at 0 defined as 0
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);

// affine helpers over constants
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);

// numerically stable x - max - log(sum(exp(x - max))) along axis
Tensor log_softmax(const Tensor& x, int axis);

// axis == nullopt reduces over all elements to a rank-0 scalar
Tensor reduce_sum(const Tensor& x, std::optional<int> axis = std::nullopt);
Tensor reduce_mean(const Tensor& x, std::optional<int> axis = std::nullopt);

Tensor concat(const Tensor& a, const Tensor& b, int axis);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor one_hot(std::size_t index, std::size_t k);

Tensor reshape(const Tensor& x, Shape shape);
// columns [c0, c1) of a rank-2 tensor
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);
// x: [m x n], bias: [n], added to every row
Tensor add_bias(const Tensor& x, const Tensor& bias);
// stack b copies of a rank-1 row into [b x n]
Tensor tile_rows(const Tensor& row, std::size_t b);

// ---- non-differentiable helpers ------------------------------------------

std::vector<std::size_t> argmax_rows(const Tensor& x);  // ties -> lowest index

}  // namespace gmvae
