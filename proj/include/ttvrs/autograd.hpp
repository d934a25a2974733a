#pragma once

// Tape-free reverse-mode differentiation over Tensor values.
//
// Each op produces a Var whose node keeps its parents and a closure that
// pushes the node's gradient back into them. backward() walks the graph in
// reverse topological order from a scalar root. Nodes that do not depend on
// any parameter keep no parents, so inference-only forward passes build no
// graph beyond the values themselves.

#include "ttvrs/kernels.hpp"
#include "ttvrs/tensor.hpp"

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace ttvrs {

/// Raised when a cosine similarity or normalization meets a zero-norm vector.
class ZeroNormError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

namespace ag {

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    Tensor& grad_buffer();
    bool has_grad() const { return !grad.empty(); }
};

using NodePtr = std::shared_ptr<Node>;

class Var {
public:
    Var() = default;
    explicit Var(NodePtr node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    std::size_t size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }
    double item() const;

    /// Accumulated gradient; an all-zero tensor if nothing reached this node.
    Tensor grad() const;
    void zero_grad();

    /// Mutable access for optimizers and checkpoint loading on leaf nodes.
    Tensor& mutable_value() { return node_->value; }

    Node* node() const { return node_.get(); }
    const NodePtr& ptr() const { return node_; }
    explicit operator bool() const { return static_cast<bool>(node_); }

private:
    NodePtr node_;
};

Var constant(Tensor value);
Var parameter(Tensor value);

/// Builds an op node. `backward` runs only if some parent requires a gradient;
/// it reads self.grad and accumulates into parents' grad_buffer().
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Seeds d(root)/d(root) = 1 and accumulates into every reachable node.
void backward(const Var& root);

// Elementwise and structural ops. Vectors have shape {n}; matrices {m, n};
// rank-3 tensors are treated as {C, H*W} matrices where noted.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, const Var& s);  // s has one element
Var add_bias(const Var& x, const Var& b);    // x rows x cols, b {rows}
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var reshape(const Var& a, Shape shape);
Var sum(const Var& a);
Var mean(const Var& a);
Var mean_cols(const Var& x);                 // {rows}

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var linear(const Var& w, const Var& x, const Var& b);  // w m x n, x {n}, b {m} or empty Var

Var row(const Var& x, int i);
Var stack_rows(const std::vector<Var>& rows);
Var concat(const std::vector<Var>& vectors);
Var hcat(const std::vector<Var>& mats);      // same rows, columns appended
Var index(const Var& v, int i);
Var stack_scalars(const std::vector<Var>& scalars);

Var dot(const Var& a, const Var& b);
Var cosine(const Var& a, const Var& b);      // throws ZeroNormError
Var softmax(const Var& v);
Var row_softmax(const Var& x);

/// x: C x H x W, w: O x C x k x k, b: {O}. Returns O x Ho x Wo.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
/// x: C x h x w -> C x (h*s) x (w*s).
Var upsample_nearest(const Var& x, int s);

} // namespace ag
} // namespace ttvrs
