#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "gael/tensor.hpp"

namespace gael::ad {

using ValueId = std::uint32_t;

// Primitive operations the tape understands. Everything the training
// objectives need and nothing more; shape rules are enforced at record time.
enum class OpKind {
    Leaf,
    Add,        // elementwise, equal shapes
    Sub,        // elementwise, equal shapes
    MulElem,    // elementwise, equal shapes
    MatMul,     // (m x k) * (k x n)
    Affine,     // X * W + row-broadcast bias
    Broadcast,  // row vector -> (rows x n)
    LeakyRelu,  // slope in scalar_arg
    Tanh,
    Exp,
    Log,       // rejects non-positive inputs
    Square,
    Softplus,  // log(1 + e^x), numerically stable
    Scale,     // multiply by constant in scalar_arg
    Sum,       // full reduction to a scalar
    Mean,      // full reduction to a scalar
};

// One recorded value: the op that produced it, its input ids, the stored
// result, and the gradient accumulated during backward.
struct Node {
    OpKind kind = OpKind::Leaf;
    ValueId a = 0, b = 0, c = 0;
    std::uint8_t arity = 0;
    double scalar_arg = 0.0;
    bool needs_grad = false;
    Tensor value;
    Tensor* bound = nullptr;    // parameter tensor to receive the gradient
    std::vector<double> grad;   // lazily sized to value.numel()
};

// Reverse-mode tape. Records a DAG of primitive ops in construction order
// (which is therefore topological), computes values eagerly, and walks the
// record backwards to accumulate gradients of a scalar root.
//
// Typical use per training step: build the graph, call backward(root), then
// read gradients off the bound parameter tensors.
class Tape {
public:
    // Unbound leaf (a copy of t). Gradients, if requested, are readable via
    // grad(id) but are not written back anywhere.
    ValueId leaf(const Tensor& t, bool requires_grad = false);

    // Bound parameter leaf: gradients accumulate into t.grad during
    // backward(). Repeated calls with the same tensor return the same node,
    // so a parameter used twice contributes one leaf with summed gradient.
    ValueId param(Tensor& t);

    ValueId add(ValueId x, ValueId y);
    ValueId sub(ValueId x, ValueId y);
    ValueId mul(ValueId x, ValueId y);
    ValueId matmul(ValueId x, ValueId y);
    ValueId affine(ValueId x, ValueId w, ValueId bias);
    ValueId broadcast(ValueId rowvec, std::size_t rows);
    ValueId leaky_relu(ValueId x, double slope);
    ValueId tanh(ValueId x);
    ValueId exp(ValueId x);
    ValueId log(ValueId x);
    ValueId square(ValueId x);
    ValueId softplus(ValueId x);
    ValueId scale(ValueId x, double c);
    ValueId sum(ValueId x);
    ValueId mean(ValueId x);

    const Tensor& value(ValueId id) const { return nodes_.at(id).value; }
    std::size_t size() const { return nodes_.size(); }

    // Gradient of the last backward() root w.r.t. node id (zeros if the
    // node does not influence the root).
    std::vector<double> grad(ValueId id) const;

    // Accumulates d(root)/d(leaf) into every reachable grad-requiring node,
    // and into t.grad for every bound parameter leaf. root must be scalar.
    void backward(ValueId root);

    // Recomputes every non-leaf value from its stored inputs and verifies
    // the results are bit-identical to what was recorded.
    bool replay_matches() const;

    void clear();

private:
    ValueId push(Node n);
    Tensor compute(const Node& n) const;
    const Node& node(ValueId id) const { return nodes_.at(id); }

    std::vector<Node> nodes_;
    std::unordered_map<const Tensor*, ValueId> bound_ids_;
};

// Stable scalar helpers shared by forward and backward paths.
double softplus_stable(double x);
double sigmoid_stable(double x);

}  // namespace gael::ad
