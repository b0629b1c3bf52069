#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "poac/tensor.hpp"

namespace poac::ad {

class Node;
using NodePtr = std::shared_ptr<Node>;
using AdjointMap = std::unordered_map<const Node*, Tensor>;

// One vertex of the reverse-mode graph. Nodes are created by the op
// constructors below and never mutated afterwards except for `grad`.
class Node {
public:
    Tensor value;
    Tensor grad;  // persistent accumulator, empty until backward reaches it
    std::string op;
    std::string name;  // non-empty only for named parameter leaves
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    // Pulls this node's adjoint into its parents' adjoints for one pass.
    std::function<void(const Node& self, const Tensor& adj, AdjointMap&)> backprop;

    bool grad_materialized() const { return grad.numel() != 0; }
    // Zero-sized until first touched; shape always matches value once set.
    Tensor& materialized_grad();
};

NodePtr leaf(Tensor v, std::string name = "", bool requires_grad = true);
NodePtr constant(Tensor v);

// Elementwise add/sub. Broadcasting is restricted to scalar-with-tensor and
// row-vector bias against a 2-D tensor; any other shape pair is a ShapeError.
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
// Elementwise product; same shape, or scalar on either side.
NodePtr mul(const NodePtr& a, const NodePtr& b);
// [m,k]x[k,n] -> [m,n]; 1-D operands are promoted to a row/column and the
// unit axis squeezed from the result.
NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr sum(const NodePtr& x);
NodePtr mean(const NodePtr& x);
NodePtr scale(const NodePtr& x, double c);
NodePtr tanh(const NodePtr& x);
NodePtr silu(const NodePtr& x);
NodePtr exp(const NodePtr& x);
// DomainError on any entry <= 0.
NodePtr log(const NodePtr& x);
// Last-axis softmax (1-D whole vector, 2-D per row), max-subtracted.
NodePtr softmax(const NodePtr& x);
// Embedding gather: table [V,d] + ids -> [n,d]. Backward scatter-adds.
NodePtr gather(const NodePtr& table, const std::vector<int>& ids);
// Concatenation along the last axis; 1-D or 2-D inputs of matching rank.
NodePtr concat(const std::vector<NodePtr>& xs);
// 1-D vector scaled to unit norm; DomainError when the norm is < 1e-12.
NodePtr l2_normalize(const NodePtr& x);
// Cosine similarity of two 1-D vectors -> scalar.
NodePtr cosine(const NodePtr& a, const NodePtr& b);
NodePtr square(const NodePtr& x);
NodePtr transpose(const NodePtr& x);

// Extra arguments for primitives that take more than tensors.
struct OpExtras {
    double scalar = 0.0;          // scale
    std::vector<int> indices;     // embedding-gather
};

// String-dispatched op constructor; the generic surface the gradient-check
// harness iterates over. Names: add, sub, mul, matmul, sum, mean, scale,
// tanh, silu, exp, log, softmax, embedding-gather, concat, l2-normalize,
// cosine, square, transpose.
NodePtr forward_op(const std::string& op, const std::vector<NodePtr>& inputs,
                   const OpExtras& extras = {});

// Reverse pass from a scalar root. Adjoints are computed in fresh per-call
// buffers and then added into each reachable node's persistent grad, so
// repeated calls without a reset accumulate. Returns the named-leaf grads.
std::map<std::string, Tensor> backward(const NodePtr& root);

// Clears the persistent grad of every node reachable from root.
void zero_grad(const NodePtr& root);

// Nodes in dependency order (every parent before the nodes that consume it).
std::vector<Node*> topo_order(const NodePtr& root);

}  // namespace poac::ad
