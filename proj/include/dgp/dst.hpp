#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dgp/common.hpp"
#include "dgp/expr.hpp"

namespace dgp {

struct InitConfig {
  double hot_logit = 4.0;   // logit given to a node's own primitive column
  double edge_logit = 2.0;  // initial logit of every tree edge
  bool scale_binary_inputs = true;
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// K×L logit matrix; softmaxed rows are per-node distributions over the
/// primitive library.
class NodeMatrix {
 public:
  NodeMatrix() = default;
  NodeMatrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        logits_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::span<double> row(int i) {
    return {logits_.data() + static_cast<std::size_t>(i) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int i) const {
    return {logits_.data() + static_cast<std::size_t>(i) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<double> flat() { return logits_; }
  std::span<const double> flat() const { return logits_; }

  /// Writes softmax(row i) into out (size L). Numerically stabilized.
  void softmax_row(int i, std::span<double> out) const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> logits_;
};

/// Edge strengths for a fixed tree. Conceptually a K×K matrix with sigmoid
/// entries on tree edges and zeros elsewhere; since every non-root node has
/// exactly one parent, it is stored as one logit per non-root node.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  AdjacencyMatrix(const SymbolicTree& t, double init_logit);

  int nodes() const { return static_cast<int>(logits_.size()); }
  int root() const { return root_; }
  bool has_edge(int child) const { return child != root_; }

  double logit(int child) const;
  void set_logit(int child, double v);
  /// sigmoid(logit) of the child->parent edge.
  double strength(int child) const;
  /// Dense-matrix view: strength if (child,parent) is a tree edge, else 0.
  double strength_between(int child, int parent, const SymbolicTree& t) const;

  std::span<double> flat() { return logits_; }  // root slot inert
  std::span<const double> flat() const { return logits_; }

 private:
  int root_ = -1;
  std::vector<double> logits_;
};

/// A symbolic tree relaxed into a differentiable mixture model: fixed
/// topology, learnable node identities and edge strengths.
class DiffSymbolicTree {
 public:
  DiffSymbolicTree(SymbolicTree tree, PrimitiveSet ps, const InitConfig& cfg);

  const SymbolicTree& tree() const { return tree_; }
  const PrimitiveSet& prims() const { return ps_; }
  NodeMatrix& nodes() { return nm_; }
  const NodeMatrix& nodes() const { return nm_; }
  AdjacencyMatrix& adjacency() { return adj_; }
  const AdjacencyMatrix& adjacency() const { return adj_; }
  int node_count() const { return tree_.size(); }
  bool scale_binary_inputs() const { return scale_binary_inputs_; }
  /// Children-before-parents evaluation order.
  std::span<const int> eval_order() const { return eval_order_; }

 private:
  SymbolicTree tree_;  // normalized: preorder indices, root 0
  PrimitiveSet ps_;
  NodeMatrix nm_;
  AdjacencyMatrix adj_;
  std::vector<int> eval_order_;
  bool scale_binary_inputs_ = true;
};

/// Lifts a discrete tree into a DST: each node's row gets hot_logit on its
/// own primitive column and 0 elsewhere; each edge gets edge_logit.
DiffSymbolicTree relax(const SymbolicTree& t, const PrimitiveSet& ps,
                       const InitConfig& cfg);

/// Everything the backward pass needs from a forward pass: per-node batch
/// outputs, softmaxed weights, edge strengths, and the frozen branch choices
/// (leaf phantom inputs, unary source child).
struct ForwardTrace {
  int nodes = 0;
  int prims = 0;
  std::size_t batch = 0;
  std::vector<double> r;  // nodes × batch node outputs
  std::vector<double> W;  // nodes × prims softmaxed weights
  std::vector<double> A;  // per-node parent-edge strength (root slot 0)
  std::vector<std::int32_t> t1, t2;      // leaf phantom input columns, -1 off leaves
  std::vector<std::int32_t> unary_slot;  // child slot feeding unary ops, -1 on leaves
  std::vector<double> scratch;

  double* node_out(int i) { return r.data() + static_cast<std::size_t>(i) * batch; }
  const double* node_out(int i) const {
    return r.data() + static_cast<std::size_t>(i) * batch;
  }
  double* w_row(int i) { return W.data() + static_cast<std::size_t>(i) * prims; }
  const double* w_row(int i) const {
    return W.data() + static_cast<std::size_t>(i) * prims;
  }
  std::span<const double> yhat(const DiffSymbolicTree& dst) const {
    return {node_out(dst.tree().root()), batch};
  }
};

/// Batched forward pass over X (one sample per row). Kernel-accelerated;
/// must agree with per-sample mix_node composition to the last bit.
void forward_batch(const DiffSymbolicTree& dst, const ColMatrix& X,
                   ForwardTrace& trace);

/// Single mixing node on one sample: weighted sum of every primitive applied
/// to arity-adapted inputs. child_values are raw (unscaled) child outputs in
/// slot order; w is the node's softmaxed weight row.
double mix_node(const DiffSymbolicTree& dst, int i, std::span<const double> w,
                std::span<const double> child_values, std::span<const double> x);

/// Scalar reference forward pass composed from mix_node calls.
double forward_one(const DiffSymbolicTree& dst, std::span<const double> x);

/// Human-readable parameter report for debugging.
std::string dump(const DiffSymbolicTree& dst);

}  // namespace dgp
