#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dgp/common.hpp"

namespace dgp {

enum class PrimKind : std::uint8_t {
  Add, Sub, Mul, Div,   // binary
  Sin, Cos, Exp, Log,   // unary
  Pass,                 // unary identity
  Var,                  // terminal, carries a variable ordinal
};

inline constexpr int arity_of(PrimKind k) {
  switch (k) {
    case PrimKind::Add:
    case PrimKind::Sub:
    case PrimKind::Mul:
    case PrimKind::Div:
      return 2;
    case PrimKind::Sin:
    case PrimKind::Cos:
    case PrimKind::Exp:
    case PrimKind::Log:
    case PrimKind::Pass:
      return 1;
    case PrimKind::Var:
      return 0;
  }
  return 0;
}

struct Primitive {
  PrimKind kind = PrimKind::Var;
  std::int32_t var = 0;  // only meaningful for Var

  int arity() const { return arity_of(kind); }
  bool is_terminal() const { return kind == PrimKind::Var; }
  bool operator==(const Primitive& o) const {
    return kind == o.kind && (kind != PrimKind::Var || var == o.var);
  }
};

inline Primitive prim(PrimKind k) { return Primitive{k, 0}; }
inline Primitive var(std::int32_t j) { return Primitive{PrimKind::Var, j}; }

/// Token used in prefix serialization ("+", "sin", "x3", ...).
std::string primitive_token(const Primitive& p);

/// Ordered primitive library. Column order defines the layout of node
/// weight rows, so it is part of a model's identity.
class PrimitiveSet {
 public:
  PrimitiveSet(std::vector<Primitive> prims, int dims);

  /// Functions in declaration order (add sub mul div sin cos exp log pass)
  /// followed by one terminal per input variable.
  static PrimitiveSet canonical(int dims);

  int size() const { return static_cast<int>(prims_.size()); }  // L
  int dims() const { return dims_; }                            // d
  const Primitive& at(int col) const { return prims_[static_cast<std::size_t>(col)]; }
  int column_of(const Primitive& p) const;  // -1 if absent
  std::span<const int> function_columns() const { return function_cols_; }
  std::span<const int> terminal_columns() const { return terminal_cols_; }
  int pass_column() const { return pass_col_; }  // -1 if absent

 private:
  std::vector<Primitive> prims_;
  std::vector<int> function_cols_;
  std::vector<int> terminal_cols_;
  int dims_ = 0;
  int pass_col_ = -1;
};

struct TreeNode {
  Primitive prim;
  std::int32_t parent = -1;
  std::array<std::int32_t, 2> child{-1, -1};
};

/// Expression tree over the primitive library. Nodes live in a flat vector;
/// indices are stable identifiers within one tree instance. Construction and
/// editing go through the builders below, which keep the structure valid:
/// child counts match arities, parent links are consistent, no cycles.
class SymbolicTree {
 public:
  SymbolicTree() = default;

  static SymbolicTree leaf(Primitive terminal);
  static SymbolicTree unary(Primitive fn, SymbolicTree child);
  static SymbolicTree binary(Primitive fn, SymbolicTree lhs, SymbolicTree rhs);

  /// Assembles from raw parts; throws ContractViolation if invalid.
  static SymbolicTree from_nodes(std::vector<TreeNode> nodes, int root);

  int size() const { return static_cast<int>(nodes_.size()); }
  int root() const { return root_; }
  const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::span<const TreeNode> nodes() const { return nodes_; }

  int depth() const;                 // single node has depth 0
  int depth_of(int i) const;         // distance from root
  int subtree_size(int i) const;
  std::vector<int> postorder() const;  // children before parents
  int max_var() const;               // largest variable ordinal used, -1 if none

  /// Copy of the subtree rooted at i, reindexed from 0.
  SymbolicTree subtree(int i) const;

  /// Copy with the subtree at index i replaced; the result is renumbered
  /// in preorder with root 0.
  SymbolicTree with_subtree(int i, const SymbolicTree& replacement) const;

  /// Preorder renumbering, root becomes index 0.
  SymbolicTree normalized() const;

  bool structurally_valid(std::string* why = nullptr) const;

 private:
  std::vector<TreeNode> nodes_;
  std::int32_t root_ = -1;
};

double apply_primitive(const Primitive& p, std::span<const double> inputs,
                       std::span<const double> x);

double evaluate_tree(const SymbolicTree& t, std::span<const double> x,
                     bool* protection_fired = nullptr);

/// Evaluates over a batch, one result per sample row of X.
void evaluate_tree_batch(const SymbolicTree& t, const ColMatrix& X,
                         std::span<double> out);

inline int tree_size(const SymbolicTree& t) { return t.size(); }

enum class GrowMethod { Grow, Full };

struct DepthRange {
  int min = 1;
  int max = 3;
};

/// Random tree in the ramped tradition: target depth uniform in the range,
/// Full places functions at every level above the target depth, Grow mixes
/// functions and terminals. Pass is never generated.
SymbolicTree random_tree(Rng& rng, const DepthRange& depth, GrowMethod method,
                         const PrimitiveSet& ps);

/// Removes identity Pass nodes until none remain. No other rewriting.
SymbolicTree simplify(const SymbolicTree& t);

struct Domain {
  std::vector<std::pair<double, double>> ranges;  // per variable
};

/// Compares two trees on a deterministic low-discrepancy grid over the
/// domain. Points where either tree trips an operator protection are
/// skipped; if more than half the points are skipped the comparison is
/// indeterminate and reported as not equivalent.
bool numeric_equiv(const SymbolicTree& a, const SymbolicTree& b,
                   const Domain& dom, Rng& rng);

std::string to_prefix(const SymbolicTree& t);

/// Inverse of to_prefix. Throws ContractViolation on malformed input.
SymbolicTree parse_prefix(std::string_view text);

}  // namespace dgp
