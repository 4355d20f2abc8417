#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dgp/common.hpp"
#include "dgp/dst.hpp"

namespace dgp {

struct SampleConfig {
  double temperature = 1.0;  // applied to logits before sampling
  int max_nodes = 64;
  int max_depth = 8;
};

struct GeneticConfig {
  double crossover_rate = 0.5;
  double mutation_rate = 0.5;
  int tournament_size = 3;
  int generations_per_iteration = 20;
  DepthRange mutate_depth{0, 2};
  int max_nodes = 64;
  int max_depth = 8;
};

/// Discretizes a trained DST: per node (children first), draw a primitive
/// from softmax(logits/temperature) and apply the edit its arity implies.
/// Arity up: EXPAND (existing children stay as first operands, fresh random
/// terminal leaves fill the rest; draws that would break the caps are
/// re-drawn among non-expanding primitives). Arity equal: REPLACE, except
/// Pass at a function node, which SHRINKs. Arity down: a drawn terminal
/// replaces the whole subtree; a drawn unary at a binary node SHRINKs, the
/// child with the stronger adjacency edge surviving.
SymbolicTree sample_tree(const DiffSymbolicTree& dst, Rng& rng,
                         const SampleConfig& cfg);

/// Deletes function node i. Unary: the child takes its place. Binary: the
/// child with the greater strength survives (ties: lower index), the other
/// subtree is discarded. strengths[c] is the parent-edge strength of node c;
/// it may be empty for a unary shrink. Shrinking the root re-roots.
SymbolicTree shrink(const SymbolicTree& t, int i,
                    std::span<const double> strengths);

/// Swaps the primitive of node i; arities must match.
SymbolicTree replace(const SymbolicTree& t, int i, Primitive p);

/// Raises node i's arity to p's, keeping existing children as the first
/// operands and filling missing slots with random terminal leaves from ps.
/// Returns nothing when the result would exceed the caps.
std::optional<SymbolicTree> expand(const SymbolicTree& t, int i, Primitive p,
                                   Rng& rng, const PrimitiveSet& ps,
                                   int max_nodes, int max_depth);

/// One-point subtree exchange; an offspring that violates the caps is
/// replaced by its own unmodified parent.
std::pair<SymbolicTree, SymbolicTree> crossover_one_point(
    const SymbolicTree& a, const SymbolicTree& b, Rng& rng,
    const GeneticConfig& gc);

/// Replaces a uniformly chosen node's subtree with a random grow tree of
/// depth in gc.mutate_depth; cap violations revert to the input tree.
SymbolicTree mutate_uniform(const SymbolicTree& t, Rng& rng,
                            const GeneticConfig& gc, const PrimitiveSet& ps);

struct Individual {
  SymbolicTree tree;
  double fitness = std::numeric_limits<double>::infinity();  // training NRMSE
};

/// Evaluates fitness (training NRMSE) for a batch of trees into out, which
/// arrives sized to match. Returns how many leading entries were actually
/// evaluated; a short count means the evaluation budget ran out and entries
/// from that index on must be ignored.
using BatchEvaluator = std::function<std::size_t(
    const std::vector<const SymbolicTree*>&, std::vector<double>&)>;

/// Runs generations of tournament selection, one-point crossover, uniform
/// mutation, and generational replacement with a single elite. Only modified
/// offspring are re-evaluated. Stops after the configured generations, when
/// the evaluator reports budget exhaustion, or once the pool's best fitness
/// drops below stop_below.
std::vector<Individual> diversify(std::vector<Individual> pool,
                                  const GeneticConfig& gc,
                                  const PrimitiveSet& ps,
                                  const BatchEvaluator& evaluate, Rng& rng,
                                  std::optional<double> stop_below = {});

}  // namespace dgp
