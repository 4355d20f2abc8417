#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "dgp/common.hpp"
#include "dgp/dst.hpp"

namespace dgp {

class DegenerateTargetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNonFiniteSentinel = 1e12;

// Global L2 cap applied to the (node, edge) gradient inside train_dst before
// each Adam update. Protected div/exp mixtures occasionally emit finite
// gradients of order 1e20+; without the cap a single such step dominates the
// second-moment accumulator for the rest of the run. Healthy steps sit well
// below the cap and are untouched.
inline constexpr double kGradNormClip = 10.0;

struct LossConfig {
  double lambda_01 = 0.1;
};

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 256;  // effective size is min(n_train, batch_size)
  int batches_per_epoch = 1;
  double lr_node = 0.005;
  double lr_edge = 0.005;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// RMSE divided by the population standard deviation of y (divisor n).
/// Non-finite predictions are replaced by a large sentinel so the loss stays
/// finite. Throws DegenerateTargetError when y is constant.
double nrmse(std::span<const double> y, std::span<const double> yhat);

/// -(1/L)·Σ_j (w_j - 0.5)² for one softmaxed row. In [-0.25, 0].
double loss_01_row(std::span<const double> w);

/// Mean of loss_01_row over all node rows of the DST.
double loss_01(const DiffSymbolicTree& dst);

struct LossParts {
  double nrmse = 0.0;
  double loss01 = 0.0;
  double total = 0.0;
};

/// Forward pass plus composite loss, recording the trace needed by backward.
LossParts forward_loss(const DiffSymbolicTree& dst, const ColMatrix& X,
                       std::span<const double> y, const LossConfig& lc,
                       ForwardTrace& trace);

/// Loss only (convenience; runs forward_loss on a private trace).
LossParts total_loss(const DiffSymbolicTree& dst, const ColMatrix& X,
                     std::span<const double> y, const LossConfig& lc);

struct Gradients {
  std::vector<double> node;  // K×L, laid out like NodeMatrix
  std::vector<double> edge;  // K, root slot stays zero
};

/// Reverse-mode gradients of the composite loss with respect to every node
/// logit and edge logit, seeded with d(loss)=1. The trace must come from a
/// forward_loss on the same DST and the same batch (X, y).
void backward(const DiffSymbolicTree& dst, const ForwardTrace& trace,
              const ColMatrix& X, std::span<const double> y,
              const LossConfig& lc, Gradients& out);

struct AdamState {
  std::vector<double> m, v;
  std::int64_t step = 0;

  void reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    step = 0;
  }
};

/// One bias-corrected Adam descent update; advances state.step.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, const TrainConfig& tc);

struct EpochRecord {
  int epoch = 0;
  LossParts loss;
};

struct TrainLog {
  std::vector<EpochRecord> history;
};

/// Trains the DST in place: per epoch, draw one shuffled batch of
/// min(n_train, batch_size) samples, run forward/loss/backward and Adam
/// updates on node and edge logits. Deterministic for a given rng state.
TrainLog train_dst(DiffSymbolicTree& dst, const ColMatrix& Xtrain,
                   std::span<const double> ytrain, const TrainConfig& tc,
                   const LossConfig& lc, Rng& rng);

/// CSV export of a loss trajectory: epoch,nrmse,loss01,total.
void write_loss_csv(std::ostream& os, const TrainLog& log);

}  // namespace dgp
