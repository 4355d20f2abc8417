#include "dgp/grad.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "dgp/kernels.hpp"

namespace dgp {

namespace {

inline double sentinel(double v) {
  return std::isfinite(v) ? v : kNonFiniteSentinel;
}

// Population standard deviation, divisor n.
double sigma_pop(std::span<const double> y) {
  const std::size_t n = y.size();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  return std::sqrt(var);
}

double rmse_with_sentinel(std::span<const double> y, std::span<const double> yhat) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = y[i] - sentinel(yhat[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(y.size()));
}

}  // namespace

double nrmse(std::span<const double> y, std::span<const double> yhat) {
  DGP_CHECK(y.size() == yhat.size(), "nrmse: length mismatch");
  DGP_CHECK(y.size() >= 2, "nrmse: need at least 2 samples");
  double sigma = sigma_pop(y);
  if (sigma == 0.0) throw DegenerateTargetError("degenerate target: constant y");
  return rmse_with_sentinel(y, yhat) / sigma;
}

double loss_01_row(std::span<const double> w) {
  double acc = 0.0;
  for (double v : w) acc += (v - 0.5) * (v - 0.5);
  return -acc / static_cast<double>(w.size());
}

double loss_01(const DiffSymbolicTree& dst) {
  const int k = dst.node_count();
  std::vector<double> w(static_cast<std::size_t>(dst.prims().size()), 0.0);
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    dst.nodes().softmax_row(i, w);
    acc += loss_01_row(w);
  }
  return acc / static_cast<double>(k);
}

LossParts forward_loss(const DiffSymbolicTree& dst, const ColMatrix& X,
                       std::span<const double> y, const LossConfig& lc,
                       ForwardTrace& trace) {
  DGP_CHECK(y.size() == X.rows, "forward_loss: target length mismatch");
  forward_batch(dst, X, trace);
  LossParts parts;
  parts.nrmse = nrmse(y, trace.yhat(dst));
  double acc = 0.0;
  const int l = trace.prims;
  for (int i = 0; i < trace.nodes; ++i)
    acc += loss_01_row({trace.w_row(i), static_cast<std::size_t>(l)});
  parts.loss01 = acc / static_cast<double>(trace.nodes);
  parts.total = parts.nrmse + lc.lambda_01 * parts.loss01;
  return parts;
}

LossParts total_loss(const DiffSymbolicTree& dst, const ColMatrix& X,
                     std::span<const double> y, const LossConfig& lc) {
  ForwardTrace trace;
  return forward_loss(dst, X, y, lc, trace);
}

void backward(const DiffSymbolicTree& dst, const ForwardTrace& trace,
              const ColMatrix& X, std::span<const double> y,
              const LossConfig& lc, Gradients& out) {
  const std::size_t n = trace.batch;
  const int k = trace.nodes;
  const int l = trace.prims;
  DGP_CHECK(k == dst.node_count() && l == dst.prims().size(),
            "backward: trace does not match DST");
  DGP_CHECK(X.rows == n && y.size() == n, "backward: batch mismatch");
  const PrimitiveSet& ps = dst.prims();
  const auto& ops = kern::ops();
  const bool scaled = dst.scale_binary_inputs();

  out.node.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(l), 0.0);
  out.edge.assign(static_cast<std::size_t>(k), 0.0);

  // Gradient of NRMSE w.r.t. each prediction. Zero where the prediction was
  // replaced by the sentinel (constant) and zero everywhere when RMSE is 0.
  std::vector<double> g(static_cast<std::size_t>(k) * n, 0.0);
  auto grow = [&](int i) { return g.data() + static_cast<std::size_t>(i) * n; };
  {
    std::span<const double> yhat = trace.yhat(dst);
    double sigma = sigma_pop(y);
    if (sigma == 0.0) throw DegenerateTargetError("degenerate target: constant y");
    double r = rmse_with_sentinel(y, yhat);
    if (r > 0.0) {
      double* groot = grow(dst.tree().root());
      double denom = sigma * static_cast<double>(n) * r;
      for (std::size_t s = 0; s < n; ++s)
        if (std::isfinite(yhat[s])) groot[s] = (yhat[s] - y[s]) / denom;
    }
  }

  std::vector<double> su1(n), su2(n), val(n), tmp(n);
  std::vector<double> gb1(n), gb2(n), gu(n);
  std::vector<double> gw(static_cast<std::size_t>(l), 0.0);

  auto eorder = dst.eval_order();
  for (auto it = eorder.rbegin(); it != eorder.rend(); ++it) {
    const int i = *it;
    const double* go = grow(i);
    const double* w = trace.w_row(i);
    const TreeNode& nd = dst.tree().node(i);
    const int a = nd.prim.arity();

    // reconstruct this node's inputs exactly as the forward pass saw them
    const double* uu = nullptr;
    const double* bb1 = nullptr;
    const double* bb2 = nullptr;
    const double* r1 = nullptr;
    const double* r2 = nullptr;
    int c1 = -1, c2 = -1, slot = -1;
    if (a == 0) {
      uu = X.col(static_cast<std::size_t>(
          ps.at(trace.t1[static_cast<std::size_t>(i)]).var));
      bb1 = uu;
      bb2 = X.col(static_cast<std::size_t>(
          ps.at(trace.t2[static_cast<std::size_t>(i)]).var));
    } else if (a == 1) {
      c1 = nd.child[0];
      r1 = trace.node_out(c1);
      ops.scale(trace.A[static_cast<std::size_t>(c1)], r1, su1.data(), n);
      uu = su1.data();
      bb1 = scaled ? su1.data() : r1;
      bb2 = bb1;
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gu.begin(), gu.end(), 0.0);
    } else {
      c1 = nd.child[0];
      c2 = nd.child[1];
      r1 = trace.node_out(c1);
      r2 = trace.node_out(c2);
      ops.scale(trace.A[static_cast<std::size_t>(c1)], r1, su1.data(), n);
      ops.scale(trace.A[static_cast<std::size_t>(c2)], r2, su2.data(), n);
      slot = trace.unary_slot[static_cast<std::size_t>(i)];
      uu = slot == 0 ? su1.data() : su2.data();
      bb1 = scaled ? su1.data() : r1;
      bb2 = scaled ? su2.data() : r2;
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);
      std::fill(gu.begin(), gu.end(), 0.0);
    }

    for (int j = 0; j < l; ++j) {
      const Primitive& p = ps.at(j);
      const double wj = w[j];
      switch (p.kind) {
        case PrimKind::Var:
          gw[static_cast<std::size_t>(j)] =
              ops.dot(go, X.col(static_cast<std::size_t>(p.var)), n);
          break;
        case PrimKind::Pass:
          gw[static_cast<std::size_t>(j)] = ops.dot(go, uu, n);
          if (a > 0) ops.axpy(wj, go, gu.data(), n);
          break;
        case PrimKind::Sin:
          for (std::size_t s = 0; s < n; ++s) val[s] = std::sin(uu[s]);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a > 0) {
            for (std::size_t s = 0; s < n; ++s) tmp[s] = std::cos(uu[s]);
            ops.xyacc(wj, go, tmp.data(), gu.data(), n);
          }
          break;
        case PrimKind::Cos:
          for (std::size_t s = 0; s < n; ++s) val[s] = std::cos(uu[s]);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a > 0) {
            for (std::size_t s = 0; s < n; ++s) tmp[s] = -std::sin(uu[s]);
            ops.xyacc(wj, go, tmp.data(), gu.data(), n);
          }
          break;
        case PrimKind::Exp:
          for (std::size_t s = 0; s < n; ++s) val[s] = kern::clamped_exp(uu[s]);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a > 0) {
            for (std::size_t s = 0; s < n; ++s) tmp[s] = kern::d_clamped_exp(uu[s]);
            ops.xyacc(wj, go, tmp.data(), gu.data(), n);
          }
          break;
        case PrimKind::Log:
          for (std::size_t s = 0; s < n; ++s) val[s] = kern::protected_log(uu[s]);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a > 0) {
            for (std::size_t s = 0; s < n; ++s) tmp[s] = kern::d_protected_log(uu[s]);
            ops.xyacc(wj, go, tmp.data(), gu.data(), n);
          }
          break;
        case PrimKind::Add:
          ops.add(bb1, bb2, val.data(), n);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a == 1) {
            ops.axpy(2.0 * wj, go, gb1.data(), n);
          } else if (a == 2) {
            ops.axpy(wj, go, gb1.data(), n);
            ops.axpy(wj, go, gb2.data(), n);
          }
          break;
        case PrimKind::Sub:
          ops.sub(bb1, bb2, val.data(), n);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a == 2) {
            ops.axpy(wj, go, gb1.data(), n);
            ops.axpy(-wj, go, gb2.data(), n);
          }
          // arity 1: d(b-b)/db = 0, nothing to push
          break;
        case PrimKind::Mul:
          ops.mul(bb1, bb2, val.data(), n);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a == 1) {
            ops.xyacc(2.0 * wj, go, bb1, gb1.data(), n);
          } else if (a == 2) {
            ops.xyacc(wj, go, bb2, gb1.data(), n);
            ops.xyacc(wj, go, bb1, gb2.data(), n);
          }
          break;
        case PrimKind::Div:
          ops.div_p(bb1, bb2, val.data(), n);
          gw[static_cast<std::size_t>(j)] = ops.dot(go, val.data(), n);
          if (a == 1) {
            ops.div_p_bwd(wj, go, bb1, bb2, gb1.data(), gb1.data(), n);
          } else if (a == 2) {
            ops.div_p_bwd(wj, go, bb1, bb2, gb1.data(), gb2.data(), n);
          }
          break;
      }
    }

    // push input gradients into children and edge logits
    if (a == 1) {
      double ga;
      double* gc = grow(c1);
      double a1 = trace.A[static_cast<std::size_t>(c1)];
      if (scaled) {
        ops.axpy(1.0, gu.data(), gb1.data(), n);  // both paths in scaled units
        ops.axpy(a1, gb1.data(), gc, n);
        ga = ops.dot(gb1.data(), r1, n);
      } else {
        ops.axpy(1.0, gb1.data(), gc, n);
        ops.axpy(a1, gu.data(), gc, n);
        ga = ops.dot(gu.data(), r1, n);
      }
      out.edge[static_cast<std::size_t>(c1)] += ga * a1 * (1.0 - a1);
    } else if (a == 2) {
      double a1 = trace.A[static_cast<std::size_t>(c1)];
      double a2 = trace.A[static_cast<std::size_t>(c2)];
      double ga1 = 0.0, ga2 = 0.0;
      if (scaled) {
        if (slot == 0)
          ops.axpy(1.0, gu.data(), gb1.data(), n);
        else
          ops.axpy(1.0, gu.data(), gb2.data(), n);
        ops.axpy(a1, gb1.data(), grow(c1), n);
        ops.axpy(a2, gb2.data(), grow(c2), n);
        ga1 = ops.dot(gb1.data(), r1, n);
        ga2 = ops.dot(gb2.data(), r2, n);
      } else {
        ops.axpy(1.0, gb1.data(), grow(c1), n);
        ops.axpy(1.0, gb2.data(), grow(c2), n);
        if (slot == 0) {
          ops.axpy(a1, gu.data(), grow(c1), n);
          ga1 = ops.dot(gu.data(), r1, n);
        } else {
          ops.axpy(a2, gu.data(), grow(c2), n);
          ga2 = ops.dot(gu.data(), r2, n);
        }
      }
      out.edge[static_cast<std::size_t>(c1)] += ga1 * a1 * (1.0 - a1);
      out.edge[static_cast<std::size_t>(c2)] += ga2 * a2 * (1.0 - a2);
    }

    // penalty term, then the softmax Jacobian back to logits
    double lam = -2.0 * lc.lambda_01 /
                 (static_cast<double>(k) * static_cast<double>(l));
    for (int j = 0; j < l; ++j)
      gw[static_cast<std::size_t>(j)] += lam * (w[j] - 0.5);
    double wg = ops.dot(gw.data(), w, static_cast<std::size_t>(l));
    double* gnode = out.node.data() + static_cast<std::size_t>(i) * l;
    for (int j = 0; j < l; ++j)
      gnode[j] = w[j] * (gw[static_cast<std::size_t>(j)] - wg);
  }
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, const TrainConfig& tc) {
  DGP_CHECK(params.size() == grads.size(), "adam_step: size mismatch");
  if (state.m.size() != params.size()) state.reset(params.size());
  state.step += 1;
  double bc1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(state.step));
  kern::ops().adam(params.data(), grads.data(), state.m.data(), state.v.data(),
                   params.size(), lr, tc.adam_beta1, tc.adam_beta2, tc.adam_eps,
                   bc1, bc2);
}

TrainLog train_dst(DiffSymbolicTree& dst, const ColMatrix& Xtrain,
                   std::span<const double> ytrain, const TrainConfig& tc,
                   const LossConfig& lc, Rng& rng) {
  const std::size_t n = Xtrain.rows;
  DGP_CHECK(ytrain.size() == n, "train_dst: target length mismatch");
  DGP_CHECK(n >= 2, "train_dst: need at least 2 training samples");
  DGP_CHECK(tc.epochs >= 0 && tc.batch_size >= 1 && tc.batches_per_epoch >= 1,
            "train_dst: bad train config");
  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(tc.batch_size), n);
  const std::size_t d = Xtrain.cols;

  AdamState st_node, st_edge;
  st_node.reset(dst.nodes().flat().size());
  st_edge.reset(dst.adjacency().flat().size());

  ForwardTrace trace;
  Gradients grads;
  ColMatrix Xb(nb, d);
  std::vector<double> yb(nb);
  std::vector<std::size_t> idx(n);

  TrainLog log;
  log.history.reserve(static_cast<std::size_t>(tc.epochs));
  for (int e = 0; e < tc.epochs; ++e) {
    LossParts last{};
    for (int b = 0; b < tc.batches_per_epoch; ++b) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      for (std::size_t t = 0; t < nb; ++t) {
        std::size_t j = t + rng.index(n - t);
        std::swap(idx[t], idx[j]);
      }
      for (std::size_t c = 0; c < d; ++c) {
        const double* src = Xtrain.col(c);
        double* dstc = Xb.col(c);
        for (std::size_t s = 0; s < nb; ++s) dstc[s] = src[idx[s]];
      }
      for (std::size_t s = 0; s < nb; ++s) yb[s] = ytrain[idx[s]];

      last = forward_loss(dst, Xb, yb, lc, trace);
      backward(dst, trace, Xb, yb, lc, grads);

      double s2 = 0.0;
      for (double v : grads.node) s2 += v * v;
      for (double v : grads.edge) s2 += v * v;
      double norm = std::sqrt(s2);
      // div/exp mixtures can emit finite but astronomically large gradients
      // (1e20 and beyond); one such step parks Adam's second moment there and
      // freezes training for the rest of the run. Rescaling to a sane global
      // norm keeps the direction, and a non-finite norm means the step
      // carries no usable direction at all, so it is dropped.
      if (std::isfinite(norm)) {
        if (norm > kGradNormClip) {
          double sc = kGradNormClip / norm;
          for (double& v : grads.node) v *= sc;
          for (double& v : grads.edge) v *= sc;
        }
        adam_step(dst.nodes().flat(), grads.node, st_node, tc.lr_node, tc);
        adam_step(dst.adjacency().flat(), grads.edge, st_edge, tc.lr_edge, tc);
      }
    }
    log.history.push_back({e, last});
  }
  return log;
}

void write_loss_csv(std::ostream& os, const TrainLog& log) {
  os << "epoch,nrmse,loss01,total\n";
  os << std::setprecision(17);
  for (const EpochRecord& r : log.history)
    os << r.epoch << ',' << r.loss.nrmse << ',' << r.loss.loss01 << ','
       << r.loss.total << '\n';
}

}  // namespace dgp
