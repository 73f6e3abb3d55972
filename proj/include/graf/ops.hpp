#pragma once

// Differentiable operators over Tape variables. Each operator computes its
// forward value eagerly and records a closure that maps the output gradient
// onto the inputs that require one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "graf/arcs.hpp"
#include "graf/seed.hpp"
#include "graf/tensor.hpp"

namespace graf::ops {

inline constexpr double kDefaultLeakySlope = 0.2;

namespace detail {

inline Tape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw UsageError("operands recorded on different tapes");
  return a.tape();
}

inline void add_into(Tensor& dst, std::span<const double> src) {
  auto d = dst.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

template <class Fwd, class Deriv>
Var elementwise(const Var& x, Fwd fwd, Deriv deriv) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  const std::size_t xi = x.id();
  return tape.record(std::move(out), x.requires_grad(), [xi, deriv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& in = t.value(xi);
    const Tensor& y = t.value(self);
    Tensor& dx = t.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * deriv(in[i], y[i]);
  });
}

inline void check_arcs(const ArcList& arcs, std::size_t n, const char* op) {
  if (arcs.row.size() != arcs.col.size()) throw ShapeError(std::string(op) + ": ragged arc list");
  for (std::size_t e = 0; e < arcs.size(); ++e) {
    if (arcs.row[e] >= n || arcs.col[e] >= n) {
      throw IndexError(std::string(op) + ": arc (" + std::to_string(arcs.row[e]) + "," +
                       std::to_string(arcs.col[e]) + ") outside " + std::to_string(n) + " nodes");
    }
  }
}

}  // namespace detail

/// Dense product a[m x k] * b[k x n]. Zero entries of `a` are skipped, which
/// makes bag-of-words feature matrices cheap.
inline Var matmul(const Var& a, const Var& b) {
  Tape& tape = detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + to_string(av.shape()) + " x " +
                     to_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av(i, p);
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  const std::size_t ai = a.id(), bi = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return tape.record(std::move(out), ra || rb, [ai, bi, ra, rb, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(ai);
    const Tensor& B = t.value(bi);
    if (ra) {
      Tensor& dA = t.grad(ai);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = B.data() + p * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          dA(i, p) += s;
        }
      }
    }
    if (rb) {
      Tensor& dB = t.grad(bi);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A(i, p);
          if (aip == 0.0) continue;
          double* drow = dB.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) drow[j] += aip * grow[j];
        }
      }
    }
  });
}

/// x[n x c] + bias[1 x c] broadcast over rows.
inline Var add_bias(const Var& x, const Var& bias) {
  Tape& tape = detail::same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("add_bias: bias " + to_string(bv.shape()) + " does not fit " + to_string(xv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv[j];
  }
  const std::size_t xi = x.id(), bi = bias.id();
  const bool rx = x.requires_grad(), rbias = bias.requires_grad();
  return tape.record(std::move(out), rx || rbias, [xi, bi, rx, rbias](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (rx) detail::add_into(t.grad(xi), g.values());
    if (rbias) {
      Tensor& db = t.grad(bi);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) db[j] += g(i, j);
      }
    }
  });
}

inline Var add(const Var& a, const Var& b) {
  Tape& tape = detail::same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  Tensor out = a.value();
  detail::add_into(out, b.value().values());
  const std::size_t ai = a.id(), bi = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return tape.record(std::move(out), ra || rb, [ai, bi, ra, rb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (ra) detail::add_into(t.grad(ai), g.values());
    if (rb) detail::add_into(t.grad(bi), g.values());
  });
}

/// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  Tape& tape = detail::same_tape(a, b);
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  const bool ra = a.requires_grad(), rb = b.requires_grad();
  return tape.record(std::move(out), ra || rb, [ai, bi, ra, rb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& A = t.value(ai);
    const Tensor& B = t.value(bi);
    if (ra) {
      Tensor& d = t.grad(ai);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * B[i];
    }
    if (rb) {
      Tensor& d = t.grad(bi);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * A[i];
    }
  });
}

inline Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t xi = x.id();
  return x.tape().record(Tensor::scalar(s), x.requires_grad(), [xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& d : t.grad(xi).values()) d += g;
  });
}

inline Var mean(const Var& x) {
  const std::size_t count = x.value().size();
  if (count == 0) throw ShapeError("mean of an empty tensor");
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t xi = x.id();
  return x.tape().record(Tensor::scalar(s / static_cast<double>(count)), x.requires_grad(),
                         [xi, count](Tape& t, std::size_t self) {
                           const double g = t.grad(self)[0] / static_cast<double>(count);
                           for (double& d : t.grad(xi).values()) d += g;
                         });
}

// Activations. Subgradients at 0 take the positive branch.

inline Var leaky_relu(const Var& x, double slope = kDefaultLeakySlope) {
  return detail::elementwise(
      x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
      [slope](double v, double) { return v >= 0.0 ? 1.0 : slope; });
}

inline Var relu(const Var& x) {
  return detail::elementwise(
      x, [](double v) { return v >= 0.0 ? v : 0.0; }, [](double v, double) { return v >= 0.0 ? 1.0 : 0.0; });
}

inline Var tanh(const Var& x) {
  return detail::elementwise(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

/// Exponential linear unit with alpha = 1.
inline Var elu(const Var& x) {
  return detail::elementwise(
      x, [](double v) { return v >= 0.0 ? v : std::expm1(v); },
      [](double v, double y) { return v >= 0.0 ? 1.0 : y + 1.0; });
}

/// Column-wise concatenation of parts sharing their row count.
inline Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  Tape& tape = parts.front().tape();
  const std::size_t n = parts.front().shape().rows;
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  std::vector<bool> req;
  bool any = false;
  for (const Var& p : parts) {
    if (&p.tape() != &tape) throw UsageError("concat_cols: parts recorded on different tapes");
    if (p.shape().rows != n) {
      throw ShapeError("concat_cols: leading dimension " + std::to_string(p.shape().rows) + " vs " +
                       std::to_string(n));
    }
    ids.push_back(p.id());
    widths.push_back(p.shape().cols);
    req.push_back(p.requires_grad());
    any = any || p.requires_grad();
    total += p.shape().cols;
  }
  Tensor out(n, total);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += v.cols();
  }
  return tape.record(std::move(out), any, [ids, widths, req](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (req[k]) {
        Tensor& d = t.grad(ids[k]);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < widths[k]; ++j) d(i, j) += g(i, off + j);
        }
      }
      off += widths[k];
    }
  });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

/// Columns [begin, begin + count) of x.
inline Var slice_cols(const Var& x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  if (begin + count > xv.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                     ") outside " + to_string(xv.shape()));
  }
  Tensor out(xv.rows(), count);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    for (std::size_t j = 0; j < count; ++j) out(i, j) = xv(i, begin + j);
  }
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), x.requires_grad(), [xi, begin, count](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad(xi);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < count; ++j) d(i, begin + j) += g(i, j);
    }
  });
}

/// Inverted dropout: survivors are scaled by 1/(1-rate); identity at inference.
inline Var dropout(const Var& x, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ParameterError("dropout rate must lie in [0,1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const Tensor& xv = x.value();
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(xv.size());
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mask[i] = uniform01(rng) < rate ? 0.0 : keep_scale;
    out[i] = xv[i] * mask[i];
  }
  const std::size_t xi = x.id();
  return x.tape().record(std::move(out), x.requires_grad(),
                         [xi, mask = std::move(mask)](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad(self);
                           Tensor& d = t.grad(xi);
                           for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * mask[i];
                         });
}

/// Mean over `rows` of -log softmax(logits[row])[label]. labels[k] belongs to rows[k].
inline Var cross_entropy(const Var& logits, std::span<const std::size_t> rows, std::span<const int> labels) {
  if (rows.empty()) throw EvaluationError("cross_entropy: empty row mask");
  if (rows.size() != labels.size()) throw ShapeError("cross_entropy: rows and labels differ in length");
  const Tensor& z = logits.value();
  const std::size_t c = z.cols();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= z.rows()) throw IndexError("cross_entropy: row " + std::to_string(rows[k]) + " out of range");
    if (labels[k] < 0 || static_cast<std::size_t>(labels[k]) >= c) {
      throw IndexError("cross_entropy: label " + std::to_string(labels[k]) + " outside [0," +
                       std::to_string(c) + ")");
    }
  }
  // Softmax rows are kept for the backward pass.
  std::vector<double> probs(rows.size() * c);
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = z.row(rows[k]);
    const double mx = *std::max_element(r.begin(), r.end());
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) denom += std::exp(r[j] - mx);
    const double log_denom = std::log(denom);
    for (std::size_t j = 0; j < c; ++j) probs[k * c + j] = std::exp(r[j] - mx - log_denom);
    loss -= r[static_cast<std::size_t>(labels[k])] - mx - log_denom;
  }
  const double count = static_cast<double>(rows.size());
  const std::size_t zi = logits.id();
  std::vector<std::size_t> rows_copy(rows.begin(), rows.end());
  std::vector<int> labels_copy(labels.begin(), labels.end());
  return logits.tape().record(
      Tensor::scalar(loss / count), logits.requires_grad(),
      [zi, c, count, probs = std::move(probs), rows_copy = std::move(rows_copy),
       labels_copy = std::move(labels_copy)](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0] / count;
        Tensor& d = t.grad(zi);
        for (std::size_t k = 0; k < rows_copy.size(); ++k) {
          for (std::size_t j = 0; j < c; ++j) {
            const double target = static_cast<int>(j) == labels_copy[k] ? 1.0 : 0.0;
            d(rows_copy[k], j) += g * (probs[k * c + j] - target);
          }
        }
      });
}

/// Per-arc scalar row_scores[i] + col_scores[j]; both inputs are n x 1.
/// With row_scores = H a_left and col_scores = H a_right this is a^T [h_i || h_j].
inline Var edge_pair_scores(const ArcList& arcs, const Var& row_scores, const Var& col_scores) {
  Tape& tape = detail::same_tape(row_scores, col_scores);
  const Tensor& rs = row_scores.value();
  const Tensor& cs = col_scores.value();
  if (rs.cols() != 1 || cs.cols() != 1 || rs.rows() != cs.rows()) {
    throw ShapeError("edge_pair_scores: expected two n x 1 inputs, got " + to_string(rs.shape()) + " and " +
                     to_string(cs.shape()));
  }
  detail::check_arcs(arcs, rs.rows(), "edge_pair_scores");
  Tensor out(arcs.size(), 1);
  for (std::size_t e = 0; e < arcs.size(); ++e) out[e] = rs[arcs.row[e]] + cs[arcs.col[e]];
  const std::size_t ri = row_scores.id(), ci = col_scores.id();
  const bool rr = row_scores.requires_grad(), rc = col_scores.requires_grad();
  return tape.record(std::move(out), rr || rc, [&arcs, ri, ci, rr, rc](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (rr) {
      Tensor& d = t.grad(ri);
      for (std::size_t e = 0; e < arcs.size(); ++e) d[arcs.row[e]] += g[e];
    }
    if (rc) {
      Tensor& d = t.grad(ci);
      for (std::size_t e = 0; e < arcs.size(); ++e) d[arcs.col[e]] += g[e];
    }
  });
}

/// Softmax of `scores` (treated as a flat vector) within groups sharing a
/// segment id. Output has the shape of `scores`.
inline Var segment_softmax(const Var& scores, std::span<const NodeId> segment) {
  const Tensor& s = scores.value();
  if (s.size() != segment.size()) {
    throw ShapeError("segment_softmax: " + std::to_string(s.size()) + " scores for " +
                     std::to_string(segment.size()) + " segment ids");
  }
  std::size_t groups = 0;
  for (NodeId g : segment) groups = std::max<std::size_t>(groups, std::size_t{g} + 1);
  std::vector<double> peak(groups, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < s.size(); ++e) peak[segment[e]] = std::max(peak[segment[e]], s[e]);
  std::vector<double> denom(groups, 0.0);
  Tensor out(s.rows(), s.cols());
  for (std::size_t e = 0; e < s.size(); ++e) {
    out[e] = std::exp(s[e] - peak[segment[e]]);
    denom[segment[e]] += out[e];
  }
  for (std::size_t e = 0; e < s.size(); ++e) out[e] /= denom[segment[e]];
  const std::size_t si = scores.id();
  std::vector<NodeId> seg(segment.begin(), segment.end());
  return scores.tape().record(std::move(out), scores.requires_grad(),
                              [si, groups, seg = std::move(seg)](Tape& t, std::size_t self) {
                                const Tensor& g = t.grad(self);
                                const Tensor& y = t.value(self);
                                std::vector<double> dot(groups, 0.0);
                                for (std::size_t e = 0; e < g.size(); ++e) dot[seg[e]] += g[e] * y[e];
                                Tensor& d = t.grad(si);
                                for (std::size_t e = 0; e < g.size(); ++e) d[e] += y[e] * (g[e] - dot[seg[e]]);
                              });
}

/// out[i] = sum over arcs (i, j) of w_ij * x[j]; weights is an arcs.size() x 1
/// variable and receives a gradient when tracked.
inline Var sparse_aggregate(const ArcList& arcs, const Var& weights, const Var& x) {
  Tape& tape = detail::same_tape(weights, x);
  const Tensor& w = weights.value();
  const Tensor& xv = x.value();
  if (w.size() != arcs.size()) {
    throw ShapeError("sparse_aggregate: " + std::to_string(w.size()) + " weights for " +
                     std::to_string(arcs.size()) + " arcs");
  }
  if (arcs.nodes != xv.rows()) {
    throw ShapeError("sparse_aggregate: arcs over " + std::to_string(arcs.nodes) + " nodes, features " +
                     to_string(xv.shape()));
  }
  detail::check_arcs(arcs, xv.rows(), "sparse_aggregate");
  for (double v : w.values()) {
    if (!std::isfinite(v)) throw ParameterError("sparse_aggregate: non-finite arc weight");
  }
  const std::size_t d = xv.cols();
  Tensor out(xv.rows(), d);
  for (std::size_t e = 0; e < arcs.size(); ++e) {
    const double we = w[e];
    const double* src = xv.data() + std::size_t{arcs.col[e]} * d;
    double* dst = out.data() + std::size_t{arcs.row[e]} * d;
    for (std::size_t k = 0; k < d; ++k) dst[k] += we * src[k];
  }
  const std::size_t wi = weights.id(), xi = x.id();
  const bool rw = weights.requires_grad(), rx = x.requires_grad();
  return tape.record(std::move(out), rw || rx, [&arcs, wi, xi, rw, rx, d](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (rx) {
      const Tensor& W = t.value(wi);
      Tensor& dx = t.grad(xi);
      for (std::size_t e = 0; e < arcs.size(); ++e) {
        const double we = W[e];
        const double* gi = g.data() + std::size_t{arcs.row[e]} * d;
        double* dj = dx.data() + std::size_t{arcs.col[e]} * d;
        for (std::size_t k = 0; k < d; ++k) dj[k] += we * gi[k];
      }
    }
    if (rw) {
      const Tensor& X = t.value(xi);
      Tensor& dw = t.grad(wi);
      for (std::size_t e = 0; e < arcs.size(); ++e) {
        const double* gi = g.data() + std::size_t{arcs.row[e]} * d;
        const double* xj = X.data() + std::size_t{arcs.col[e]} * d;
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += gi[k] * xj[k];
        dw[e] += s;
      }
    }
  });
}

/// Overload for fixed arc weights (e.g. a normalized adjacency).
inline Var sparse_aggregate(const ArcList& arcs, std::span<const double> weights, const Var& x) {
  Var w = x.tape().constant(Tensor(weights.size(), 1, std::vector<double>(weights.begin(), weights.end())));
  return sparse_aggregate(arcs, w, x);
}

/// sum_k weights[k] * parts[k]; weights holds one entry per part.
inline Var weighted_sum(std::span<const Var> parts, const Var& weights) {
  if (parts.empty()) throw ShapeError("weighted_sum: no parts");
  Tape& tape = weights.tape();
  const Tensor& w = weights.value();
  if (w.size() != parts.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(w.size()) + " weights for " +
                     std::to_string(parts.size()) + " parts");
  }
  const Shape shape = parts.front().shape();
  std::vector<std::size_t> ids;
  std::vector<bool> req;
  bool any = weights.requires_grad();
  Tensor out(shape.rows, shape.cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (&parts[k].tape() != &tape) throw UsageError("weighted_sum: parts recorded on different tapes");
    if (parts[k].shape() != shape) {
      throw ShapeError("weighted_sum: part " + to_string(parts[k].shape()) + " vs " + to_string(shape));
    }
    const Tensor& pv = parts[k].value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[k] * pv[i];
    ids.push_back(parts[k].id());
    req.push_back(parts[k].requires_grad());
    any = any || parts[k].requires_grad();
  }
  const std::size_t wi = weights.id();
  const bool rw = weights.requires_grad();
  return tape.record(std::move(out), any, [ids, req, wi, rw](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& W = t.value(wi);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const Tensor& pv = t.value(ids[k]);
      if (req[k]) {
        Tensor& d = t.grad(ids[k]);
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += W[k] * g[i];
      }
      if (rw) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * pv[i];
        t.grad(wi)[k] += s;
      }
    }
  });
}

inline Var weighted_sum(std::initializer_list<Var> parts, const Var& weights) {
  return weighted_sum(std::span<const Var>(parts.begin(), parts.size()), weights);
}

}  // namespace graf::ops
