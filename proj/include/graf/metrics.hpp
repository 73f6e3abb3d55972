#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "graf/error.hpp"
#include "graf/seed.hpp"
#include "graf/tensor.hpp"

namespace graf {

struct MetricReport {
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::size_t> support;
};

/// Per-class precision/recall/F1 with macro, support-weighted and accuracy
/// summaries. A class absent from both vectors contributes F1 = 0 to the macro mean.
inline MetricReport classification_metrics(std::span<const int> truth, std::span<const int> pred, int classes) {
  if (truth.size() != pred.size()) {
    throw InputError("classification_metrics: " + std::to_string(truth.size()) + " labels vs " +
                     std::to_string(pred.size()) + " predictions");
  }
  if (truth.empty()) throw EvaluationError("classification_metrics: no samples");
  if (classes <= 0) throw InputError("classification_metrics: class count must be positive");
  const auto c = static_cast<std::size_t>(classes);
  std::vector<std::size_t> tp(c, 0), fp(c, 0), fn(c, 0);
  MetricReport r;
  r.support.assign(c, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || pred[i] < 0 || pred[i] >= classes) {
      throw InputError("classification_metrics: label outside [0," + std::to_string(classes) + ")");
    }
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(pred[i]);
    ++r.support[t];
    if (t == p) {
      ++tp[t];
      ++correct;
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  r.precision.resize(c);
  r.recall.resize(c);
  r.f1.resize(c);
  double weighted = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const auto ratio = [](std::size_t num, std::size_t den) {
      return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    r.precision[k] = ratio(tp[k], tp[k] + fp[k]);
    r.recall[k] = ratio(tp[k], tp[k] + fn[k]);
    r.f1[k] = ratio(2 * tp[k], 2 * tp[k] + fp[k] + fn[k]);
    r.macro_f1 += r.f1[k];
    weighted += static_cast<double>(r.support[k]) * r.f1[k];
  }
  r.macro_f1 /= static_cast<double>(c);
  r.weighted_f1 = weighted / static_cast<double>(truth.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  return r;
}

/// Row-wise argmax; ties resolve to the lowest class.
inline std::vector<int> argmax_rows(const Tensor& scores, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto row = scores.row(r);
    out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

inline double macro_f1(std::span<const int> truth, std::span<const int> pred, int classes) {
  return classification_metrics(truth, pred, classes).macro_f1;
}

// ---------------------------------------------------------------------------
// Clustering

struct KMeansConfig {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;  // largest centroid shift that counts as converged
};

struct KMeansResult {
  std::vector<int> assignments;
  Tensor centroids;
  double wcss = 0.0;
  std::size_t iterations = 0;
  std::vector<double> wcss_trace;        // per Lloyd iteration, chosen restart
  std::vector<double> restart_wcss;      // final WCSS of every restart
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline KMeansResult lloyd(const Tensor& x, std::size_t k, Rng& rng, const KMeansConfig& cfg) {
  const std::size_t n = x.rows(), h = x.cols();
  KMeansResult r;
  r.centroids = Tensor(k, h);

  // k-means++ seeding.
  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  std::size_t first = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  std::vector<bool> chosen(n, false);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = first;
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += closest[i];
      if (total > 0.0) {
        double u = uniform01(rng) * total;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (closest[i] <= 0.0) continue;
          pick = i;
          u -= closest[i];
          if (u < 0.0) break;
        }
      } else {
        // every point coincides with a centroid: take an unused point
        std::vector<std::size_t> unused;
        for (std::size_t i = 0; i < n; ++i) {
          if (!chosen[i]) unused.push_back(i);
        }
        pick = unused[std::min(unused.size() - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(unused.size())))];
      }
    }
    chosen[pick] = true;
    std::copy(x.row(pick).begin(), x.row(pick).end(), r.centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) closest[i] = std::min(closest[i], sq_dist(x.row(i), r.centroids.row(c)));
  }

  r.assignments.assign(n, 0);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(x.row(i), r.centroids.row(c));
        if (d < best) {
          best = d;
          arg = static_cast<int>(c);
        }
      }
      r.assignments[i] = arg;
      wcss += best;
    }
    r.wcss_trace.push_back(wcss);
    r.wcss = wcss;
    r.iterations = it + 1;

    Tensor next(k, h);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(r.assignments[i]);
      ++count[c];
      for (std::size_t j = 0; j < h; ++j) next(c, j) += x(i, j);
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) {
        std::copy(r.centroids.row(c).begin(), r.centroids.row(c).end(), next.row(c).begin());
        continue;
      }
      for (std::size_t j = 0; j < h; ++j) next(c, j) /= static_cast<double>(count[c]);
      shift = std::max(shift, std::sqrt(sq_dist(next.row(c), r.centroids.row(c))));
    }
    r.centroids = std::move(next);
    if (shift < cfg.tolerance) break;
  }
  // Final assignment against the final centroids.
  double wcss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(x.row(i), r.centroids.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    r.assignments[i] = arg;
    wcss += best;
  }
  r.wcss = wcss;
  r.wcss_trace.push_back(wcss);
  return r;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeding; best of `cfg.restarts` runs by
/// within-cluster sum of squares.
inline KMeansResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed, const KMeansConfig& cfg = {}) {
  if (k == 0) throw InputError("kmeans: k must be positive");
  if (k > points.rows()) {
    throw InputError("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(points.rows()) + " points");
  }
  const std::size_t restarts = std::max<std::size_t>(cfg.restarts, 1);
  KMeansResult best;
  std::vector<double> finals;
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, SeedStage::KMeans, r));
    KMeansResult cur = detail::lloyd(points, k, rng, cfg);
    finals.push_back(cur.wcss);
    if (r == 0 || cur.wcss < best.wcss) best = std::move(cur);
  }
  best.restart_wcss = std::move(finals);
  return best;
}

namespace detail {

struct Contingency {
  std::map<std::pair<int, int>, std::size_t> cells;
  std::map<int, std::size_t> rows, cols;
  std::size_t n = 0;
};

inline Contingency contingency(std::span<const int> a, std::span<const int> b, const char* who) {
  if (a.size() != b.size()) {
    throw InputError(std::string(who) + ": partitions of length " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  Contingency t;
  t.n = a.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++t.cells[{a[i], b[i]}];
    ++t.rows[a[i]];
    ++t.cols[b[i]];
  }
  return t;
}

inline double choose2(std::size_t x) { return 0.5 * static_cast<double>(x) * (static_cast<double>(x) - 1.0); }

}  // namespace detail

/// Adjusted Rand index from the pair-counting contingency table.
inline double ari(std::span<const int> labels, std::span<const int> assignments) {
  const auto t = detail::contingency(labels, assignments, "ari");
  if (t.n == 0) throw InputError("ari: empty partitions");
  // Both partitions trivial (single block, or all singletons) and identical.
  if ((t.rows.size() == 1 && t.cols.size() == 1) || (t.rows.size() == t.n && t.cols.size() == t.n)) return 1.0;
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [_, c] : t.cells) index += detail::choose2(c);
  for (const auto& [_, c] : t.rows) sum_a += detail::choose2(c);
  for (const auto& [_, c] : t.cols) sum_b += detail::choose2(c);
  const double expected = sum_a * sum_b / detail::choose2(t.n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 0.0;
  return (index - expected) / (max_index - expected);
}

/// Mutual information normalized by the arithmetic mean of the two
/// entropies, natural logarithms.
inline double nmi(std::span<const int> labels, std::span<const int> assignments) {
  const auto t = detail::contingency(labels, assignments, "nmi");
  if (t.n == 0) throw InputError("nmi: empty partitions");
  const double n = static_cast<double>(t.n);
  const auto entropy = [n](const std::map<int, std::size_t>& m) {
    double h = 0.0;
    for (const auto& [_, c] : m) {
      const double p = static_cast<double>(c) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double hu = entropy(t.rows), hv = entropy(t.cols);
  if (hu == 0.0 && hv == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : t.cells) {
    const double nij = static_cast<double>(c);
    const double ai = static_cast<double>(t.rows.at(key.first));
    const double bj = static_cast<double>(t.cols.at(key.second));
    mi += nij / n * std::log(n * nij / (ai * bj));
  }
  const double v = mi / (0.5 * (hu + hv));
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace graf
