#include "rfc/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rfc/rng.hpp"

namespace rfc {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double within_cluster_ss(const Matrix& points, const std::vector<std::size_t>& assignment, const Matrix& centers) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) s += squared_distance(points.row(i), centers.row(assignment[i]));
  return s;
}

namespace {

std::size_t nearest_center(std::span<const double> p, const Matrix& centers, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d = squared_distance(p, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  std::size_t first = rng.below(n);
  std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
  }
  return centers;
}

// Returns true if any point changed cluster.
bool assign_points(const Matrix& points, const Matrix& centers, std::vector<std::size_t>& assignment) {
  bool changed = false;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const std::size_t c = nearest_center(points.row(i), centers);
    if (c != assignment[i]) {
      assignment[i] = c;
      changed = true;
    }
  }
  return changed;
}

Matrix cluster_means(const Matrix& points, const std::vector<std::size_t>& assignment, std::size_t k,
                     std::vector<std::size_t>& sizes) {
  Matrix sums(k, points.cols());
  sizes.assign(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto row = sums.row(assignment[i]);
    const auto p = points.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) row[j] += p[j];
    ++sizes[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    for (double& v : sums.row(c)) v /= static_cast<double>(sizes[c]);
  }
  return sums;
}

// Single-point transfers (Hartigan): moves a point whenever that lowers the
// WCSS, using exact mean updates. Lloyd fixed points are often not stable
// under this; the result is still a Lloyd fixed point.
bool refine_transfers(const Matrix& points, std::vector<std::size_t>& assignment, Matrix& centers) {
  const std::size_t k = centers.rows();
  std::vector<std::size_t> sizes;
  centers = cluster_means(points, assignment, k, sizes);
  bool any = false;
  for (bool moved = true; moved;) {
    moved = false;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const std::size_t a = assignment[i];
      if (sizes[a] < 2) continue;
      const auto p = points.row(i);
      const double na = static_cast<double>(sizes[a]);
      const double loss = na / (na - 1.0) * squared_distance(p, centers.row(a));
      std::size_t target = a;
      double best_gain = 1e-12 * (1.0 + loss);
      for (std::size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(sizes[b]);
        const double gain = loss - nb / (nb + 1.0) * squared_distance(p, centers.row(b));
        if (gain > best_gain) {
          best_gain = gain;
          target = b;
        }
      }
      if (target == a) continue;
      auto ca = centers.row(a);
      auto cb = centers.row(target);
      const double nb = static_cast<double>(sizes[target]);
      for (std::size_t j = 0; j < p.size(); ++j) {
        ca[j] = (ca[j] * na - p[j]) / (na - 1.0);
        cb[j] = (cb[j] * nb + p[j]) / (nb + 1.0);
      }
      --sizes[a];
      ++sizes[target];
      assignment[i] = target;
      moved = any = true;
    }
  }
  if (any) centers = cluster_means(points, assignment, k, sizes);
  return any;
}

KMeansResult lloyd(const Matrix& points, Matrix centers, const KMeansOptions& options) {
  const std::size_t k = centers.rows();
  KMeansResult r;
  r.assignment.assign(points.rows(), k);
  assign_points(points, centers, r.assignment);
  r.wcss_trace.push_back(within_cluster_ss(points, r.assignment, centers));

  std::vector<std::size_t> sizes;
  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    Matrix updated = cluster_means(points, r.assignment, k, sizes);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      // Empty cluster: move its center onto the point farthest from its own center.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.rows(); ++i) {
        if (sizes[r.assignment[i]] < 2) continue;
        const double d = squared_distance(points.row(i), updated.row(r.assignment[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy(points.row(far).begin(), points.row(far).end(), updated.row(c).begin());
      --sizes[r.assignment[far]];
      ++sizes[c];
      r.assignment[far] = c;
    }
    double shift = 0.0;
    for (std::size_t i = 0; i < updated.data().size(); ++i) {
      shift = std::max(shift, std::abs(updated.data()[i] - centers.data()[i]));
    }
    centers = std::move(updated);
    const bool changed = assign_points(points, centers, r.assignment);
    r.wcss_trace.push_back(within_cluster_ss(points, r.assignment, centers));
    if (!changed || shift < options.tolerance) {
      ++r.iterations;
      break;
    }
  }
  if (refine_transfers(points, r.assignment, centers)) {
    assign_points(points, centers, r.assignment);
    r.wcss_trace.push_back(within_cluster_ss(points, r.assignment, centers));
  }
  r.centers = std::move(centers);
  r.wcss = r.wcss_trace.back();
  return r;
}

constexpr std::size_t kExhaustiveStarts = 256;

std::size_t subset_count(std::size_t n, std::size_t k) {
  std::size_t c = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > kExhaustiveStarts) return c;
  }
  return c;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  if (points.rows() == 0) throw std::invalid_argument("k-means on an empty point set");
  if (k < 1 || k > points.rows()) {
    throw std::invalid_argument("k must lie in [1, " + std::to_string(points.rows()) + "], got " + std::to_string(k));
  }
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);
  for (std::size_t run = 0; run < restarts; ++run) {
    Rng rng(mix_seed(seed, run));
    auto result = lloyd(points, seed_plus_plus(points, k, rng), options);
    if (result.wcss < best.wcss) best = std::move(result);
  }
  // Tiny inputs: also start from every k-subset of the points.
  if (k > 1 && subset_count(points.rows(), k) <= kExhaustiveStarts) {
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    while (true) {
      Matrix centers(k, points.cols());
      for (std::size_t c = 0; c < k; ++c) {
        std::copy(points.row(pick[c]).begin(), points.row(pick[c]).end(), centers.row(c).begin());
      }
      auto result = lloyd(points, std::move(centers), options);
      if (result.wcss < best.wcss) best = std::move(result);
      std::size_t i = k;
      while (i > 0 && pick[i - 1] == points.rows() - k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return best;
}

double kmeans_bic(const Matrix& points, const KMeansResult& result, double variance_floor) {
  const double n = static_cast<double>(points.rows());
  const double d = static_cast<double>(points.cols());
  const std::size_t k = result.centers.rows();
  std::vector<double> sizes(k, 0.0);
  for (std::size_t a : result.assignment) sizes[a] += 1.0;

  double variance = variance_floor;
  if (points.rows() > k && d > 0) variance = std::max(variance_floor, result.wcss / (d * (n - static_cast<double>(k))));

  double loglik = -result.wcss / (2.0 * variance) - n * d / 2.0 * std::log(2.0 * std::numbers::pi * variance);
  for (double s : sizes) {
    if (s > 0) loglik += s * std::log(s / n);
  }
  const double params = static_cast<double>(k) * d + 1.0 + static_cast<double>(k - 1);
  return -2.0 * loglik + params * std::log(n);
}

KSelection choose_k(const Matrix& points, std::size_t k_max, std::uint64_t seed, const KMeansOptions& options) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  if (points.rows() == 0) throw std::invalid_argument("choose_k on an empty point set");
  KSelection sel;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t upper = std::min(k_max, points.rows());
  for (std::size_t k = 1; k <= upper; ++k) {
    const auto result = kmeans(points, k, mix_seed(seed, k), options);
    KDiagnostic diag;
    diag.k = k;
    diag.wcss = result.wcss;
    diag.bic = kmeans_bic(points, result);
    diag.sizes.assign(k, 0);
    for (std::size_t a : result.assignment) ++diag.sizes[a];
    if (diag.bic < best) {
      best = diag.bic;
      sel.k = k;
    }
    sel.diagnostics.push_back(std::move(diag));
  }
  sel.elbow_k = sel.k;
  double sharpest = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < sel.diagnostics.size(); ++i) {
    const double bend = sel.diagnostics[i - 1].wcss - 2.0 * sel.diagnostics[i].wcss + sel.diagnostics[i + 1].wcss;
    if (bend > sharpest) {
      sharpest = bend;
      sel.elbow_k = sel.diagnostics[i].k;
    }
  }
  return sel;
}

}  // namespace rfc
