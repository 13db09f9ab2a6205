#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rfc/matrix.hpp"

namespace rfc {

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  /// Converged once no center moves by this much (max abs coordinate change).
  double tolerance = 1e-9;
};

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Matrix centers;
  /// Within-cluster sum of squared Euclidean distances.
  double wcss = 0.0;
  /// WCSS after every assignment step of the winning restart.
  std::vector<double> wcss_trace;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding, polished by single-point
/// transfers; keeps the restart with the lowest WCSS. Inputs with at most 256
/// k-subsets are additionally started from every k-subset of the points.
/// Empty clusters are reseeded from the point farthest from its center.
/// Throws std::invalid_argument for empty input or k outside [1, #points].
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

double squared_distance(std::span<const double> a, std::span<const double> b);

double within_cluster_ss(const Matrix& points, const std::vector<std::size_t>& assignment,
                         const Matrix& centers);

struct KDiagnostic {
  std::size_t k = 0;
  double wcss = 0.0;
  double bic = 0.0;
  std::vector<std::size_t> sizes;
};

struct KSelection {
  /// BIC minimizer.
  std::size_t k = 1;
  /// k with the largest second difference of WCSS (interior ks only; equals
  /// k when fewer than three ks were tried).
  std::size_t elbow_k = 1;
  std::vector<KDiagnostic> diagnostics;
};

/// BIC of a hard k-means partition under a spherical Gaussian mixture with a
/// pooled variance (floored at variance_floor). Lower is better.
double kmeans_bic(const Matrix& points, const KMeansResult& result, double variance_floor = 1e-9);

/// BIC-minimizing k in [1, min(k_max, #points)], with per-k diagnostics and
/// the WCSS elbow. The BIC answer is meant as an upper bound; callers may pick
/// a smaller k.
KSelection choose_k(const Matrix& points, std::size_t k_max, std::uint64_t seed,
                    const KMeansOptions& options = {});

}  // namespace rfc
