#pragma once

#include "ik/feature_vector.hpp"
#include "ik/measures.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace ik {

struct ClusterResult {
  std::vector<int> labels;
  std::vector<Index> centers;  // label c is centered at centers[c]
  std::optional<double> ami_vs_truth;
};

/// Symmetric matrix of dissimilarity(spec, p_i, p_j) with a zero diagonal.
/// `ctx` must be built over `points` for SNN/AG.
Eigen::MatrixXd pairwise_dissimilarity(const MeasureSpec& spec,
                                       std::span<const FeatureVector> points,
                                       const NeighborContext* ctx = nullptr, int workers = 1);

/// Density-peaks clustering over a precomputed dissimilarity matrix.
///
/// With cutoff eps = eps_fraction * (largest pairwise dissimilarity):
///   rho_i   = #{ j != i : m(i, j) < eps }
///   delta_i = min m(i, j) over points ranked denser than i, where points are
///             ranked by rho descending then index ascending; the top-ranked
///             point takes its largest dissimilarity instead.
/// The k points with largest rho_i * delta_i (ties to lower index) become
/// centers. Points are then labeled in rank order with the label of their
/// nearest denser point. If the top-ranked point is not a center it joins its
/// nearest center.
ClusterResult dp_cluster(const Eigen::MatrixXd& dissimilarity, int k, double eps_fraction);

/// Adjusted mutual information with the arithmetic-mean normalizer and the
/// expected MI of the hypergeometric permutation model. Partitions equal up
/// to relabeling score exactly 1; a zero denominator scores 0.
double ami(std::span<const int> a, std::span<const int> b);

}  // namespace ik
