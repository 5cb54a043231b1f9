#pragma once

#include "ik/feature_vector.hpp"
#include "ik/isolation_kernel.hpp"

#include <random>
#include <vector>

namespace ik::test {

inline std::vector<FeatureVector> random_points(std::size_t n, Index d, std::uint64_t seed,
                                                double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<FeatureVector> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd v(d);
    for (Index j = 0; j < d; ++j) v[j] = g(gen);
    pts.push_back(FeatureVector::dense(std::move(v)));
  }
  return pts;
}

inline IKCode code(int psi, std::vector<std::int32_t> cells) { return IKCode{psi, std::move(cells)}; }

// A model with the given reference sets, one pool entry per reference.
inline IKModel model_from(int psi, const std::vector<std::vector<FeatureVector>>& sets) {
  std::vector<FeatureVector> pool;
  std::vector<std::int32_t> ids;
  for (const auto& s : sets) {
    for (const auto& p : s) {
      ids.push_back(static_cast<std::int32_t>(pool.size()));
      pool.push_back(p);
    }
  }
  const Index dim = pool.front().dim();
  return IKModel(psi, static_cast<int>(sets.size()), dim, 0, std::move(pool), std::move(ids));
}

}  // namespace ik::test
