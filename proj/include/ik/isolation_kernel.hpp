#pragma once

#include "ik/feature_vector.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace ik {

/// A point's feature map compressed to one cell index per partitioning.
///
/// The full map is t one-hot blocks of width psi; storing the hot position
/// of each block is lossless, and inner products reduce to match counts.
struct IKCode {
  int psi = 0;
  std::vector<std::int32_t> cells;

  int t() const { return static_cast<int>(cells.size()); }
  friend bool operator==(const IKCode&, const IKCode&) = default;
};

/// t random Voronoi partitionings, each induced by psi reference points
/// sampled without replacement from the fitting data.
///
/// References live in a shared pool of distinct points; partitioning i uses
/// pool entries reference_ids()[i*psi .. i*psi+psi). The model owns copies of
/// everything it needs and is immutable once built.
class IKModel {
 public:
  IKModel(int psi, int t, Index dim, std::uint64_t seed, std::vector<FeatureVector> pool,
          std::vector<std::int32_t> reference_ids);

  int psi() const { return psi_; }
  int t() const { return t_; }
  Index dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  const FeatureVector& reference(int partitioning, int cell) const {
    return pool_[reference_ids_[static_cast<std::size_t>(partitioning) * psi_ + cell]];
  }
  std::span<const FeatureVector> pool() const { return pool_; }
  std::span<const std::int32_t> reference_ids() const { return reference_ids_; }

  friend bool operator==(const IKModel& a, const IKModel& b);

 private:
  int psi_;
  int t_;
  Index dim_;
  std::uint64_t seed_;
  std::vector<FeatureVector> pool_;
  std::vector<std::int32_t> reference_ids_;
};

/// Samples t reference sets of psi points each. Partitioning i draws from an
/// mt19937_64 seeded with seed + i, so models are reproducible per seed and a
/// model with fewer partitionings is a prefix of one with more.
IKModel fit(std::span<const FeatureVector> data, int psi, int t, std::uint64_t seed);

/// Nearest reference (Euclidean) per partitioning; ties go to the lowest
/// reference index.
IKCode encode(const IKModel& model, const FeatureVector& x);
std::vector<IKCode> encode_all(const IKModel& model, std::span<const FeatureVector> points,
                               int workers = 1);

int match_count(const IKCode& a, const IKCode& b);
double similarity(const IKCode& a, const IKCode& b);
double ik_distance(const IKCode& a, const IKCode& b);
// Euclidean distance between the (unscaled) one-hot feature maps.
double feature_space_distance(const IKCode& a, const IKCode& b);

Eigen::MatrixXd gram(const IKModel& model, std::span<const FeatureVector> points,
                     int workers = 1);
Eigen::MatrixXd gram(std::span<const IKCode> codes, int workers = 1);

}  // namespace ik
