#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace ik {

using Index = std::int64_t;

struct SparseEntry {
  Index index;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// A point in R^d, stored either densely or as sorted (index, value) pairs.
// Dense and sparse vectors of equal dimension interoperate in every
// distance and product below.
class FeatureVector {
 public:
  FeatureVector() = default;

  static FeatureVector dense(Eigen::VectorXd values);
  static FeatureVector dense(std::initializer_list<double> values);
  // Indices must be strictly increasing and < dim; values finite.
  static FeatureVector sparse(Index dim, std::vector<SparseEntry> entries);

  Index dim() const { return dim_; }
  bool is_sparse() const { return std::holds_alternative<SparseStorage>(data_); }

  // Only valid when !is_sparse().
  const Eigen::VectorXd& dense_values() const;
  // Only valid when is_sparse().
  std::span<const SparseEntry> sparse_entries() const;

  Eigen::VectorXd to_dense() const;
  double coeff(Index i) const;
  double squared_norm() const;
  Index nonzeros() const;

  friend bool operator==(const FeatureVector& a, const FeatureVector& b);

 private:
  using SparseStorage = std::vector<SparseEntry>;

  Index dim_ = 0;
  std::variant<Eigen::VectorXd, SparseStorage> data_;
};

double squared_distance(const FeatureVector& a, const FeatureVector& b);
double distance(const FeatureVector& a, const FeatureVector& b);
double dot(const FeatureVector& a, const FeatureVector& b);
// (sum |a_i - b_i|^p)^(1/p); p < 1 is allowed (not a metric then).
double lp_distance(const FeatureVector& a, const FeatureVector& b, double p);

void require_same_dim(const FeatureVector& a, const FeatureVector& b);

// Mean of a set of points as a dense vector.
Eigen::VectorXd mean_of(std::span<const FeatureVector> points);
Eigen::VectorXd mean_of(std::span<const FeatureVector> points,
                        std::span<const Index> members);

}  // namespace ik
