#pragma once

#include "ik/feature_vector.hpp"
#include "ik/isolation_kernel.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ik {

struct IsolationMeasure {
  std::shared_ptr<const IKModel> model;
};
// exp(-||x - y||^2 / sigma^2)
struct GaussianMeasure {
  double sigma;
};
// <x, y> / (||x|| ||y||)
struct LinearMeasure {};
struct LpMeasure {
  double p;
};
// |N_k(x) ∩ N_k(y)| / k over a reference dataset.
struct SharedNeighborMeasure {
  int k;
};
// exp(-||x - y||^2 / (s_x s_y)), s_x the distance from x to its k-th neighbor.
struct AdaptiveGaussianMeasure {
  int k;
};

using MeasureSpec = std::variant<IsolationMeasure, GaussianMeasure, LinearMeasure, LpMeasure,
                                 SharedNeighborMeasure, AdaptiveGaussianMeasure>;

void validate(const MeasureSpec& spec);
std::string measure_name(const MeasureSpec& spec);
bool is_distance(const MeasureSpec& spec);
bool needs_context(const MeasureSpec& spec);

/// k-nearest-neighbor lists over a reference dataset, for SNN and AG.
///
/// A point identical to a dataset member is treated as that member: the
/// first member at distance zero is excluded from its own neighbor list.
class NeighborContext {
 public:
  NeighborContext(std::span<const FeatureVector> reference, int k, int workers = 1);

  struct Neighborhood {
    std::vector<Index> neighbors;  // ascending by (distance, index)
    double kth_distance = 0.0;
  };

  int k() const { return k_; }
  std::size_t size() const { return reference_.size(); }
  const Neighborhood& member(std::size_t i) const { return members_[i]; }
  Neighborhood lookup(const FeatureVector& x) const;

 private:
  Neighborhood search(const FeatureVector& x) const;

  std::vector<FeatureVector> reference_;
  int k_;
  std::vector<Neighborhood> members_;
};

/// Raw value of a measure: a kernel similarity, or for LpMeasure a distance.
/// SNN and AG need `ctx` built with the measure's k.
double evaluate(const MeasureSpec& spec, const FeatureVector& x, const FeatureVector& y,
                const NeighborContext* ctx = nullptr);

/// Dissimilarity used by the instability experiments: 1 - similarity scaled
/// to [0, 1] for kernels, the distance itself for LpMeasure. The linear
/// kernel's cosine is mapped to [0, 1] as (1 + cos) / 2.
double dissimilarity(const MeasureSpec& spec, const FeatureVector& x, const FeatureVector& y,
                     const NeighborContext* ctx = nullptr);

/// Dissimilarities from one query to every point of a dataset. Batches the
/// expensive parts: IK encodes the dataset once, SNN/AG reuse `ctx` members.
/// `ctx`, when given, must have been built over `points`.
std::vector<double> dissimilarities_to(const MeasureSpec& spec, const FeatureVector& query,
                                       std::span<const FeatureVector> points,
                                       const NeighborContext* ctx = nullptr, int workers = 1);

}  // namespace ik
