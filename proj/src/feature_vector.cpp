#include "ik/feature_vector.hpp"

#include "ik/error.hpp"

#include <cmath>
#include <string>

namespace ik {

namespace {

void require_finite(double v) {
  if (!std::isfinite(v)) throw InvalidArgument("feature values must be finite");
}

// Walks the union of nonzero coordinates of two vectors in increasing index
// order, calling f(a_i, b_i) for every coordinate where either is nonzero
// (dense operands visit every coordinate).
template <typename F>
void merged_walk(const FeatureVector& a, const FeatureVector& b, F&& f) {
  if (!a.is_sparse() && !b.is_sparse()) {
    const auto& x = a.dense_values();
    const auto& y = b.dense_values();
    for (Index i = 0; i < a.dim(); ++i) f(x[i], y[i]);
    return;
  }
  if (a.is_sparse() && b.is_sparse()) {
    auto ea = a.sparse_entries();
    auto eb = b.sparse_entries();
    std::size_t i = 0, j = 0;
    while (i < ea.size() || j < eb.size()) {
      if (j == eb.size() || (i < ea.size() && ea[i].index < eb[j].index)) {
        f(ea[i++].value, 0.0);
      } else if (i == ea.size() || eb[j].index < ea[i].index) {
        f(0.0, eb[j++].value);
      } else {
        f(ea[i++].value, eb[j++].value);
      }
    }
    return;
  }
  const bool a_dense = !a.is_sparse();
  const auto& x = a_dense ? a.dense_values() : b.dense_values();
  auto entries = a_dense ? b.sparse_entries() : a.sparse_entries();
  std::size_t j = 0;
  for (Index i = 0; i < x.size(); ++i) {
    double s = 0.0;
    if (j < entries.size() && entries[j].index == i) s = entries[j++].value;
    if (a_dense) {
      f(x[i], s);
    } else {
      f(s, x[i]);
    }
  }
}

}  // namespace

FeatureVector FeatureVector::dense(Eigen::VectorXd values) {
  if (values.size() == 0) throw InvalidArgument("feature vector must have positive dimension");
  for (Index i = 0; i < values.size(); ++i) require_finite(values[i]);
  FeatureVector v;
  v.dim_ = values.size();
  v.data_ = std::move(values);
  return v;
}

FeatureVector FeatureVector::dense(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return dense(std::move(v));
}

FeatureVector FeatureVector::sparse(Index dim, std::vector<SparseEntry> entries) {
  if (dim <= 0) throw InvalidArgument("feature vector must have positive dimension");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].index < 0 || entries[i].index >= dim) {
      throw InvalidArgument("sparse index " + std::to_string(entries[i].index) +
                            " out of range for dimension " + std::to_string(dim));
    }
    if (i > 0 && entries[i].index <= entries[i - 1].index) {
      throw InvalidArgument("sparse indices must be strictly increasing");
    }
    require_finite(entries[i].value);
  }
  FeatureVector v;
  v.dim_ = dim;
  v.data_ = std::move(entries);
  return v;
}

const Eigen::VectorXd& FeatureVector::dense_values() const {
  return std::get<Eigen::VectorXd>(data_);
}

std::span<const SparseEntry> FeatureVector::sparse_entries() const {
  return std::get<SparseStorage>(data_);
}

Eigen::VectorXd FeatureVector::to_dense() const {
  if (!is_sparse()) return dense_values();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  for (const auto& e : sparse_entries()) out[e.index] = e.value;
  return out;
}

double FeatureVector::coeff(Index i) const {
  if (!is_sparse()) return dense_values()[i];
  auto entries = sparse_entries();
  auto it = std::lower_bound(entries.begin(), entries.end(), i,
                             [](const SparseEntry& e, Index k) { return e.index < k; });
  return (it != entries.end() && it->index == i) ? it->value : 0.0;
}

double FeatureVector::squared_norm() const {
  if (!is_sparse()) return dense_values().squaredNorm();
  double s = 0.0;
  for (const auto& e : sparse_entries()) s += e.value * e.value;
  return s;
}

Index FeatureVector::nonzeros() const {
  if (is_sparse()) return static_cast<Index>(sparse_entries().size());
  return (dense_values().array() != 0.0).count();
}

bool operator==(const FeatureVector& a, const FeatureVector& b) {
  if (a.dim_ != b.dim_) return false;
  if (a.is_sparse() && b.is_sparse()) {
    // Explicit zeros make two sparse encodings of one vector differ textually.
    bool equal = true;
    merged_walk(a, b, [&](double x, double y) { equal = equal && x == y; });
    return equal;
  }
  if (!a.is_sparse() && !b.is_sparse()) return a.dense_values() == b.dense_values();
  return a.to_dense() == b.to_dense();
}

void require_same_dim(const FeatureVector& a, const FeatureVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionMismatch(std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
}

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  require_same_dim(a, b);
  if (!a.is_sparse() && !b.is_sparse()) {
    return (a.dense_values() - b.dense_values()).squaredNorm();
  }
  double s = 0.0;
  merged_walk(a, b, [&](double x, double y) { s += (x - y) * (x - y); });
  return s;
}

double distance(const FeatureVector& a, const FeatureVector& b) {
  return std::sqrt(squared_distance(a, b));
}

double dot(const FeatureVector& a, const FeatureVector& b) {
  require_same_dim(a, b);
  if (!a.is_sparse() && !b.is_sparse()) return a.dense_values().dot(b.dense_values());
  double s = 0.0;
  merged_walk(a, b, [&](double x, double y) { s += x * y; });
  return s;
}

double lp_distance(const FeatureVector& a, const FeatureVector& b, double p) {
  if (!(p > 0.0)) throw InvalidArgument("lp distance requires p > 0");
  if (p == 2.0) return distance(a, b);
  require_same_dim(a, b);
  double s = 0.0;
  if (!a.is_sparse() && !b.is_sparse()) {
    s = (a.dense_values() - b.dense_values()).array().abs().pow(p).sum();
  } else {
    merged_walk(a, b, [&](double x, double y) { s += std::pow(std::abs(x - y), p); });
  }
  return std::pow(s, 1.0 / p);
}

Eigen::VectorXd mean_of(std::span<const FeatureVector> points) {
  if (points.empty()) throw InsufficientData("mean of an empty point set");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(points.front().dim());
  for (const auto& p : points) {
    require_same_dim(points.front(), p);
    if (p.is_sparse()) {
      for (const auto& e : p.sparse_entries()) sum[e.index] += e.value;
    } else {
      sum += p.dense_values();
    }
  }
  return sum / static_cast<double>(points.size());
}

Eigen::VectorXd mean_of(std::span<const FeatureVector> points, std::span<const Index> members) {
  if (members.empty()) throw InsufficientData("mean of an empty point set");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(points[members.front()].dim());
  for (Index m : members) {
    const auto& p = points[m];
    if (p.is_sparse()) {
      for (const auto& e : p.sparse_entries()) sum[e.index] += e.value;
    } else {
      sum += p.dense_values();
    }
  }
  return sum / static_cast<double>(members.size());
}

}  // namespace ik
