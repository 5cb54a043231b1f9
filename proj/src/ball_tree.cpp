#include "ik/ball_tree.hpp"

#include "ik/parallel.hpp"

#include <cmath>
#include <limits>

namespace ik {

FeatureVector EuclideanSpace::center(std::span<const Point> points, std::span<const Index> members) {
  return FeatureVector::dense(mean_of(points, members));
}

double IKFeatureSpace::center_distance(const Point& a, const Center& c) {
  // ||phi(a) - mu||^2 = t - 2 <phi(a), mu> + ||mu||^2
  double inner = 0.0;
  for (int i = 0; i < c.t; ++i) inner += c.weights[static_cast<std::size_t>(i) * c.psi + a.cells[i]];
  return std::sqrt(std::max(0.0, c.t - 2.0 * inner + c.squared_norm));
}

CellHistogram IKFeatureSpace::center(std::span<const Point> points, std::span<const Index> members) {
  CellHistogram h;
  h.psi = points[members.front()].psi;
  h.t = points[members.front()].t();
  h.weights.assign(static_cast<std::size_t>(h.psi) * h.t, 0.0);
  const double w = 1.0 / static_cast<double>(members.size());
  for (Index m : members) {
    const auto& cells = points[m].cells;
    for (int i = 0; i < h.t; ++i) h.weights[static_cast<std::size_t>(i) * h.psi + cells[i]] += w;
  }
  for (double x : h.weights) h.squared_norm += x * x;
  return h;
}

std::string metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::RawEuclidean: return "distance";
    case MetricKind::IKFeature: return "ik";
    case MetricKind::NormalizedLinear: return "linear";
  }
  return "unknown";
}

FeatureVector normalize_linear(const FeatureVector& x) {
  const double norm = std::sqrt(x.squared_norm());
  if (norm == 0.0) return x;
  if (x.is_sparse()) {
    std::vector<SparseEntry> entries(x.sparse_entries().begin(), x.sparse_entries().end());
    for (auto& e : entries) e.value /= norm;
    return FeatureVector::sparse(x.dim(), std::move(entries));
  }
  return FeatureVector::dense(x.dense_values() / norm);
}

namespace {

std::variant<BallTree<EuclideanSpace>, BallTree<IKFeatureSpace>> make_tree(
    std::span<const FeatureVector> points, const MetricSpec& metric, int leaf_size, int workers) {
  switch (metric.kind) {
    case MetricKind::IKFeature: {
      if (!metric.model) throw InvalidArgument("ik metric requires a fitted model");
      return BallTree<IKFeatureSpace>(encode_all(*metric.model, points, workers), leaf_size);
    }
    case MetricKind::NormalizedLinear: {
      std::vector<FeatureVector> scaled(points.size());
      for (std::size_t i = 0; i < points.size(); ++i) scaled[i] = normalize_linear(points[i]);
      return BallTree<EuclideanSpace>(std::move(scaled), leaf_size);
    }
    case MetricKind::RawEuclidean:
    default:
      return BallTree<EuclideanSpace>(std::vector<FeatureVector>(points.begin(), points.end()),
                                      leaf_size);
  }
}

}  // namespace

KnnIndex::KnnIndex(std::span<const FeatureVector> points, const MetricSpec& metric, int leaf_size,
                   int workers)
    : metric_(metric), tree_(make_tree(points, metric, leaf_size, workers)) {}

std::size_t KnnIndex::size() const {
  return std::visit([](const auto& t) { return t.size(); }, tree_);
}

std::size_t KnnIndex::node_count() const {
  return std::visit([](const auto& t) { return t.nodes().size(); }, tree_);
}

KnnResult KnnIndex::tree_query(std::size_t point, int k, PruneAudit* audit) const {
  return std::visit([&](const auto& t) { return t.query(t.points()[point], k, audit); }, tree_);
}

KnnResult KnnIndex::brute_query(std::size_t point, int k) const {
  return std::visit(
      [&](const auto& t) {
        using Tree = std::decay_t<decltype(t)>;
        using Space = std::conditional_t<std::is_same_v<Tree, BallTree<IKFeatureSpace>>,
                                         IKFeatureSpace, EuclideanSpace>;
        return brute_knn<Space>(t.points(), t.points()[point], k);
      },
      tree_);
}

KnnResult KnnIndex::tree_query(const FeatureVector& q, int k) const {
  if (auto* t = std::get_if<BallTree<IKFeatureSpace>>(&tree_)) {
    return t->query(encode(*metric_.model, q), k);
  }
  const auto& t = std::get<BallTree<EuclideanSpace>>(tree_);
  return t.query(metric_.kind == MetricKind::NormalizedLinear ? normalize_linear(q) : q, k);
}

KnnResult KnnIndex::brute_query(const FeatureVector& q, int k) const {
  if (auto* t = std::get_if<BallTree<IKFeatureSpace>>(&tree_)) {
    return brute_knn<IKFeatureSpace>(t->points(), encode(*metric_.model, q), k);
  }
  const auto& t = std::get<BallTree<EuclideanSpace>>(tree_);
  return brute_knn<EuclideanSpace>(
      t.points(), metric_.kind == MetricKind::NormalizedLinear ? normalize_linear(q) : q, k);
}

double precision_at_k(const Dataset& ds, const MetricSpec& metric, int k, int leaf_size,
                      int workers) {
  const auto& labels = ds.require_labels();
  if (k < 1 || ds.size() <= static_cast<std::size_t>(k)) {
    throw InvalidArgument("precision@k needs 1 <= k < n");
  }
  const KnnIndex index(ds.points, metric, leaf_size, workers);
  std::vector<double> per_query(ds.size());
  parallel_for(ds.size(), workers, [&](std::size_t q) {
    auto found = index.tree_query(q, k + 1).neighbors;
    auto self = std::find_if(found.begin(), found.end(),
                             [&](const Neighbor& n) { return n.index == static_cast<Index>(q); });
    found.erase(self != found.end() ? self : found.end() - 1);
    int hits = 0;
    for (const auto& n : found) hits += labels[n.index] == labels[q];
    per_query[q] = static_cast<double>(hits) / k;
  });
  double sum = 0.0;
  for (double p : per_query) sum += p;
  return sum / static_cast<double>(ds.size());
}

BenchReport bench_index(const Dataset& ds, const MetricSpec& metric, int k, int leaf_size) {
  const KnnIndex index(ds.points, metric, leaf_size);
  BenchReport report;
  report.metric = metric_name(metric.kind);
  report.queries = ds.size();
  for (std::size_t q = 0; q < ds.size(); ++q) {
    report.brute += index.brute_query(q, k).stats;
    report.tree += index.tree_query(q, k).stats;
  }
  return report;
}

}  // namespace ik
