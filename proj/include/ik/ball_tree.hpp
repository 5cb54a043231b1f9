#pragma once

#include "ik/dataset.hpp"
#include "ik/error.hpp"
#include "ik/feature_vector.hpp"
#include "ik/isolation_kernel.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ik {

struct Neighbor {
  Index index;
  double distance;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Lexicographic on (distance, index): the order every k-NN result uses.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

struct QueryStats {
  std::uint64_t distance_evaluations = 0;
  std::uint64_t nodes_visited = 0;
  std::chrono::nanoseconds wall_time{0};

  QueryStats& operator+=(const QueryStats& o) {
    distance_evaluations += o.distance_evaluations;
    nodes_visited += o.nodes_visited;
    wall_time += o.wall_time;
    return *this;
  }
};

struct KnnResult {
  std::vector<Neighbor> neighbors;  // ascending by (distance, index)
  QueryStats stats;
};

// Euclidean distance over raw points; node centers are means.
struct EuclideanSpace {
  using Point = FeatureVector;
  using Center = FeatureVector;
  static double distance(const Point& a, const Point& b) { return ik::distance(a, b); }
  static double center_distance(const Point& a, const Center& c) { return ik::distance(a, c); }
  static Center center(std::span<const Point> points, std::span<const Index> members);
};

// Mean of a set of IK feature maps: per partitioning, the fraction of members
// in each cell. Not a code, but distances to it need only the code.
struct CellHistogram {
  int psi = 0;
  int t = 0;
  std::vector<double> weights;  // t * psi, partitioning-major
  double squared_norm = 0.0;
};

// Euclidean distance between (unscaled) IK feature maps; node centers are
// feature-space means held as cell histograms.
struct IKFeatureSpace {
  using Point = IKCode;
  using Center = CellHistogram;
  static double distance(const Point& a, const Point& b) { return feature_space_distance(a, b); }
  static double center_distance(const Point& a, const Center& c);
  static Center center(std::span<const Point> points, std::span<const Index> members);
};

// Records every pruned node and the k-th distance in force when it was cut.
struct PruneAudit {
  struct Event {
    int node;
    double lower_bound;
    double kth_distance;
  };
  std::vector<Event> events;
};

namespace detail {

inline void check_k(int k, std::size_t n) {
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InvalidArgument("k=" + std::to_string(k) + " out of range [1, " + std::to_string(n) + "]");
  }
}

// Bounded max-heap on (distance, index).
class KBest {
 public:
  explicit KBest(int k) : k_(static_cast<std::size_t>(k)) { heap_.reserve(k_); }

  bool full() const { return heap_.size() == k_; }
  double worst_distance() const { return heap_.front().distance; }

  void offer(const Neighbor& n) {
    if (!full()) {
      heap_.push_back(n);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (closer(n, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = n;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  std::vector<Neighbor> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Neighbor> heap_;
};

}  // namespace detail

/// Linear scan; the exactness oracle for BallTree::query.
template <typename Space>
KnnResult brute_knn(std::span<const typename Space::Point> points, const typename Space::Point& q,
                    int k, const Space& space = {}) {
  detail::check_k(k, points.size());
  const auto start = std::chrono::steady_clock::now();
  detail::KBest best(k);
  for (std::size_t i = 0; i < points.size(); ++i) {
    best.offer({static_cast<Index>(i), space.distance(q, points[i])});
  }
  KnnResult r;
  r.neighbors = std::move(best).sorted();
  r.stats.distance_evaluations = points.size();
  r.stats.nodes_visited = 0;
  r.stats.wall_time = std::chrono::steady_clock::now() - start;
  return r;
}

/// Exact metric ball tree.
///
/// Splits use two far-apart seeds: the member farthest from the node center,
/// then the member farthest from that one; every member goes to the nearer
/// seed (ties to the first). No coordinates are needed beyond the center, so
/// the same tree works over IK codes. Construction is deterministic.
template <typename Space>
class BallTree {
 public:
  using Point = typename Space::Point;

  using Center = typename Space::Center;

  struct Node {
    Center center;
    double radius = 0.0;
    int left = -1;
    int right = -1;
    Index begin = 0;  // range into order()
    Index end = 0;

    bool leaf() const { return left < 0; }
  };

  BallTree(std::vector<Point> points, int leaf_size = 15, Space space = {})
      : points_(std::move(points)), leaf_size_(leaf_size), space_(std::move(space)) {
    if (points_.empty()) throw InsufficientData("cannot build a ball tree over no points");
    if (leaf_size_ < 1) throw InvalidArgument("leaf size must be >= 1");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<Index>(i);
    build(0, static_cast<Index>(points_.size()));
  }

  std::size_t size() const { return points_.size(); }
  int leaf_size() const { return leaf_size_; }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Index> order() const { return order_; }
  std::span<const Point> points() const { return points_; }
  std::span<const Index> members(const Node& n) const {
    return std::span<const Index>(order_).subspan(n.begin, n.end - n.begin);
  }

  KnnResult query(const Point& q, int k, PruneAudit* audit = nullptr) const {
    detail::check_k(k, points_.size());
    const auto start = std::chrono::steady_clock::now();
    detail::KBest best(k);
    KnnResult r;
    visit(0, q, best, r.stats, audit);
    r.neighbors = std::move(best).sorted();
    r.stats.wall_time = std::chrono::steady_clock::now() - start;
    return r;
  }

 private:
  // Relative slack so rounding in (distance - radius) never prunes a node
  // holding a point tied with the current k-th candidate.
  static constexpr double kPruneSlack = 1e-9;

  int build(Index begin, Index end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    auto span = std::span<const Index>(order_).subspan(begin, end - begin);
    Center center = space_.center(points_, span);
    double radius = 0.0;
    for (Index m : span) radius = std::max(radius, space_.center_distance(points_[m], center));
    nodes_[id].center = std::move(center);
    nodes_[id].radius = radius;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= leaf_size_) return id;

    const Index mid = split(begin, end, nodes_[id].center);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  template <typename From, typename Dist>
  Index farthest_from(const From& from, Dist dist, Index begin, Index end) const {
    Index best = order_[begin];
    double best_d = -1.0;
    for (Index i = begin; i < end; ++i) {
      const double d = dist(points_[order_[i]], from);
      if (d > best_d) {
        best_d = d;
        best = order_[i];
      }
    }
    return best;
  }

  Index split(Index begin, Index end, const Center& center) {
    const Index a = farthest_from(
        center, [&](const Point& p, const Center& c) { return space_.center_distance(p, c); },
        begin, end);
    const Index b = farthest_from(
        points_[a], [&](const Point& p, const Point& o) { return space_.distance(p, o); }, begin,
        end);
    auto first = order_.begin() + begin;
    auto last = order_.begin() + end;
    auto mid = std::stable_partition(first, last, [&](Index m) {
      return space_.distance(points_[m], points_[a]) <= space_.distance(points_[m], points_[b]);
    });
    if (mid == first || mid == last) {
      // All members coincide under the metric; halve by position instead.
      return begin + (end - begin) / 2;
    }
    return static_cast<Index>(mid - order_.begin());
  }

  void scan_leaf(const Node& node, const Point& q, detail::KBest& best, QueryStats& stats) const {
    for (Index i = node.begin; i < node.end; ++i) {
      const Index m = order_[i];
      best.offer({m, space_.distance(q, points_[m])});
      ++stats.distance_evaluations;
    }
  }

  bool prunable(double lower_bound, const detail::KBest& best) const {
    if (!best.full()) return false;
    const double kth = best.worst_distance();
    return lower_bound - kth > kPruneSlack * std::max(1.0, kth);
  }

  void visit(int id, const Point& q, detail::KBest& best, QueryStats& stats,
             PruneAudit* audit) const {
    const Node& node = nodes_[id];
    ++stats.nodes_visited;
    if (node.leaf()) {
      scan_leaf(node, q, best, stats);
      return;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    const double lb_l = std::max(0.0, space_.center_distance(q, l.center) - l.radius);
    const double lb_r = std::max(0.0, space_.center_distance(q, r.center) - r.radius);
    stats.distance_evaluations += 2;
    const bool left_first = lb_l <= lb_r;
    const int ids[2] = {left_first ? node.left : node.right, left_first ? node.right : node.left};
    const double lbs[2] = {left_first ? lb_l : lb_r, left_first ? lb_r : lb_l};
    for (int c = 0; c < 2; ++c) {
      if (prunable(lbs[c], best)) {
        if (audit) audit->events.push_back({ids[c], lbs[c], best.worst_distance()});
        continue;
      }
      visit(ids[c], q, best, stats, audit);
    }
  }

  std::vector<Point> points_;
  int leaf_size_;
  Space space_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Dataset-level indexing over the supported metric spaces.

enum class MetricKind { RawEuclidean, IKFeature, NormalizedLinear };

struct MetricSpec {
  MetricKind kind = MetricKind::RawEuclidean;
  std::shared_ptr<const IKModel> model;  // required for IKFeature
};

std::string metric_name(MetricKind kind);

// Scales each point by 1/sqrt(<x, x>); zero vectors are left as they are.
FeatureVector normalize_linear(const FeatureVector& x);

/// A dataset embedded in one metric space with a ball tree over it.
class KnnIndex {
 public:
  KnnIndex(std::span<const FeatureVector> points, const MetricSpec& metric, int leaf_size = 15,
           int workers = 1);

  std::size_t size() const;
  const MetricSpec& metric() const { return metric_; }

  // Query by an indexed point (already embedded).
  KnnResult tree_query(std::size_t point, int k, PruneAudit* audit = nullptr) const;
  KnnResult brute_query(std::size_t point, int k) const;
  // Query by a raw point, embedded on the fly.
  KnnResult tree_query(const FeatureVector& q, int k) const;
  KnnResult brute_query(const FeatureVector& q, int k) const;

  std::size_t node_count() const;

 private:
  MetricSpec metric_;
  std::variant<BallTree<EuclideanSpace>, BallTree<IKFeatureSpace>> tree_;
};

/// Mean fraction of each point's k nearest other points sharing its label.
double precision_at_k(const Dataset& ds, const MetricSpec& metric, int k = 5, int leaf_size = 15,
                      int workers = 1);

struct BenchReport {
  std::string metric;
  std::size_t queries = 0;
  QueryStats brute;
  QueryStats tree;
};

/// Every point queried for its k nearest neighbors by brute force and by
/// the ball tree; totals of both.
BenchReport bench_index(const Dataset& ds, const MetricSpec& metric, int k = 5,
                        int leaf_size = 15);

}  // namespace ik
