#include "ik/clustering.hpp"

#include "ik/error.hpp"
#include "ik/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ik {

Eigen::MatrixXd pairwise_dissimilarity(const MeasureSpec& spec,
                                       std::span<const FeatureVector> points,
                                       const NeighborContext* ctx, int workers) {
  validate(spec);
  const auto n = static_cast<Index>(points.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  if (const auto* iso = std::get_if<IsolationMeasure>(&spec)) {
    return Eigen::MatrixXd::Ones(n, n) - gram(*iso->model, points, workers);
  }
  parallel_for(points.size(), workers, [&](std::size_t i) {
    const auto r = static_cast<Index>(i);
    const auto row = dissimilarities_to(spec, points[i], points, ctx);
    for (Index c = r + 1; c < n; ++c) m(r, c) = row[c];
  });
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < r; ++c) m(r, c) = m(c, r);
  }
  return m;
}

ClusterResult dp_cluster(const Eigen::MatrixXd& dis, int k, double eps_fraction) {
  const Index n = dis.rows();
  if (dis.cols() != n) throw InvalidArgument("dissimilarity matrix must be square");
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (k > n) throw InvalidArgument("k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  if (!(eps_fraction > 0.0 && eps_fraction <= 1.0)) {
    throw InvalidArgument("eps fraction must be in (0, 1]");
  }

  double max_dis = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j) max_dis = std::max(max_dis, dis(i, j));
    }
  }
  const double eps = eps_fraction * max_dis;

  std::vector<int> rho(n, 0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) rho[i] += (i != j && dis(i, j) < eps);
  }

  std::vector<Index> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](Index a, Index b) { return rho[a] > rho[b]; });

  std::vector<double> delta(n, 0.0);
  std::vector<Index> parent(n, -1);
  for (Index r = 0; r < n; ++r) {
    const Index i = rank[r];
    if (r == 0) {
      for (Index j = 0; j < n; ++j) delta[i] = std::max(delta[i], dis(i, j));
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (Index s = 0; s < r; ++s) {
      const Index j = rank[s];
      if (dis(i, j) < best) {
        best = dis(i, j);
        parent[i] = j;
      }
    }
    delta[i] = best;
  }

  std::vector<Index> by_gamma(n);
  std::iota(by_gamma.begin(), by_gamma.end(), 0);
  std::stable_sort(by_gamma.begin(), by_gamma.end(), [&](Index a, Index b) {
    return rho[a] * delta[a] > rho[b] * delta[b];
  });

  ClusterResult out;
  out.labels.assign(n, -1);
  out.centers.assign(by_gamma.begin(), by_gamma.begin() + k);
  for (int c = 0; c < k; ++c) out.labels[out.centers[c]] = c;

  const Index top = rank[0];
  if (out.labels[top] < 0) {
    int nearest = 0;
    for (int c = 1; c < k; ++c) {
      if (dis(top, out.centers[c]) < dis(top, out.centers[nearest])) nearest = c;
    }
    out.labels[top] = nearest;
  }
  for (Index r = 1; r < n; ++r) {
    const Index i = rank[r];
    if (out.labels[i] < 0) out.labels[i] = out.labels[parent[i]];
  }
  return out;
}

namespace {

double log_factorial(double x) { return std::lgamma(x + 1.0); }

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace

double ami(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidArgument("label sequences differ in length");
  if (a.empty()) throw InvalidArgument("ami of empty labelings");

  std::map<int, std::size_t> ra, rb;
  for (int x : a) ra.try_emplace(x, ra.size());
  for (int x : b) rb.try_emplace(x, rb.size());
  const std::size_t ka = ra.size(), kb = rb.size();
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
  for (std::size_t i = 0; i < a.size(); ++i) table(ra[a[i]], rb[b[i]]) += 1.0;

  // Equal up to relabeling: a bijective contingency table.
  if (ka == kb) {
    bool bijective = true;
    for (Index r = 0; r < table.rows() && bijective; ++r) {
      bijective = (table.row(r).array() > 0).count() == 1;
    }
    for (Index c = 0; c < table.cols() && bijective; ++c) {
      bijective = (table.col(c).array() > 0).count() == 1;
    }
    if (bijective) return 1.0;
  }

  const double n = static_cast<double>(a.size());
  std::vector<double> row(ka), col(kb);
  for (std::size_t r = 0; r < ka; ++r) row[r] = table.row(r).sum();
  for (std::size_t c = 0; c < kb; ++c) col[c] = table.col(c).sum();

  double mi = 0.0;
  for (std::size_t r = 0; r < ka; ++r) {
    for (std::size_t c = 0; c < kb; ++c) {
      const double nij = table(r, c);
      if (nij > 0) mi += (nij / n) * std::log(n * nij / (row[r] * col[c]));
    }
  }

  double emi = 0.0;
  const double lf_n = log_factorial(n);
  for (std::size_t r = 0; r < ka; ++r) {
    for (std::size_t c = 0; c < kb; ++c) {
      const double ai = row[r], bj = col[c];
      const double lo = std::max(1.0, ai + bj - n);
      const double hi = std::min(ai, bj);
      const double fixed = log_factorial(ai) + log_factorial(bj) + log_factorial(n - ai) +
                           log_factorial(n - bj) - lf_n;
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_p = fixed - log_factorial(nij) - log_factorial(ai - nij) -
                             log_factorial(bj - nij) - log_factorial(n - ai - bj + nij);
        emi += (nij / n) * std::log(n * nij / (ai * bj)) * std::exp(log_p);
      }
    }
  }

  const double mean_h = 0.5 * (entropy(row, n) + entropy(col, n));
  const double denom = mean_h - emi;
  if (std::abs(denom) < 1e-15) return 0.0;
  return (mi - emi) / denom;
}

}  // namespace ik
