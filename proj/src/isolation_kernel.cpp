#include "ik/isolation_kernel.hpp"

#include "ik/error.hpp"
#include "ik/parallel.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>

namespace ik {

IKModel::IKModel(int psi, int t, Index dim, std::uint64_t seed, std::vector<FeatureVector> pool,
                 std::vector<std::int32_t> reference_ids)
    : psi_(psi),
      t_(t),
      dim_(dim),
      seed_(seed),
      pool_(std::move(pool)),
      reference_ids_(std::move(reference_ids)) {
  if (psi_ < 1 || t_ < 1) throw InvalidArgument("psi and t must be positive");
  if (reference_ids_.size() != static_cast<std::size_t>(psi_) * t_) {
    throw InvalidArgument("model must hold exactly t*psi references");
  }
  for (auto id : reference_ids_) {
    if (id < 0 || static_cast<std::size_t>(id) >= pool_.size()) {
      throw InvalidArgument("reference id out of range");
    }
  }
  for (const auto& p : pool_) {
    if (p.dim() != dim_) {
      throw DimensionMismatch("reference of dimension " + std::to_string(p.dim()) +
                              " in model of dimension " + std::to_string(dim_));
    }
  }
}

bool operator==(const IKModel& a, const IKModel& b) {
  if (a.psi_ != b.psi_ || a.t_ != b.t_ || a.dim_ != b.dim_ || a.seed_ != b.seed_) return false;
  for (int i = 0; i < a.t_; ++i) {
    for (int j = 0; j < a.psi_; ++j) {
      if (!(a.reference(i, j) == b.reference(i, j))) return false;
    }
  }
  return true;
}

IKModel fit(std::span<const FeatureVector> data, int psi, int t, std::uint64_t seed) {
  if (psi < 1) throw InvalidArgument("psi must be >= 1");
  if (t < 1) throw InvalidArgument("t must be >= 1");
  if (data.size() < static_cast<std::size_t>(psi)) {
    throw InsufficientData("dataset has " + std::to_string(data.size()) +
                           " points but psi is " + std::to_string(psi));
  }
  const Index dim = data.front().dim();
  for (const auto& p : data) {
    if (p.dim() != dim) {
      throw DimensionMismatch("data mixes dimensions " + std::to_string(dim) + " and " +
                              std::to_string(p.dim()));
    }
  }

  const auto n = static_cast<std::int64_t>(data.size());
  std::vector<std::int32_t> pool_of(data.size(), -1);
  std::vector<FeatureVector> pool;
  std::vector<std::int32_t> ids;
  ids.reserve(static_cast<std::size_t>(psi) * t);
  std::vector<std::int64_t> order(data.size());

  for (int i = 0; i < t; ++i) {
    std::mt19937_64 gen(seed + static_cast<std::uint64_t>(i));
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: the first psi slots become the sample.
    for (int j = 0; j < psi; ++j) {
      std::uniform_int_distribution<std::int64_t> pick(j, n - 1);
      std::swap(order[j], order[pick(gen)]);
      const auto src = order[j];
      if (pool_of[src] < 0) {
        pool_of[src] = static_cast<std::int32_t>(pool.size());
        pool.push_back(data[src]);
      }
      ids.push_back(pool_of[src]);
    }
  }
  return IKModel(psi, t, dim, seed, std::move(pool), std::move(ids));
}

namespace {

void squared_distances_to_pool(const IKModel& model, const FeatureVector& x,
                               std::vector<double>& out) {
  const auto pool = model.pool();
  out.resize(pool.size());
  for (std::size_t k = 0; k < pool.size(); ++k) out[k] = squared_distance(x, pool[k]);
}

IKCode nearest_cells(const IKModel& model, const std::vector<double>& dist) {
  IKCode code;
  code.psi = model.psi();
  code.cells.resize(static_cast<std::size_t>(model.t()));
  const auto ids = model.reference_ids();
  for (int i = 0; i < model.t(); ++i) {
    const auto* row = ids.data() + static_cast<std::size_t>(i) * model.psi();
    int best = 0;
    double best_d = dist[row[0]];
    for (int j = 1; j < model.psi(); ++j) {
      if (dist[row[j]] < best_d) {
        best_d = dist[row[j]];
        best = j;
      }
    }
    code.cells[i] = best;
  }
  return code;
}

}  // namespace

IKCode encode(const IKModel& model, const FeatureVector& x) {
  if (x.dim() != model.dim()) {
    throw DimensionMismatch("point of dimension " + std::to_string(x.dim()) +
                            " against model of dimension " + std::to_string(model.dim()));
  }
  std::vector<double> dist;
  squared_distances_to_pool(model, x, dist);
  return nearest_cells(model, dist);
}

std::vector<IKCode> encode_all(const IKModel& model, std::span<const FeatureVector> points,
                               int workers) {
  std::vector<IKCode> codes(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) { codes[i] = encode(model, points[i]); });
  return codes;
}

namespace {

void require_compatible(const IKCode& a, const IKCode& b) {
  if (a.psi != b.psi || a.cells.size() != b.cells.size()) {
    throw IncompatibleCodes("psi/t " + std::to_string(a.psi) + "/" + std::to_string(a.t()) +
                            " vs " + std::to_string(b.psi) + "/" + std::to_string(b.t()));
  }
  if (a.cells.empty()) throw IncompatibleCodes("empty code");
}

}  // namespace

int match_count(const IKCode& a, const IKCode& b) {
  require_compatible(a, b);
  int matches = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) matches += a.cells[i] == b.cells[i];
  return matches;
}

double similarity(const IKCode& a, const IKCode& b) {
  return static_cast<double>(match_count(a, b)) / a.t();
}

double ik_distance(const IKCode& a, const IKCode& b) {
  return static_cast<double>(a.t() - match_count(a, b)) / a.t();
}

double feature_space_distance(const IKCode& a, const IKCode& b) {
  // ||phi(a) - phi(b)||^2 = 2t - 2 * matches
  return std::sqrt(2.0 * (a.t() - match_count(a, b)));
}

Eigen::MatrixXd gram(std::span<const IKCode> codes, int workers) {
  const auto n = static_cast<Index>(codes.size());
  Eigen::MatrixXd g(n, n);
  parallel_for(codes.size(), workers, [&](std::size_t i) {
    const auto r = static_cast<Index>(i);
    g(r, r) = similarity(codes[i], codes[i]);
    for (Index c = r + 1; c < n; ++c) g(r, c) = similarity(codes[i], codes[c]);
  });
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < r; ++c) g(r, c) = g(c, r);
  }
  return g;
}

Eigen::MatrixXd gram(const IKModel& model, std::span<const FeatureVector> points, int workers) {
  const auto codes = encode_all(model, points, workers);
  return gram(codes, workers);
}

}  // namespace ik
