#include "ik/measures.hpp"

#include "ik/error.hpp"
#include "ik/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace ik {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double cosine(const FeatureVector& x, const FeatureVector& y) {
  const double nx = std::sqrt(x.squared_norm());
  const double ny = std::sqrt(y.squared_norm());
  if (nx == 0.0 || ny == 0.0) return (nx == 0.0 && ny == 0.0) ? 1.0 : 0.0;
  return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

double shared_fraction(const NeighborContext::Neighborhood& a,
                       const NeighborContext::Neighborhood& b, int k) {
  auto na = a.neighbors;
  auto nb = b.neighbors;
  std::sort(na.begin(), na.end());
  std::sort(nb.begin(), nb.end());
  std::vector<Index> common;
  std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / k;
}

double adaptive_gaussian(double sq_dist, double sx, double sy) {
  const double scale = sx * sy;
  if (scale == 0.0) return sq_dist == 0.0 ? 1.0 : 0.0;
  return std::exp(-sq_dist / scale);
}

const NeighborContext& require_context(const NeighborContext* ctx, int k) {
  if (ctx == nullptr) throw InvalidArgument("context required: SNN and AG need a neighbor context");
  if (ctx->k() != k) throw InvalidArgument("neighbor context built with a different k");
  return *ctx;
}

}  // namespace

void validate(const MeasureSpec& spec) {
  std::visit(overloaded{
                 [](const IsolationMeasure& m) {
                   if (!m.model) throw InvalidArgument("IK measure requires a fitted model");
                 },
                 [](const GaussianMeasure& m) {
                   if (!(m.sigma > 0.0)) throw InvalidArgument("gaussian sigma must be > 0");
                 },
                 [](const LinearMeasure&) {},
                 [](const LpMeasure& m) {
                   if (!(m.p > 0.0)) throw InvalidArgument("lp requires p > 0");
                 },
                 [](const SharedNeighborMeasure& m) {
                   if (m.k < 1) throw InvalidArgument("snn k must be >= 1");
                 },
                 [](const AdaptiveGaussianMeasure& m) {
                   if (m.k < 1) throw InvalidArgument("ag k must be >= 1");
                 },
             },
             spec);
}

std::string measure_name(const MeasureSpec& spec) {
  return std::visit(overloaded{
                        [](const IsolationMeasure&) { return std::string("IK"); },
                        [](const GaussianMeasure&) { return std::string("GK"); },
                        [](const LinearMeasure&) { return std::string("LK"); },
                        [](const LpMeasure& m) {
                          std::string s = std::to_string(m.p);
                          s.erase(s.find_last_not_of('0') + 1);
                          if (s.back() == '.') s.pop_back();
                          return "L" + s;
                        },
                        [](const SharedNeighborMeasure&) { return std::string("SNN"); },
                        [](const AdaptiveGaussianMeasure&) { return std::string("AG"); },
                    },
                    spec);
}

bool is_distance(const MeasureSpec& spec) { return std::holds_alternative<LpMeasure>(spec); }

bool needs_context(const MeasureSpec& spec) {
  return std::holds_alternative<SharedNeighborMeasure>(spec) ||
         std::holds_alternative<AdaptiveGaussianMeasure>(spec);
}

NeighborContext::NeighborContext(std::span<const FeatureVector> reference, int k, int workers)
    : reference_(reference.begin(), reference.end()), k_(k) {
  if (k < 1) throw InvalidArgument("neighbor context requires k >= 1");
  if (reference_.size() < static_cast<std::size_t>(k) + 1) {
    throw InsufficientData("neighbor context needs more than k points");
  }
  members_.resize(reference_.size());
  parallel_for(reference_.size(), workers,
               [&](std::size_t i) { members_[i] = search(reference_[i]); });
}

NeighborContext::Neighborhood NeighborContext::search(const FeatureVector& x) const {
  std::vector<std::pair<double, Index>> cand;
  cand.reserve(reference_.size());
  bool self_skipped = false;
  for (std::size_t i = 0; i < reference_.size(); ++i) {
    const double d = squared_distance(x, reference_[i]);
    if (d == 0.0 && !self_skipped) {
      self_skipped = true;
      continue;
    }
    cand.emplace_back(d, static_cast<Index>(i));
  }
  std::partial_sort(cand.begin(), cand.begin() + k_, cand.end());
  Neighborhood out;
  out.neighbors.reserve(k_);
  for (int j = 0; j < k_; ++j) out.neighbors.push_back(cand[j].second);
  out.kth_distance = std::sqrt(cand[k_ - 1].first);
  return out;
}

NeighborContext::Neighborhood NeighborContext::lookup(const FeatureVector& x) const {
  return search(x);
}

double evaluate(const MeasureSpec& spec, const FeatureVector& x, const FeatureVector& y,
                const NeighborContext* ctx) {
  validate(spec);
  require_same_dim(x, y);
  return std::visit(
      overloaded{
          [&](const IsolationMeasure& m) {
            return similarity(encode(*m.model, x), encode(*m.model, y));
          },
          [&](const GaussianMeasure& m) {
            return std::exp(-squared_distance(x, y) / (m.sigma * m.sigma));
          },
          [&](const LinearMeasure&) { return cosine(x, y); },
          [&](const LpMeasure& m) { return lp_distance(x, y, m.p); },
          [&](const SharedNeighborMeasure& m) {
            const auto& c = require_context(ctx, m.k);
            return shared_fraction(c.lookup(x), c.lookup(y), m.k);
          },
          [&](const AdaptiveGaussianMeasure& m) {
            const auto& c = require_context(ctx, m.k);
            return adaptive_gaussian(squared_distance(x, y), c.lookup(x).kth_distance,
                                     c.lookup(y).kth_distance);
          },
      },
      spec);
}

double dissimilarity(const MeasureSpec& spec, const FeatureVector& x, const FeatureVector& y,
                     const NeighborContext* ctx) {
  const double v = evaluate(spec, x, y, ctx);
  if (is_distance(spec)) return v;
  if (std::holds_alternative<LinearMeasure>(spec)) return (1.0 - v) / 2.0;
  return 1.0 - v;
}

std::vector<double> dissimilarities_to(const MeasureSpec& spec, const FeatureVector& query,
                                       std::span<const FeatureVector> points,
                                       const NeighborContext* ctx, int workers) {
  validate(spec);
  std::vector<double> out(points.size());
  if (const auto* m = std::get_if<IsolationMeasure>(&spec)) {
    const IKCode q = encode(*m->model, query);
    parallel_for(points.size(), workers, [&](std::size_t i) {
      out[i] = ik_distance(q, encode(*m->model, points[i]));
    });
    return out;
  }
  if (needs_context(spec)) {
    const int k = std::holds_alternative<SharedNeighborMeasure>(spec)
                      ? std::get<SharedNeighborMeasure>(spec).k
                      : std::get<AdaptiveGaussianMeasure>(spec).k;
    const auto& c = require_context(ctx, k);
    if (c.size() != points.size()) throw InvalidArgument("neighbor context built over other points");
    const auto qn = c.lookup(query);
    const bool snn = std::holds_alternative<SharedNeighborMeasure>(spec);
    parallel_for(points.size(), workers, [&](std::size_t i) {
      const auto& yn = c.member(i);
      out[i] = snn ? 1.0 - shared_fraction(qn, yn, k)
                   : 1.0 - adaptive_gaussian(squared_distance(query, points[i]),
                                             qn.kth_distance, yn.kth_distance);
    });
    return out;
  }
  parallel_for(points.size(), workers,
               [&](std::size_t i) { out[i] = dissimilarity(spec, query, points[i], ctx); });
  return out;
}

}  // namespace ik
