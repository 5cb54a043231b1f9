#include "ik/experiments.hpp"

#include "ik/error.hpp"
#include "ik/isolation_kernel.hpp"
#include "ik/parallel.hpp"
#include "ik/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace ik {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// splitmix64 finalizer: decorrelates (seed, stream) pairs for sub-generators.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard error of the mean.
double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

void write_comment(std::ostream& out, std::string_view comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
}

}  // namespace

std::string recipe_name(const MeasureRecipe& recipe) {
  return std::visit(
      overloaded{
          [](const IsolationRecipe& r) { return "IK(psi=" + std::to_string(r.psi) + ")"; },
          [](const GaussianMeasure& m) { return "GK(sigma=" + format_double(m.sigma) + ")"; },
          [](const LinearMeasure&) { return std::string("LK"); },
          [](const LpMeasure& m) { return "L" + format_double(m.p); },
          [](const SharedNeighborMeasure& m) { return "SNN(k=" + std::to_string(m.k) + ")"; },
          [](const AdaptiveGaussianMeasure& m) { return "AG(k=" + std::to_string(m.k) + ")"; },
      },
      recipe);
}

BoundMeasure bind_measure(const MeasureRecipe& recipe, std::span<const FeatureVector> fit_data,
                          std::uint64_t seed, int workers) {
  return std::visit(
      overloaded{
          [&](const IsolationRecipe& r) {
            auto model = std::make_shared<const IKModel>(fit(fit_data, r.psi, r.t, seed));
            return BoundMeasure{IsolationMeasure{std::move(model)}, std::nullopt};
          },
          [&](const SharedNeighborMeasure& m) {
            return BoundMeasure{m, NeighborContext(fit_data, m.k, workers)};
          },
          [&](const AdaptiveGaussianMeasure& m) {
            return BoundMeasure{m, NeighborContext(fit_data, m.k, workers)};
          },
          [&](const auto& m) { return BoundMeasure{m, std::nullopt}; },
      },
      recipe);
}

std::string query_kind_name(QueryKind kind) {
  return kind == QueryKind::BetweenClusters ? "between_clusters" : "sparse_center";
}

FeatureVector instability_query(const Dataset& ds, QueryKind kind) {
  const auto& labels = ds.require_labels();
  std::map<int, std::vector<Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Index>(i));
  if (groups.size() != 2) throw InvalidArgument("instability queries need exactly two clusters");
  const auto& g0 = groups.begin()->second;
  const auto& g1 = std::next(groups.begin())->second;
  const Eigen::VectorXd m0 = mean_of(ds.points, g0);
  const Eigen::VectorXd m1 = mean_of(ds.points, g1);
  if (kind == QueryKind::BetweenClusters) return FeatureVector::dense(0.5 * (m0 + m1));

  auto spread = [&](const std::vector<Index>& g, const Eigen::VectorXd& m) {
    double s = 0.0;
    for (Index i : g) s += (ds.points[i].to_dense() - m).squaredNorm();
    return s / static_cast<double>(g.size());
  };
  return FeatureVector::dense(spread(g1, m1) > spread(g0, m0) ? m1 : m0);
}

double variance_ratio(std::span<const double> dis) {
  if (dis.empty()) throw InsufficientData("variance ratio of an empty dataset");
  const double m = mean(dis);
  if (m == 0.0) throw InvalidArgument("zero mean dissimilarity: query coincides with every point");
  double var = 0.0;
  for (double x : dis) var += (x / m - 1.0) * (x / m - 1.0);
  return var / static_cast<double>(dis.size());
}

double variance_ratio(const BoundMeasure& measure, const Dataset& ds, const FeatureVector& q,
                      int workers) {
  const auto dis = dissimilarities_to(measure.spec, q, ds.points, measure.ctx(), workers);
  return variance_ratio(dis);
}

int n_epsilon(std::span<const double> dis, double epsilon) {
  if (dis.empty()) throw InsufficientData("n_epsilon of an empty dataset");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  const double lo = *std::min_element(dis.begin(), dis.end());
  const double cut = (1.0 + epsilon) * lo;
  return static_cast<int>(
      std::count_if(dis.begin(), dis.end(), [&](double x) { return x < cut || x == lo; }));
}

int n_epsilon(const BoundMeasure& measure, const Dataset& ds, const FeatureVector& q,
              double epsilon, int workers) {
  const auto dis = dissimilarities_to(measure.spec, q, ds.points, measure.ctx(), workers);
  return n_epsilon(dis, epsilon);
}

std::vector<InstabilityRow> instability_sweep(const InstabilityConfig& config) {
  std::vector<InstabilityRow> rows;
  for (Index d : config.dims) {
    const Dataset ds = gen_gaussians({d, config.n_per_cluster, config.separation, config.seed});
    const FeatureVector queries[2] = {instability_query(ds, QueryKind::BetweenClusters),
                                      instability_query(ds, QueryKind::SparseCenter)};
    for (const auto& recipe : config.measures) {
      const BoundMeasure bound = bind_measure(recipe, ds.points, config.seed, config.workers);
      for (int qk = 0; qk < 2; ++qk) {
        const auto dis =
            dissimilarities_to(bound.spec, queries[qk], ds.points, bound.ctx(), config.workers);
        InstabilityRow row;
        row.measure = recipe_name(recipe);
        row.d = d;
        row.query_kind = static_cast<QueryKind>(qk);
        row.variance_ratio = variance_ratio(dis);
        row.n_epsilon = n_epsilon(dis, config.epsilon);
        row.epsilon = config.epsilon;
        row.seed = config.seed;
        rows.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const InstabilityRow& a, const InstabilityRow& b) {
    return std::tie(a.measure, a.d, a.query_kind) < std::tie(b.measure, b.d, b.query_kind);
  });
  return rows;
}

std::string source_name(PartitionSource source) {
  return source == PartitionSource::GivenData ? "given_data" : "uniform";
}

Dataset uniform_on_bounding_box(const Dataset& ds, std::size_t n, std::uint64_t seed) {
  if (ds.points.empty()) throw InsufficientData("bounding box of an empty dataset");
  Eigen::VectorXd lo = ds.points.front().to_dense();
  Eigen::VectorXd hi = lo;
  for (const auto& p : ds.points) {
    const Eigen::VectorXd v = p.to_dense();
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset out;
  out.name = "uniform-box";
  out.dim = ds.dim;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd v(ds.dim);
    for (Index j = 0; j < ds.dim; ++j) v[j] = lo[j] + (hi[j] - lo[j]) * unit(gen);
    out.points.push_back(FeatureVector::dense(std::move(v)));
  }
  return out;
}

std::vector<TSweepRow> vary_t_sweep(const Dataset& ds, const FeatureVector& q, int psi,
                                    std::span<const int> t_values, int trials,
                                    PartitionSource source, std::uint64_t seed, double epsilon,
                                    int workers) {
  if (t_values.empty()) throw InvalidArgument("t sweep needs at least one t value");
  if (trials < 1) throw InvalidArgument("t sweep needs at least one trial");
  const int t_max = *std::max_element(t_values.begin(), t_values.end());

  // n_eps[trial][ti]
  std::vector<std::vector<double>> n_eps(trials, std::vector<double>(t_values.size()));
  parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t r) {
    const std::uint64_t model_seed = derive_seed(seed, r);
    Dataset uniform;
    std::span<const FeatureVector> fit_data = ds.points;
    if (source == PartitionSource::Uniform) {
      uniform = uniform_on_bounding_box(ds, ds.size(), derive_seed(seed, 1'000'000 + r));
      fit_data = uniform.points;
    }
    // Partitioning i depends only on (seed, i), so the t-partitioning model is
    // the first t partitionings of the t_max model: encode once, truncate.
    const IKModel model = fit(fit_data, psi, t_max, model_seed);
    const IKCode qc = encode(model, q);
    const auto codes = encode_all(model, ds.points);
    for (std::size_t ti = 0; ti < t_values.size(); ++ti) {
      const int t = t_values[ti];
      std::vector<double> dis(codes.size());
      for (std::size_t i = 0; i < codes.size(); ++i) {
        int matches = 0;
        for (int c = 0; c < t; ++c) matches += qc.cells[c] == codes[i].cells[c];
        dis[i] = static_cast<double>(t - matches) / t;
      }
      n_eps[r][ti] = n_epsilon(dis, epsilon);
    }
  });

  std::vector<TSweepRow> rows;
  for (std::size_t ti = 0; ti < t_values.size(); ++ti) {
    std::vector<double> v(trials);
    for (int r = 0; r < trials; ++r) v[r] = n_eps[r][ti];
    rows.push_back({t_values[ti], source, mean(v), standard_error(v), trials});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const TSweepRow& a, const TSweepRow& b) { return a.t < b.t; });
  return rows;
}

std::string distribution_name(Distribution dist) {
  switch (dist) {
    case Distribution::Uniform: return "uniform";
    case Distribution::Gaussian: return "gaussian";
    case Distribution::TwoCluster: return "two-cluster";
  }
  return "unknown";
}

FeatureVector sample_point(Distribution dist, Index d, std::mt19937_64& gen) {
  Eigen::VectorXd v(d);
  switch (dist) {
    case Distribution::Uniform: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (Index j = 0; j < d; ++j) v[j] = unit(gen);
      break;
    }
    case Distribution::Gaussian:
    case Distribution::TwoCluster: {
      double shift = 0.0;
      if (dist == Distribution::TwoCluster) {
        shift = std::bernoulli_distribution(0.5)(gen) ? 5.0 : 0.0;
      }
      std::normal_distribution<double> normal(shift, 1.0);
      for (Index j = 0; j < d; ++j) v[j] = normal(gen);
      break;
    }
  }
  return FeatureVector::dense(std::move(v));
}

BinomialBand binomial_band(double p, std::uint64_t trials) {
  return {p, 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

namespace {

IKModel random_model(int psi, int t, Index d, Distribution dist, std::mt19937_64& gen,
                     std::uint64_t seed) {
  std::vector<FeatureVector> pool;
  std::vector<std::int32_t> ids;
  pool.reserve(static_cast<std::size_t>(psi) * t);
  for (int i = 0; i < psi * t; ++i) {
    pool.push_back(sample_point(dist, d, gen));
    ids.push_back(i);
  }
  return IKModel(psi, t, d, seed, std::move(pool), std::move(ids));
}

}  // namespace

std::vector<double> cell_probability_test(int psi, Distribution ref_dist,
                                          Distribution point_dist, Index d,
                                          std::uint64_t trials, std::uint64_t seed) {
  if (psi < 1) throw InvalidArgument("psi must be >= 1");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  std::mt19937_64 gen(seed);
  std::vector<std::uint64_t> counts(psi, 0);
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    const FeatureVector x = sample_point(point_dist, d, gen);
    const IKModel model = random_model(psi, 1, d, ref_dist, gen, seed);
    ++counts[encode(model, x).cells[0]];
  }
  std::vector<double> freq(psi);
  for (int j = 0; j < psi; ++j) freq[j] = static_cast<double>(counts[j]) / static_cast<double>(trials);
  return freq;
}

CollisionReport collision_test(int psi, int t, Index d, std::uint64_t trials, std::uint64_t seed,
                               Distribution dist, std::uint64_t pairs_per_model) {
  if (psi < 1 || t < 1) throw InvalidArgument("psi and t must be >= 1");
  if (trials < 1 || pairs_per_model < 1) throw InvalidArgument("trials must be >= 1");
  std::mt19937_64 gen(seed);
  CollisionReport report;
  while (report.pairs < trials) {
    const IKModel model = random_model(psi, t, d, dist, gen, seed);
    const std::uint64_t batch = std::min(pairs_per_model, trials - report.pairs);
    for (std::uint64_t i = 0; i < batch; ++i) {
      const FeatureVector a = sample_point(dist, d, gen);
      FeatureVector b = sample_point(dist, d, gen);
      while (b == a) b = sample_point(dist, d, gen);
      report.collisions += encode(model, a) == encode(model, b);
      ++report.pairs;
    }
  }
  report.rate = static_cast<double>(report.collisions) / static_cast<double>(report.pairs);
  report.bound = std::pow(static_cast<double>(psi), -static_cast<double>(t));
  report.threshold = report.bound + binomial_band(report.bound, report.pairs).half_width;
  return report;
}

double sample_skewness(std::span<const double> values) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 3) throw InsufficientData("skewness needs at least 3 values");
  const double m = mean(values);
  double m2 = 0.0, m3 = 0.0;
  for (double x : values) {
    m2 += (x - m) * (x - m);
    m3 += (x - m) * (x - m) * (x - m);
  }
  m2 /= n;
  m3 /= n;
  if (m2 == 0.0) return 0.0;
  const double g1 = m3 / std::pow(m2, 1.5);
  return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
}

Dataset uniform_hypercube(Index d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Dataset ds;
  ds.name = "hypercube";
  ds.dim = d;
  ds.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ds.points.push_back(sample_point(Distribution::Uniform, d, gen));
  return ds;
}

HubnessResult hubness(const Dataset& ds, const BoundMeasure& measure, const std::string& name,
                      int k, int workers) {
  const auto n = ds.size();
  if (k < 1 || static_cast<std::size_t>(k) >= n) throw InvalidArgument("hubness needs 1 <= k < n");
  const Eigen::MatrixXd dis = pairwise_dissimilarity(measure.spec, ds.points, measure.ctx(), workers);

  std::vector<std::vector<Index>> knn(n);
  parallel_for(n, workers, [&](std::size_t y) {
    std::vector<std::pair<double, Index>> cand;
    cand.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != y) cand.emplace_back(dis(static_cast<Index>(y), static_cast<Index>(j)), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int i = 0; i < k; ++i) knn[y].push_back(cand[i].second);
  });

  HubnessResult out;
  out.occurrences.assign(n, 0);
  for (const auto& list : knn) {
    for (Index x : list) ++out.occurrences[x];
  }
  std::map<int, std::size_t> histogram;
  for (int o : out.occurrences) ++histogram[o];
  for (const auto& [o, count] : histogram) {
    out.rows.push_back({ds.dim, name, o, static_cast<double>(count) / static_cast<double>(n)});
  }
  std::vector<double> values(out.occurrences.begin(), out.occurrences.end());
  out.skewness = sample_skewness(values);
  return out;
}

std::vector<double> percent_grid() {
  std::vector<double> grid;
  for (int p = 1; p <= 99; ++p) grid.push_back(p / 100.0);
  return grid;
}

DpSearchResult dp_best_ami(const Eigen::MatrixXd& dissimilarity, std::span<const int> truth,
                           int k, std::span<const double> eps_fractions) {
  if (eps_fractions.empty()) throw InvalidArgument("empty epsilon grid");
  DpSearchResult best;
  best.best_ami = -std::numeric_limits<double>::infinity();
  for (double eps : eps_fractions) {
    ClusterResult r = dp_cluster(dissimilarity, k, eps);
    const double score = ami(r.labels, truth);
    r.ami_vs_truth = score;
    if (score > best.best_ami) {
      best.best_ami = score;
      best.best_eps_fraction = eps;
      best.best = std::move(r);
    }
  }
  return best;
}

DataDependenceReport data_dependence_test(double dense_spread, double sparse_spread, int n,
                                          int psi, int t, std::uint64_t seed, double tolerance,
                                          std::size_t min_pairs, int replicates) {
  if (!(dense_spread > 0.0) || !(sparse_spread > 0.0)) {
    throw InvalidArgument("spreads must be > 0");
  }
  if (sparse_spread < dense_spread) throw InvalidArgument("sparse spread must be >= dense spread");
  if (n < 2) throw InvalidArgument("need at least 2 points per region");
  if (replicates < 2) throw InvalidArgument("need at least 2 replicates for a standard error");
  DataDependenceReport report;
  report.replicates = replicates;
  if (psi == 1) {
    report.degenerate = true;
    return report;
  }

  const double offset = 6.0 * (dense_spread + sparse_spread);
  const auto bin_of = [&](double dist) { return static_cast<std::int64_t>(dist / tolerance); };
  // Pairs within one replicate share points and the model, so they are far
  // from independent; the standard error comes from replicate means.
  std::vector<double> dense_means, sparse_means;
  for (int rep = 0; rep < replicates; ++rep) {
    std::mt19937_64 gen(derive_seed(seed, 2 * static_cast<std::uint64_t>(rep)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<FeatureVector> points;
    points.reserve(2 * static_cast<std::size_t>(n));
    for (int region = 0; region < 2; ++region) {
      const double sd = region == 0 ? dense_spread : sparse_spread;
      const double cx = region == 0 ? 0.0 : offset;
      for (int i = 0; i < n; ++i) {
        const double x = cx + sd * normal(gen);
        const double y = sd * normal(gen);
        points.push_back(FeatureVector::dense({x, y}));
      }
    }
    const IKModel model =
        fit(points, psi, t, derive_seed(seed, 2 * static_cast<std::uint64_t>(rep) + 1));
    const auto codes = encode_all(model, points);

    // bins[region][bin] -> pair similarities, pairs enumerated in index order.
    std::map<std::int64_t, std::vector<double>> bins[2];
    for (int region = 0; region < 2; ++region) {
      const std::size_t base = static_cast<std::size_t>(region) * n;
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double dist = distance(points[base + i], points[base + j]);
          bins[region][bin_of(dist)].push_back(similarity(codes[base + i], codes[base + j]));
        }
      }
    }

    std::vector<double> dense_sims, sparse_sims;
    for (const auto& [bin, dense_bin] : bins[0]) {
      auto it = bins[1].find(bin);
      if (it == bins[1].end()) continue;
      const std::size_t take = std::min(dense_bin.size(), it->second.size());
      dense_sims.insert(dense_sims.end(), dense_bin.begin(), dense_bin.begin() + take);
      sparse_sims.insert(sparse_sims.end(), it->second.begin(), it->second.begin() + take);
    }
    if (dense_sims.size() < min_pairs) {
      throw InsufficientData("only " + std::to_string(dense_sims.size()) +
                             " matched-distance pairs; increase n or the tolerance");
    }
    report.matched_pairs += dense_sims.size();
    dense_means.push_back(mean(dense_sims));
    sparse_means.push_back(mean(sparse_sims));
  }

  report.dense_mean = mean(dense_means);
  report.sparse_mean = mean(sparse_means);
  report.dense_stderr = standard_error(dense_means);
  report.sparse_stderr = standard_error(sparse_means);
  report.pooled_stderr = std::hypot(report.dense_stderr, report.sparse_stderr);
  report.gap_in_stderr = report.pooled_stderr > 0.0
                             ? (report.sparse_mean - report.dense_mean) / report.pooled_stderr
                             : 0.0;
  return report;
}

void write_instability_csv(std::ostream& out, std::span<const InstabilityRow> rows,
                           std::string_view comment) {
  write_comment(out, comment);
  out << "measure,d,query_kind,variance_ratio,n_epsilon,epsilon,seed\n";
  for (const auto& r : rows) {
    out << r.measure << ',' << r.d << ',' << query_kind_name(r.query_kind) << ','
        << format_double(r.variance_ratio) << ',' << r.n_epsilon << ',' << format_double(r.epsilon)
        << ',' << r.seed << '\n';
  }
}

void write_tsweep_csv(std::ostream& out, std::span<const TSweepRow> rows,
                      std::string_view comment) {
  write_comment(out, comment);
  out << "t,source,mean_n_eps,stderr,trials\n";
  for (const auto& r : rows) {
    out << r.t << ',' << source_name(r.source) << ',' << format_double(r.mean_n_eps) << ','
        << format_double(r.stderr_n_eps) << ',' << r.trials << '\n';
  }
}

void write_hubness_csv(std::ostream& out, std::span<const HubnessRow> rows,
                       std::string_view comment) {
  write_comment(out, comment);
  out << "measure,d,o_k,p\n";
  for (const auto& r : rows) {
    out << r.measure << ',' << r.d << ',' << r.o_k << ',' << format_double(r.p_o_k) << '\n';
  }
}

void write_clustering_csv(std::ostream& out, std::span<const int> labels,
                          std::string_view comment) {
  write_comment(out, comment);
  out << "point_id,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

}  // namespace ik
