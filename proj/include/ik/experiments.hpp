#pragma once

#include "ik/clustering.hpp"
#include "ik/dataset.hpp"
#include "ik/measures.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ik {

// ---------------------------------------------------------------------------
// Measure recipes: a measure before it is bound to a dataset. IK is fitted on
// whatever dataset the recipe is instantiated against; SNN/AG get a neighbor
// context over it.

struct IsolationRecipe {
  int psi = 16;
  int t = 200;
};

using MeasureRecipe = std::variant<IsolationRecipe, GaussianMeasure, LinearMeasure, LpMeasure,
                                   SharedNeighborMeasure, AdaptiveGaussianMeasure>;

std::string recipe_name(const MeasureRecipe& recipe);

struct BoundMeasure {
  MeasureSpec spec;
  std::optional<NeighborContext> context;

  const NeighborContext* ctx() const { return context ? &*context : nullptr; }
};

BoundMeasure bind_measure(const MeasureRecipe& recipe, std::span<const FeatureVector> fit_data,
                          std::uint64_t seed, int workers = 1);

// ---------------------------------------------------------------------------
// Instability of a measure.

enum class QueryKind { BetweenClusters, SparseCenter };
std::string query_kind_name(QueryKind kind);

/// Queries for a two-cluster labeled dataset: the midpoint of the two cluster
/// means, and the mean of the sparser cluster (larger mean squared distance
/// to its own mean; ties to the first label).
FeatureVector instability_query(const Dataset& ds, QueryKind kind);

/// var(m / mean(m)) with the population variance. Throws if mean(m) is 0.
double variance_ratio(std::span<const double> dissimilarities);
double variance_ratio(const BoundMeasure& measure, const Dataset& ds, const FeatureVector& q,
                      int workers = 1);

/// Number of points y with m(q, y) < (1 + eps) * min m; points attaining the
/// minimum always count, so the result is >= 1 even when the minimum is 0.
int n_epsilon(std::span<const double> dissimilarities, double epsilon);
int n_epsilon(const BoundMeasure& measure, const Dataset& ds, const FeatureVector& q,
              double epsilon, int workers = 1);

struct InstabilityRow {
  std::string measure;
  Index d = 0;
  QueryKind query_kind = QueryKind::BetweenClusters;
  double variance_ratio = 0.0;
  int n_epsilon = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

struct InstabilityConfig {
  std::vector<Index> dims{10, 100, 1000, 10000};
  int n_per_cluster = 200;
  double separation = 10.0;
  double epsilon = 0.005;
  std::uint64_t seed = 1;
  std::vector<MeasureRecipe> measures;
  int workers = 1;
};

/// For each d, generates the two-Gaussians dataset and evaluates every measure
/// for both query kinds. Rows are sorted by (measure, d, query kind).
std::vector<InstabilityRow> instability_sweep(const InstabilityConfig& config);

// ---------------------------------------------------------------------------
// N_eps as a function of t.

enum class PartitionSource { GivenData, Uniform };
std::string source_name(PartitionSource source);

struct TSweepRow {
  int t = 0;
  PartitionSource source = PartitionSource::GivenData;
  double mean_n_eps = 0.0;
  double stderr_n_eps = 0.0;
  int trials = 0;
};

/// `trials` fresh IK models per t. With PartitionSource::Uniform the
/// references are drawn from a dataset of |ds| points uniform on the bounding
/// box of ds, rather than from ds itself.
std::vector<TSweepRow> vary_t_sweep(const Dataset& ds, const FeatureVector& q, int psi,
                                    std::span<const int> t_values, int trials,
                                    PartitionSource source, std::uint64_t seed,
                                    double epsilon = 0.005, int workers = 1);

Dataset uniform_on_bounding_box(const Dataset& ds, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Monte-Carlo checks of the Voronoi cell properties.

enum class Distribution { Uniform, Gaussian, TwoCluster };
std::string distribution_name(Distribution dist);

// Uniform: [0,1]^d. Gaussian: N(0, I). TwoCluster: equal mixture of N(0, I)
// and N(5 * 1, I).
FeatureVector sample_point(Distribution dist, Index d, std::mt19937_64& gen);

struct BinomialBand {
  double expected;
  double half_width;  // 3 sigma

  bool contains(double x) const { return std::abs(x - expected) <= half_width; }
};
BinomialBand binomial_band(double p, std::uint64_t trials);

/// Per-trial: one x ~ point_dist and psi references ~ ref_dist; records which
/// reference is nearest. Returns the frequency of each cell index.
std::vector<double> cell_probability_test(int psi, Distribution ref_dist,
                                          Distribution point_dist, Index d,
                                          std::uint64_t trials, std::uint64_t seed);

struct CollisionReport {
  std::uint64_t pairs = 0;
  std::uint64_t collisions = 0;
  double rate = 0.0;
  double bound = 0.0;      // 1 / psi^t
  double threshold = 0.0;  // bound + 3 sigma
  bool within_bound() const { return rate <= threshold; }
};

/// Fraction of random distinct pairs whose codes agree in every partitioning.
/// Pairs are drawn in batches of `pairs_per_model` sharing one freshly drawn
/// model; all points and references come from `dist`.
CollisionReport collision_test(int psi, int t, Index d, std::uint64_t trials,
                               std::uint64_t seed, Distribution dist = Distribution::Gaussian,
                               std::uint64_t pairs_per_model = 1000);

// ---------------------------------------------------------------------------
// Hubness.

struct HubnessRow {
  Index d = 0;
  std::string measure;
  int o_k = 0;
  double p_o_k = 0.0;
};

struct HubnessResult {
  std::vector<int> occurrences;  // O_k per point
  std::vector<HubnessRow> rows;  // p(O_k) for every observed O_k, ascending
  double skewness = 0.0;
};

/// O_k(x) = #{ y != x : x among the k nearest neighbors of y } under the
/// measure's dissimilarity (ties to lower index).
HubnessResult hubness(const Dataset& ds, const BoundMeasure& measure, const std::string& name,
                      int k, int workers = 1);

/// Adjusted Fisher-Pearson sample skewness.
double sample_skewness(std::span<const double> values);

Dataset uniform_hypercube(Index d, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Density-peaks over an epsilon grid.

struct DpSearchResult {
  double best_ami = 0.0;
  double best_eps_fraction = 0.0;
  ClusterResult best;
};

/// Runs dp_cluster for each eps fraction and keeps the best AMI against the
/// dataset labels (first best on ties).
DpSearchResult dp_best_ami(const Eigen::MatrixXd& dissimilarity, std::span<const int> truth,
                           int k, std::span<const double> eps_fractions);
std::vector<double> percent_grid();  // 0.01, 0.02, ..., 0.99

// ---------------------------------------------------------------------------
// Data dependence: two regions with different spread.

struct DataDependenceReport {
  bool degenerate = false;  // psi == 1: every similarity is 1
  int replicates = 0;
  std::size_t matched_pairs = 0;  // summed over replicates
  double sparse_mean = 0.0;
  double dense_mean = 0.0;
  double sparse_stderr = 0.0;
  double dense_stderr = 0.0;
  double pooled_stderr = 0.0;
  double gap_in_stderr = 0.0;  // (sparse_mean - dense_mean) / pooled_stderr
};

/// Two Gaussian regions in the plane (n points each, standard deviations
/// dense_spread and sparse_spread, centers far apart); IK is fitted on the
/// union. Within-region pairs are bucketed by distance in bins of width
/// `tolerance`; each bin contributes equally many pairs from both regions.
/// Means and standard errors are over `replicates` independent draws of the
/// points and the model. Throws InsufficientData if a replicate matches fewer
/// than `min_pairs` pairs.
DataDependenceReport data_dependence_test(double dense_spread, double sparse_spread, int n,
                                          int psi, int t, std::uint64_t seed,
                                          double tolerance = 0.05, std::size_t min_pairs = 100,
                                          int replicates = 10);

// ---------------------------------------------------------------------------
// CSV output. `comment` is written as a leading `# ...` line when nonempty.

void write_instability_csv(std::ostream& out, std::span<const InstabilityRow> rows,
                           std::string_view comment = {});
void write_tsweep_csv(std::ostream& out, std::span<const TSweepRow> rows,
                      std::string_view comment = {});
void write_hubness_csv(std::ostream& out, std::span<const HubnessRow> rows,
                       std::string_view comment = {});
void write_clustering_csv(std::ostream& out, std::span<const int> labels,
                          std::string_view comment = {});

}  // namespace ik
