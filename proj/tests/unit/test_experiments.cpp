#include "helpers.hpp"

#include "ik/error.hpp"
#include "ik/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace ik;

TEST_CASE("variance ratio") {
  const std::vector<double> same{2.0, 2.0, 2.0};
  CHECK(variance_ratio(same) == 0.0);
  const std::vector<double> v{1.0, 3.0};
  // m/mean = {0.5, 1.5}: population variance 0.25
  CHECK(variance_ratio(v) == doctest::Approx(0.25));
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(variance_ratio(zero), InvalidArgument);
}

TEST_CASE("n_epsilon") {
  const std::vector<double> isolated{1.0, 5.0, 6.0};
  CHECK(n_epsilon(isolated, 0.005) == 1);
  const std::vector<double> close{1.0, 1.004, 1.006};
  CHECK(n_epsilon(close, 0.005) == 2);
  const std::vector<double> identical(7, 0.0);
  CHECK(n_epsilon(identical, 0.005) == 7);
  CHECK_THROWS(n_epsilon(std::vector<double>{}, 0.005));
}

TEST_CASE("instability queries") {
  const Dataset g = gen_gaussians({4, 50, 10.0, 1});
  const auto between = instability_query(g, QueryKind::BetweenClusters).to_dense();
  CHECK(std::abs(between.mean() - 5.0) < 0.5);
  const Dataset w = gen_w_gaussians({4, 50, 1.0, 3.0, 1});
  const auto sparse = instability_query(w, QueryKind::SparseCenter).to_dense();
  // cluster 1 (sd 3) is the sparser one: its mean lives on the second block
  CHECK((sparse.head(4).array() == 0.0).all());
}

TEST_CASE("instability sweep rows") {
  InstabilityConfig c;
  c.dims = {10, 100};
  c.n_per_cluster = 30;
  c.measures = {GaussianMeasure{10.0}, IsolationRecipe{8, 50}};
  const auto rows = instability_sweep(c);
  CHECK(rows.size() == 2 * 2 * 2);
  for (const auto& r : rows) {
    CHECK(r.n_epsilon >= 1);
    CHECK(r.variance_ratio >= 0.0);
  }
  CHECK(rows.front().measure == "GK(sigma=10)");
  std::ostringstream out;
  write_instability_csv(out, rows, "hdr");
  CHECK(out.str().rfind("# hdr\nmeasure,d,query_kind,variance_ratio,n_epsilon,epsilon,seed\n", 0) == 0);
}

TEST_CASE("t sweep: coarse partitions tie many points") {
  const Dataset g = gen_gaussians({20, 50, 10.0, 2});
  const auto q = instability_query(g, QueryKind::BetweenClusters);
  const std::vector<int> ts{1, 50};
  const auto rows = vary_t_sweep(g, q, 2, ts, 5, PartitionSource::GivenData, 3);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].t == 1);
  CHECK(rows[0].mean_n_eps > 10.0);
  CHECK(rows[1].mean_n_eps <= rows[0].mean_n_eps);
  const auto again = vary_t_sweep(g, q, 2, ts, 5, PartitionSource::GivenData, 3, 0.005, 4);
  CHECK(again[1].mean_n_eps == rows[1].mean_n_eps);
}

TEST_CASE("cell probabilities") {
  const auto one = cell_probability_test(1, Distribution::Gaussian, Distribution::Uniform, 3, 10000, 1);
  CHECK(one == std::vector<double>{1.0});
  const auto f = cell_probability_test(4, Distribution::Uniform, Distribution::Uniform, 5, 10000, 2);
  const auto band = binomial_band(0.25, 10000);
  CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(1.0));
  for (double x : f) CHECK(band.contains(x));
}

TEST_CASE("collisions") {
  const auto r = collision_test(16, 4, 10, 10000, 1);
  CHECK(r.pairs == 10000);
  CHECK(r.bound == doctest::Approx(1.0 / 65536));
  CHECK(r.rate == static_cast<double>(r.collisions) / r.pairs);
}

TEST_CASE("hubness bookkeeping") {
  const Dataset ds = uniform_hypercube(5, 200, 4);
  const auto bound = bind_measure(GaussianMeasure{5.0}, ds.points, 1);
  const auto h = hubness(ds, bound, "GK", 5);
  CHECK(std::accumulate(h.occurrences.begin(), h.occurrences.end(), 0) == 200 * 5);
  double p = 0.0;
  for (const auto& r : h.rows) p += r.p_o_k;
  CHECK(p == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sample skewness") {
  const std::vector<double> sym{1, 2, 3, 4, 5};
  CHECK(sample_skewness(sym) == doctest::Approx(0.0));
  // scipy.stats.skew([1, 1, 1, 10], bias=False)
  const std::vector<double> right{1, 1, 1, 10};
  CHECK(sample_skewness(right) == doctest::Approx(2.0));
}

TEST_CASE("density-peaks search grid") {
  const auto g = percent_grid();
  CHECK(g.size() == 99);
  CHECK(g.front() == doctest::Approx(0.01));
  CHECK(g.back() == doctest::Approx(0.99));
}

TEST_CASE("data dependence") {
  const auto r = data_dependence_test(1.0, 10.0, 300, 16, 100, 5);
  CHECK(r.matched_pairs >= 100);
  CHECK(r.sparse_mean > r.dense_mean);

  const auto same = data_dependence_test(3.0, 3.0, 300, 16, 100, 5);
  CHECK(std::abs(same.sparse_mean - same.dense_mean) < 2 * same.pooled_stderr + 1e-12);

  CHECK(data_dependence_test(1.0, 10.0, 50, 1, 10, 5).degenerate);
}
