#include "helpers.hpp"

#include "ik/clustering.hpp"
#include "ik/error.hpp"

#include <doctest.h>

#include <random>

using namespace ik;

TEST_CASE("ami oracle values") {
  // Reference values from scikit-learn's adjusted_mutual_info_score
  // (average_method="arithmetic").
  struct Case {
    std::vector<int> a, b;
    double expected;
  };
  const Case cases[] = {
      {{0, 0, 1, 1}, {0, 0, 1, 2}, 0.5714285714285715},
      {{0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}, 0.2987924581708901},
      {{0, 1, 2, 0, 1, 2, 0, 1, 2, 0}, {1, 1, 0, 0, 2, 2, 1, 0, 2, 1}, 0.06305210770182108},
      {{0, 0, 1, 1, 2, 2, 3, 3}, {0, 0, 0, 0, 1, 1, 1, 1}, 0.5333333333333341},
      {{0, 0, 0, 0}, {0, 1, 2, 3}, 0.0},
  };
  for (const auto& c : cases) CHECK(ami(c.a, c.b) == doctest::Approx(c.expected).epsilon(1e-9));
}

TEST_CASE("ami identities") {
  const std::vector<int> x{0, 0, 1, 1, 2, 2, 2};
  CHECK(ami(x, x) == 1.0);
  const std::vector<int> relabeled{5, 5, 9, 9, 1, 1, 1};
  CHECK(ami(x, relabeled) == 1.0);
  const std::vector<int> y{0, 1, 0, 1, 0, 1, 0};
  CHECK(ami(x, y) == doctest::Approx(ami(y, x)));
  CHECK_THROWS_AS(ami(x, std::vector<int>{0, 1}), InvalidArgument);

  std::mt19937_64 gen(3);
  std::vector<int> a(1000), b(1000);
  for (auto& v : a) v = static_cast<int>(gen() & 1);
  for (auto& v : b) v = static_cast<int>(gen() & 1);
  CHECK(std::abs(ami(a, b)) < 0.05);
}

TEST_CASE("density peaks on two tight pairs") {
  // points 0,1 close together; 2,3 close together; pairs far apart
  Eigen::MatrixXd d(4, 4);
  d << 0, 1, 10, 10,
       1, 0, 10, 10,
       10, 10, 0, 1,
       10, 10, 1, 0;
  const auto r = dp_cluster(d, 2, 0.2);
  CHECK(r.labels[0] == r.labels[1]);
  CHECK(r.labels[2] == r.labels[3]);
  CHECK(r.labels[0] != r.labels[2]);
  CHECK(r.centers.size() == 2);

  const auto one = dp_cluster(d, 1, 0.5);
  CHECK(one.labels == std::vector<int>{0, 0, 0, 0});

  CHECK_THROWS_AS(dp_cluster(d, 5, 0.5), InvalidArgument);
  CHECK_THROWS_AS(dp_cluster(d, 2, 0.0), InvalidArgument);
  CHECK_THROWS_AS(dp_cluster(d, 2, 1.5), InvalidArgument);
}

TEST_CASE("density peaks is deterministic and labels are in range") {
  const auto pts = ik::test::random_points(60, 3, 12);
  const auto d = pairwise_dissimilarity(LpMeasure{2.0}, pts);
  const auto a = dp_cluster(d, 3, 0.3);
  const auto b = dp_cluster(d, 3, 0.3);
  CHECK(a.labels == b.labels);
  CHECK(a.centers.size() == 3);
  for (int l : a.labels) {
    CHECK(l >= 0);
    CHECK(l < 3);
  }
  for (std::size_t c = 0; c < a.centers.size(); ++c) CHECK(a.labels[a.centers[c]] == static_cast<int>(c));
}

TEST_CASE("pairwise dissimilarity") {
  const auto pts = ik::test::random_points(15, 2, 4);
  auto model = std::make_shared<const IKModel>(fit(pts, 4, 50, 1));
  const auto d = pairwise_dissimilarity(IsolationMeasure{model}, pts, nullptr, 2);
  CHECK(((Eigen::MatrixXd::Ones(15, 15) - gram(*model, pts)) - d).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((d.diagonal().array() == 0.0).all());
}
