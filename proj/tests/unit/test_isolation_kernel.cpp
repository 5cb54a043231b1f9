#include "helpers.hpp"

#include "ik/error.hpp"
#include "ik/isolation_kernel.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace ik;
using ik::test::code;
using ik::test::model_from;
using ik::test::random_points;

TEST_CASE("fit draws distinct references, deterministically") {
  const auto data = random_points(4, 3, 11);
  const IKModel m = fit(data, 4, 1, 5);
  // psi = |data|: the reference set is a permutation of the data
  std::vector<bool> seen(4, false);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      if (m.reference(0, j) == data[i]) seen[i] = true;
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));

  const auto more = random_points(100, 5, 3);
  CHECK(fit(more, 32, 200, 7) == fit(more, 32, 200, 7));
  CHECK_FALSE(fit(more, 32, 20, 7) == fit(more, 32, 20, 8));

  const IKModel big = fit(more, 32, 20, 7);
  for (int i = 0; i < big.t(); ++i) {
    std::set<std::int32_t> ids(big.reference_ids().begin() + i * 32,
                               big.reference_ids().begin() + (i + 1) * 32);
    CHECK(ids.size() == 32);
  }
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(fit(random_points(3, 2, 1), 5, 10, 1), InsufficientData);
  auto mixed = random_points(5, 2, 1);
  mixed.push_back(FeatureVector::dense({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS(fit(mixed, 2, 3, 1), DimensionMismatch);
}

TEST_CASE("encode picks the nearest reference") {
  const auto z1 = FeatureVector::dense({0.0, 0.0});
  const auto z2 = FeatureVector::dense({10.0, 10.0});
  const IKModel m = model_from(2, {{z1, z2}});
  CHECK(encode(m, FeatureVector::dense({1.0, 1.0})).cells == std::vector<std::int32_t>{0});
  CHECK(encode(m, z2).cells == std::vector<std::int32_t>{1});
  CHECK_THROWS_AS(encode(m, FeatureVector::dense({1.0})), DimensionMismatch);
}

TEST_CASE("equidistant references tie to the lowest index") {
  // x = 0 sits at distance 1 from refs 2 and 5 and farther from the rest.
  std::vector<FeatureVector> refs;
  for (double v : {3.0, -4.0, 1.0, 2.5, 7.0, -1.0}) refs.push_back(FeatureVector::dense({v}));
  const IKModel m = model_from(6, {refs});
  CHECK(encode(m, FeatureVector::dense({0.0})).cells == std::vector<std::int32_t>{2});
}

TEST_CASE("similarity and distances from match counts") {
  const auto a = code(2, {0, 1, 1, 0});
  const auto b = code(2, {0, 1, 0, 0});
  CHECK(match_count(a, b) == 3);
  CHECK(similarity(a, b) == 0.75);
  CHECK(ik_distance(a, b) == 0.25);
  CHECK(feature_space_distance(a, b) == doctest::Approx(std::sqrt(2.0)));
  CHECK(similarity(a, a) == 1.0);
  CHECK(ik_distance(a, a) == 0.0);
  CHECK(feature_space_distance(a, a) == 0.0);

  const auto c = code(2, {1, 0, 0, 1});
  CHECK(similarity(a, c) == 0.0);
  CHECK(ik_distance(a, c) == 1.0);

  const IKCode zeros = code(2, std::vector<std::int32_t>(200, 0));
  const IKCode ones = code(2, std::vector<std::int32_t>(200, 1));
  CHECK(feature_space_distance(zeros, ones) == 20.0);

  CHECK_THROWS_AS(similarity(a, code(2, {0, 1})), IncompatibleCodes);
  CHECK_THROWS_AS(similarity(a, code(3, {0, 1, 1, 0})), IncompatibleCodes);
}

TEST_CASE("feature-space distance is a metric on random codes") {
  std::mt19937_64 gen(42);
  std::uniform_int_distribution<int> cell(0, 3);
  auto draw = [&] {
    IKCode c{4, std::vector<std::int32_t>(50)};
    for (auto& x : c.cells) x = cell(gen);
    return c;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = draw(), b = draw(), c = draw();
    const double ab = feature_space_distance(a, b);
    CHECK(ab == feature_space_distance(b, a));
    CHECK(ab <= feature_space_distance(a, c) + feature_space_distance(c, b) + 1e-12);
    const double s = similarity(a, b);
    CHECK(s * 50 == doctest::Approx(std::round(s * 50)));
  }
}

TEST_CASE("gram matrix") {
  const auto pts = random_points(10, 4, 9);
  const IKModel m = fit(pts, 4, 50, 3);
  const Eigen::MatrixXd g = gram(m, pts);
  CHECK(g.rows() == 10);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.diagonal().array() == 1.0).all());
  CHECK(g.minCoeff() >= 0.0);

  const IKModel m1 = fit(pts, 2, 3, 1);
  std::vector<FeatureVector> one{pts[0]};
  CHECK(gram(m1, one)(0, 0) == 1.0);

  // Two points next to the same reference share every cell.
  const auto z1 = FeatureVector::dense({0.0, 0.0});
  const auto z2 = FeatureVector::dense({10.0, 10.0});
  const IKModel two = model_from(2, {{z1, z2}, {z2, z1}, {z1, z2}});
  std::vector<FeatureVector> near{FeatureVector::dense({0.1, 0.0}), FeatureVector::dense({0.0, 0.2})};
  CHECK(gram(two, near)(0, 1) == 1.0);

  // Worker count does not change the result.
  CHECK(gram(m, pts, 3) == g);
}
