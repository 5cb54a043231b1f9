#include "helpers.hpp"

#include "ik/error.hpp"
#include "ik/feature_vector.hpp"

#include <doctest.h>

#include <cmath>

using namespace ik;

TEST_CASE("dense and sparse points agree on distances") {
  const auto a = FeatureVector::dense({1.0, 0.0, 2.0, 0.0});
  const auto b = FeatureVector::sparse(4, {{1, 3.0}, {2, -1.0}});
  const auto bd = FeatureVector::dense(b.to_dense());

  CHECK(squared_distance(a, b) == doctest::Approx(1 + 9 + 9));
  CHECK(squared_distance(a, b) == squared_distance(a, bd));
  CHECK(squared_distance(b, a) == squared_distance(bd, a));
  CHECK(dot(a, b) == doctest::Approx(-2.0));
  CHECK(dot(b, b) == doctest::Approx(10.0));
  CHECK(lp_distance(b, a, 1.0) == doctest::Approx(1 + 3 + 3));
}

TEST_CASE("Pythagorean triple") {
  const auto o = FeatureVector::dense({0.0, 0.0});
  const auto p = FeatureVector::dense({3.0, 4.0});
  CHECK(distance(o, p) == 5.0);
  CHECK(lp_distance(o, p, 2.0) == doctest::Approx(5.0));
}

TEST_CASE("fractional p is not a metric but is still computed") {
  const auto o = FeatureVector::dense({0.0, 0.0});
  const auto p = FeatureVector::dense({1.0, 1.0});
  // (1^0.5 + 1^0.5)^(1/0.5) = 4
  CHECK(lp_distance(o, p, 0.5) == doctest::Approx(4.0));
}

TEST_CASE("sparse validation") {
  CHECK_THROWS_AS(FeatureVector::sparse(3, {{2, 1.0}, {1, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(FeatureVector::sparse(3, {{1, 1.0}, {1, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(FeatureVector::sparse(3, {{3, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(FeatureVector::sparse(3, {{0, NAN}}), InvalidArgument);
  CHECK_THROWS_AS(FeatureVector::dense({1.0, INFINITY}), InvalidArgument);
}

TEST_CASE("mismatched dimensions are rejected") {
  const auto a = FeatureVector::dense({1.0, 2.0});
  const auto b = FeatureVector::dense({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(distance(a, b), DimensionMismatch);
  CHECK_THROWS_AS(dot(a, b), DimensionMismatch);
}

TEST_CASE("mean of mixed points") {
  std::vector<FeatureVector> pts{FeatureVector::dense({2.0, 0.0}), FeatureVector::sparse(2, {{1, 4.0}})};
  const Eigen::VectorXd m = mean_of(pts);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == 2.0);
}
