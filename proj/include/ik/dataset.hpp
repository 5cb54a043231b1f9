#pragma once

#include "ik/feature_vector.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ik {

struct Dataset {
  std::string name;
  std::vector<FeatureVector> points;
  std::optional<std::vector<int>> labels;
  Index dim = 0;

  std::size_t size() const { return points.size(); }
  bool labeled() const { return labels.has_value(); }
  // Throws if the dataset has no labels.
  const std::vector<int>& require_labels() const;
  void validate() const;
};

// Two clusters in R^d: N(0, I) and N(separation * 1, I).
struct GaussiansSpec {
  Index d = 10000;
  int n_per_cluster = 1000;
  double separation = 10.0;
  std::uint64_t seed = 1;
};

// Two w-dimensional subspace clusters in R^{2w} that meet only at the origin:
// cluster 0 varies on dims [0, w) with sd1, cluster 1 on [w, 2w) with sd2.
struct WGaussiansSpec {
  Index w = 5000;
  int n_per_cluster = 1000;
  double sd1 = 1.0;
  double sd2 = 1.0;
  std::uint64_t seed = 1;
};

using GeneratorSpec = std::variant<GaussiansSpec, WGaussiansSpec>;

/// Reads `<label> <idx>:<val> ...` lines with 1-based ascending indices into
/// sparse points. Blank lines and lines starting with '#' are skipped. The
/// dimension is the largest index seen unless `dim_override` is given.
Dataset parse_libsvm(std::istream& in, std::optional<Index> dim_override = std::nullopt);
/// Writes only nonzero coordinates; unlabeled points get label 0.
void write_libsvm(std::ostream& out, const Dataset& ds);
/// Header row `f0,...,f{d-1},label` (label column only when labeled).
void write_csv(std::ostream& out, const Dataset& ds);

Dataset generate(const GeneratorSpec& spec);
Dataset gen_gaussians(const GaussiansSpec& spec);
Dataset gen_w_gaussians(const WGaussiansSpec& spec);

/// Maps each attribute affinely onto [0, 1] by its observed min and max.
/// Constant attributes map to 0. Output points are dense.
Dataset minmax_normalize(const Dataset& ds);

}  // namespace ik
