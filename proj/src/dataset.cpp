#include "ik/dataset.hpp"

#include "ik/error.hpp"
#include "ik/text_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace ik {

const std::vector<int>& Dataset::require_labels() const {
  if (!labels) throw InvalidArgument("dataset '" + name + "' has no labels");
  return *labels;
}

void Dataset::validate() const {
  if (labels && labels->size() != points.size()) {
    throw InvalidArgument("label count does not match point count");
  }
  for (const auto& p : points) {
    if (p.dim() != dim) throw DimensionMismatch("point dimension differs from dataset dimension");
  }
}

namespace {

struct ParsedLine {
  int label;
  std::vector<SparseEntry> entries;
};

ParsedLine parse_libsvm_line(const std::string& line, std::size_t line_no) {
  std::istringstream ss(line);
  std::string tok;
  ss >> tok;
  ParsedLine out{};
  try {
    const double label = parse_double(tok);
    if (label != std::floor(label)) throw ParseError(line_no, "label must be an integer");
    out.label = static_cast<int>(label);
  } catch (const InvalidArgument&) {
    throw ParseError(line_no, "bad label '" + tok + "'");
  }
  while (ss >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw ParseError(line_no, "expected idx:val, got '" + tok + "'");
    Index idx = 0;
    auto res = std::from_chars(tok.data(), tok.data() + colon, idx);
    if (res.ec != std::errc() || res.ptr != tok.data() + colon || idx < 1) {
      throw ParseError(line_no, "bad index in '" + tok + "'");
    }
    double value = 0.0;
    try {
      value = parse_double(std::string_view(tok).substr(colon + 1));
    } catch (const InvalidArgument&) {
      throw ParseError(line_no, "bad value in '" + tok + "'");
    }
    if (!std::isfinite(value)) throw ParseError(line_no, "non-finite value in '" + tok + "'");
    if (!out.entries.empty() && idx - 1 <= out.entries.back().index) {
      throw ParseError(line_no, "indices must be ascending");
    }
    out.entries.push_back({idx - 1, value});
  }
  return out;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<Index> dim_override) {
  std::vector<ParsedLine> rows;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    rows.push_back(parse_libsvm_line(line, line_no));
    if (!rows.back().entries.empty()) {
      max_index = std::max(max_index, rows.back().entries.back().index + 1);
    }
  }
  Dataset ds;
  ds.name = "libsvm";
  ds.dim = dim_override.value_or(max_index);
  if (dim_override && *dim_override < max_index) {
    throw InvalidArgument("feature index " + std::to_string(max_index) + " exceeds dimension " +
                          std::to_string(*dim_override));
  }
  if (!rows.empty() && ds.dim == 0) throw InvalidArgument("libsvm data has no features");
  std::vector<int> labels;
  labels.reserve(rows.size());
  ds.points.reserve(rows.size());
  for (auto& r : rows) {
    labels.push_back(r.label);
    ds.points.push_back(FeatureVector::sparse(ds.dim, std::move(r.entries)));
  }
  ds.labels = std::move(labels);
  return ds;
}

void write_libsvm(std::ostream& out, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.points.size(); ++i) {
    out << (ds.labels ? (*ds.labels)[i] : 0);
    const auto& p = ds.points[i];
    if (p.is_sparse()) {
      for (const auto& e : p.sparse_entries()) {
        out << ' ' << e.index + 1 << ':' << format_double(e.value);
      }
    } else {
      const auto& v = p.dense_values();
      for (Index j = 0; j < v.size(); ++j) {
        if (v[j] != 0.0) out << ' ' << j + 1 << ':' << format_double(v[j]);
      }
    }
    out << '\n';
  }
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (Index j = 0; j < ds.dim; ++j) out << (j ? "," : "") << 'f' << j;
  if (ds.labels) out << (ds.dim ? "," : "") << "label";
  out << '\n';
  for (std::size_t i = 0; i < ds.points.size(); ++i) {
    const Eigen::VectorXd v = ds.points[i].to_dense();
    for (Index j = 0; j < v.size(); ++j) out << (j ? "," : "") << format_double(v[j]);
    if (ds.labels) out << ',' << (*ds.labels)[i];
    out << '\n';
  }
}

Dataset gen_gaussians(const GaussiansSpec& spec) {
  if (spec.d < 1 || spec.n_per_cluster < 1) throw InvalidArgument("gaussians needs d, n >= 1");
  if (!std::isfinite(spec.separation)) throw InvalidArgument("separation must be finite");
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "gaussians";
  ds.dim = spec.d;
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c) {
    const double shift = c == 0 ? 0.0 : spec.separation;
    for (int i = 0; i < spec.n_per_cluster; ++i) {
      Eigen::VectorXd v(spec.d);
      for (Index j = 0; j < spec.d; ++j) v[j] = shift + normal(gen);
      ds.points.push_back(FeatureVector::dense(std::move(v)));
      labels.push_back(c);
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

Dataset gen_w_gaussians(const WGaussiansSpec& spec) {
  if (spec.w < 1 || spec.n_per_cluster < 1) throw InvalidArgument("w-gaussians needs w, n >= 1");
  if (!(spec.sd1 > 0.0) || !(spec.sd2 > 0.0)) {
    throw InvalidArgument("standard deviations must be > 0");
  }
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "w-gaussians";
  ds.dim = 2 * spec.w;
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c) {
    const double sd = c == 0 ? spec.sd1 : spec.sd2;
    const Index offset = c == 0 ? 0 : spec.w;
    for (int i = 0; i < spec.n_per_cluster; ++i) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(ds.dim);
      for (Index j = 0; j < spec.w; ++j) v[offset + j] = sd * normal(gen);
      ds.points.push_back(FeatureVector::dense(std::move(v)));
      labels.push_back(c);
    }
  }
  ds.labels = std::move(labels);
  return ds;
}

Dataset generate(const GeneratorSpec& spec) {
  if (const auto* g = std::get_if<GaussiansSpec>(&spec)) return gen_gaussians(*g);
  return gen_w_gaussians(std::get<WGaussiansSpec>(spec));
}

Dataset minmax_normalize(const Dataset& ds) {
  if (ds.points.empty()) throw InsufficientData("cannot normalize an empty dataset");
  ds.validate();
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(ds.dim, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (const auto& p : ds.points) {
    const Eigen::VectorXd v = p.to_dense();
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Eigen::ArrayXd range = (hi - lo).array();
  Dataset out;
  out.name = ds.name;
  out.dim = ds.dim;
  out.labels = ds.labels;
  out.points.reserve(ds.points.size());
  for (const auto& p : ds.points) {
    Eigen::ArrayXd v = p.to_dense().array() - lo.array();
    v = (range > 0.0).select(v / range, 0.0);
    // Rounding can push the max a hair past 1.
    v = v.min(1.0).max(0.0);
    out.points.push_back(FeatureVector::dense(v.matrix()));
  }
  return out;
}

}  // namespace ik
