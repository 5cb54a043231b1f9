#include "ik/cli.hpp"

#include "ik/ball_tree.hpp"
#include "ik/clustering.hpp"
#include "ik/dataset.hpp"
#include "ik/error.hpp"
#include "ik/experiments.hpp"
#include "ik/isolation_kernel.hpp"
#include "ik/parallel.hpp"
#include "ik/text_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

namespace ik::cli {

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

struct Common {
  int workers = 1;
  std::uint64_t seed = 1;
};

// Destination for one output: a file when a path was given, else stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {
    if (!path_.empty()) {
      file_.open(path_, std::ios::binary);
      if (!file_) throw Error("cannot open '" + path_ + "' for writing");
    }
  }
  std::ostream& stream() { return path_.empty() ? fallback_ : file_; }
  void close() {
    if (path_.empty()) return;
    file_.close();
    if (!file_) throw Error("failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ofstream file_;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

Dataset load_dataset(const std::string& path) {
  auto in = open_input(path);
  Dataset ds = parse_libsvm(in);
  ds.name = std::filesystem::path(path).stem().string();
  if (ds.size() == 0) throw InsufficientData("'" + path + "' holds no points");
  return ds;
}

std::shared_ptr<const IKModel> load_model(const std::string& path) {
  auto in = open_input(path);
  return std::make_shared<const IKModel>(read_model(in));
}

// The `# ikcli ...` line every CSV/LIBSVM output starts with.
std::string header(const std::string& command, const Common& common,
                   const std::vector<std::pair<std::string, std::string>>& params) {
  std::string h = "ikcli " + std::string(kVersion) + " " + command +
                  " seed=" + std::to_string(common.seed);
  for (const auto& [k, v] : params) h += " " + k + "=" + v;
  return h;
}

void write_header(std::ostream& out, const std::string& h) { out << "# " << h << '\n'; }

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string num(double v) { return format_double(v); }

// `ik:32`, `gk:5`, `lk`, `lp:0.5`, `l2`, `snn:10`, `ag:10`, `distance`.
MeasureRecipe parse_measure(const std::string& text, int t) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto need = [&]() -> const std::string& {
    if (arg.empty()) throw InvalidArgument("measure '" + name + "' needs a parameter, e.g. " + name + ":5");
    return arg;
  };
  auto as_int = [&](const std::string& s) {
    const double v = parse_double(s);
    if (v != std::floor(v)) throw InvalidArgument("'" + s + "' is not an integer");
    return static_cast<int>(v);
  };
  if (name == "ik") return IsolationRecipe{as_int(need()), t};
  if (name == "gk") return GaussianMeasure{parse_double(need())};
  if (name == "lk") return LinearMeasure{};
  if (name == "lp") return LpMeasure{parse_double(need())};
  if (name == "l2" || name == "distance") return LpMeasure{2.0};
  if (name == "snn") return SharedNeighborMeasure{as_int(need())};
  if (name == "ag") return AdaptiveGaussianMeasure{as_int(need())};
  throw InvalidArgument("unknown measure '" + text + "' (ik:PSI, gk:SIGMA, lk, lp:P, l2, snn:K, ag:K)");
}

const std::map<std::string, MetricKind> kMetrics{
    {"distance", MetricKind::RawEuclidean},
    {"ik", MetricKind::IKFeature},
    {"linear", MetricKind::NormalizedLinear},
};

const std::map<std::string, Distribution> kDistributions{
    {"uniform", Distribution::Uniform},
    {"gaussian", Distribution::Gaussian},
    {"two-cluster", Distribution::TwoCluster},
};

const std::map<std::string, QueryKind> kQueries{
    {"between", QueryKind::BetweenClusters},
    {"sparse", QueryKind::SparseCenter},
};

const CLI::Validator kPositive(
    [](std::string& v) -> std::string {
      try {
        if (parse_double(v) > 0) return {};
      } catch (const InvalidArgument&) {
        return "expected a number, got '" + v + "'";
      }
      return "must be positive, got " + v;
    },
    "POSITIVE");

const std::vector<int> kPsiGrid{2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};

// --psi-grid takes explicit values; bare --psi-grid means the 2..1024 grid.
CLI::Option* add_psi_grid(CLI::App* sub, std::vector<int>& grid, const std::string& help) {
  return sub->add_option("--psi-grid", grid, help + " (bare flag: 2,4,...,1024)")
      ->delimiter(',')
      ->expected(0, CLI::detail::expected_max_vector_size)
      ->check(kPositive);
}

void resolve_psi_grid(const CLI::App* sub, std::vector<int>& grid) {
  if (sub->count("--psi-grid") > 0 && grid.empty()) grid = kPsiGrid;
}

// psi values usable on n points.
std::vector<int> usable_grid(const std::vector<int>& grid, std::size_t n) {
  std::vector<int> out;
  for (int p : grid) {
    if (static_cast<std::size_t>(p) <= n) out.push_back(p);
  }
  if (out.empty()) throw InsufficientData("no psi in the grid is <= " + std::to_string(n) + " points");
  return out;
}


// Each subcommand registers its options and returns the action to run.
using Action = std::function<void(std::ostream& out)>;

// ---------------------------------------------------------------------------
// Subcommands

Action add_gen(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("gen", "Generate a synthetic two-cluster dataset");
  struct Opts {
    std::string kind = "w-gaussians";
    Index d = 10000;
    Index w = 5000;
    int n = 1000;
    double separation = 10.0;
    double sd1 = 1.0;
    double sd2 = 1.0;
    std::string format = "libsvm";
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--kind", o->kind, "gaussians or w-gaussians")
      ->check(CLI::IsMember({"gaussians", "w-gaussians"}))
      ->capture_default_str();
  sub->add_option("--d", o->d, "dimensions (gaussians)")->check(kPositive)->capture_default_str();
  sub->add_option("--w", o->w, "subspace width (w-gaussians)")->check(kPositive)->capture_default_str();
  sub->add_option("--n", o->n, "points per cluster")->check(kPositive)->capture_default_str();
  sub->add_option("--separation", o->separation, "per-dimension mean shift")->capture_default_str();
  sub->add_option("--sd1", o->sd1, "cluster-0 standard deviation")->check(kPositive)->capture_default_str();
  sub->add_option("--sd2", o->sd2, "cluster-1 standard deviation")->check(kPositive)->capture_default_str();
  sub->add_option("--format", o->format)->check(CLI::IsMember({"libsvm", "csv"}))->capture_default_str();
  sub->add_option("--out", o->out, "output path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    Dataset ds;
    std::vector<std::pair<std::string, std::string>> params{{"kind", o->kind}, {"n", std::to_string(o->n)}};
    if (o->kind == "gaussians") {
      ds = gen_gaussians({o->d, o->n, o->separation, common.seed});
      params.push_back({"d", std::to_string(o->d)});
      params.push_back({"separation", num(o->separation)});
    } else {
      ds = gen_w_gaussians({o->w, o->n, o->sd1, o->sd2, common.seed});
      params.push_back({"w", std::to_string(o->w)});
      params.push_back({"sd1", num(o->sd1)});
      params.push_back({"sd2", num(o->sd2)});
    }
    Sink sink(o->out, out);
    write_header(sink.stream(), header("gen", common, params));
    if (o->format == "csv") {
      write_csv(sink.stream(), ds);
    } else {
      write_libsvm(sink.stream(), ds);
    }
    sink.close();
  };
}

Action add_fit(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("fit", "Fit an Isolation Kernel model (IKM1)");
  struct Opts {
    std::string input, out;
    int psi = 16;
    int t = 200;
    bool minmax = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->input, "LIBSVM dataset")->required();
  sub->add_option("--psi", o->psi, "references per partitioning")->check(kPositive)->capture_default_str();
  sub->add_option("--t", o->t, "number of partitionings")->check(kPositive)->capture_default_str();
  sub->add_flag("--minmax", o->minmax, "min-max normalize before fitting");
  sub->add_option("--out", o->out, "model path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    Dataset ds = load_dataset(o->input);
    if (o->minmax) ds = minmax_normalize(ds);
    const IKModel model = fit(ds.points, o->psi, o->t, common.seed);
    Sink sink(o->out, out);
    write_model(sink.stream(), model);
    sink.close();
  };
}

Action add_encode(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("encode", "Encode a dataset into IK codes (IKC1)");
  struct Opts {
    std::string model, input, out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--model", o->model, "IKM1 model")->required();
  sub->add_option("--input", o->input, "LIBSVM dataset")->required();
  sub->add_option("--out", o->out, "codes path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const auto model = load_model(o->model);
    const Dataset ds = load_dataset(o->input);
    const auto codes = encode_all(*model, ds.points, common.workers);
    Sink sink(o->out, out);
    write_codes(sink.stream(), codes);
    sink.close();
  };
}

// Options naming a metric space, with an IK model either loaded or fitted.
struct MetricOpts {
  std::string metric = "ik";
  std::string model;
  int psi = 16;
  int t = 200;
  int leaf = 15;

  void add(CLI::App* sub) {
    sub->add_option("--metric", metric, "distance, ik or linear")
        ->check(CLI::IsMember({"distance", "ik", "linear"}))
        ->capture_default_str();
    sub->add_option("--model", model, "IKM1 model for --metric ik (default: fit on the input)");
    sub->add_option("--psi", psi, "psi when fitting on the input")->check(kPositive)->capture_default_str();
    sub->add_option("--t", t, "t when fitting on the input")->check(kPositive)->capture_default_str();
    sub->add_option("--leaf-size", leaf, "ball-tree leaf size")->check(kPositive)->capture_default_str();
  }

  MetricSpec resolve(const Dataset& ds, std::uint64_t seed, int psi_override = 0) const {
    MetricSpec spec{kMetrics.at(metric), nullptr};
    if (spec.kind != MetricKind::IKFeature) return spec;
    if (!model.empty() && psi_override == 0) {
      spec.model = load_model(model);
    } else {
      spec.model = std::make_shared<const IKModel>(
          fit(ds.points, psi_override ? psi_override : psi, t, seed));
    }
    return spec;
  }

  std::vector<std::pair<std::string, std::string>> params() const {
    std::vector<std::pair<std::string, std::string>> p{{"metric", metric}, {"leaf_size", std::to_string(leaf)}};
    if (metric == "ik") {
      if (!model.empty()) {
        p.push_back({"model", model});
      } else {
        p.push_back({"psi", std::to_string(psi)});
        p.push_back({"t", std::to_string(t)});
      }
    }
    return p;
  }
};

Action add_knn(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("knn", "Exact k nearest neighbors via the ball tree");
  struct Opts {
    MetricOpts metric;
    std::string input, queries, out;
    int k = 5;
    bool brute = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->input, "LIBSVM dataset to index")->required();
  sub->add_option("--queries", o->queries, "LIBSVM queries (default: every indexed point)");
  sub->add_option("--k", o->k, "neighbors per query")->check(kPositive)->capture_default_str();
  sub->add_flag("--brute", o->brute, "linear scan instead of the tree");
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  o->metric.add(sub);
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const Dataset ds = load_dataset(o->input);
    std::optional<Dataset> queries;
    if (!o->queries.empty()) queries = load_dataset(o->queries);
    const KnnIndex index(ds.points, o->metric.resolve(ds, common.seed), o->metric.leaf, common.workers);
    const std::size_t nq = queries ? queries->size() : ds.size();
    std::vector<KnnResult> results(nq);
    parallel_for(nq, common.workers, [&](std::size_t q) {
      if (queries) {
        results[q] = o->brute ? index.brute_query(queries->points[q], o->k)
                              : index.tree_query(queries->points[q], o->k);
      } else {
        results[q] = o->brute ? index.brute_query(q, o->k) : index.tree_query(q, o->k);
      }
    });
    auto params = o->metric.params();
    params.push_back({"k", std::to_string(o->k)});
    params.push_back({"method", o->brute ? "brute" : "balltree"});
    Sink sink(o->out, out);
    auto& s = sink.stream();
    write_header(s, header("knn", common, params));
    s << "query_id,rank,neighbor_id,distance\n";
    for (std::size_t q = 0; q < nq; ++q) {
      int rank = 1;
      for (const auto& n : results[q].neighbors) {
        s << q << ',' << rank++ << ',' << n.index << ',' << num(n.distance) << '\n';
      }
    }
    sink.close();
  };
}

Action add_bench(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("bench-index", "Brute force vs ball tree, every point as a query");
  struct Opts {
    MetricOpts metric;
    std::string input, out;
    int k = 5;
    std::vector<int> psi_grid;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->input, "LIBSVM dataset")->required();
  sub->add_option("--k", o->k, "neighbors per query")->check(kPositive)->capture_default_str();
  add_psi_grid(sub, o->psi_grid, "benchmark IK at each psi, fitted on the input");
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  o->metric.add(sub);
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    resolve_psi_grid(sub, o->psi_grid);
    const Dataset ds = load_dataset(o->input);
    std::vector<std::pair<std::string, BenchReport>> reports;
    auto params = o->metric.params();
    params.push_back({"k", std::to_string(o->k)});
    if (!o->psi_grid.empty() && o->metric.metric == "ik") {
      params.push_back({"psi_grid", join(o->psi_grid)});
      for (int psi : usable_grid(o->psi_grid, ds.size())) {
        reports.push_back({"ik(psi=" + std::to_string(psi) + ")",
                           bench_index(ds, o->metric.resolve(ds, common.seed, psi), o->k, o->metric.leaf)});
      }
    } else {
      auto r = bench_index(ds, o->metric.resolve(ds, common.seed), o->k, o->metric.leaf);
      reports.push_back({r.metric, r});
    }
    Sink sink(o->out, out);
    auto& s = sink.stream();
    write_header(s, header("bench-index", common, params));
    s << "method,metric,total_distance_evals,mean_wall_us\n";
    for (const auto& [label, r] : reports) {
      const double q = static_cast<double>(r.queries);
      auto us = [&](const QueryStats& st) {
        return num(std::chrono::duration<double, std::micro>(st.wall_time).count() / q);
      };
      s << "brute," << label << ',' << r.brute.distance_evaluations << ',' << us(r.brute) << '\n';
      s << "balltree," << label << ',' << r.tree.distance_evaluations << ',' << us(r.tree) << '\n';
    }
    sink.close();
  };
}

Action add_precision(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("precision", "Precision@k with every point as a query");
  struct Opts {
    MetricOpts metric;
    std::string input, out;
    int k = 5;
    std::vector<int> psi_grid;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->input, "labeled LIBSVM dataset")->required();
  sub->add_option("--k", o->k, "neighbors per query")->check(kPositive)->capture_default_str();
  add_psi_grid(sub, o->psi_grid, "evaluate IK at each psi, fitted on the input");
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  o->metric.add(sub);
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    resolve_psi_grid(sub, o->psi_grid);
    const Dataset ds = load_dataset(o->input);
    std::vector<std::pair<std::string, double>> rows;
    auto params = o->metric.params();
    params.push_back({"k", std::to_string(o->k)});
    if (!o->psi_grid.empty() && o->metric.metric == "ik") {
      params.push_back({"psi_grid", join(o->psi_grid)});
      for (int psi : usable_grid(o->psi_grid, ds.size())) {
        rows.push_back({"ik(psi=" + std::to_string(psi) + ")",
                        precision_at_k(ds, o->metric.resolve(ds, common.seed, psi), o->k,
                                       o->metric.leaf, common.workers)});
      }
    } else {
      rows.push_back({o->metric.metric, precision_at_k(ds, o->metric.resolve(ds, common.seed), o->k,
                                                       o->metric.leaf, common.workers)});
    }
    Sink sink(o->out, out);
    auto& s = sink.stream();
    write_header(s, header("precision", common, params));
    s << "dataset,metric,k,precision\n";
    for (const auto& [label, p] : rows) s << ds.name << ',' << label << ',' << o->k << ',' << num(p) << '\n';
    sink.close();
  };
}

Action add_instability(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("instability", "Variance ratio and N_eps over a dimension sweep");
  struct Opts {
    std::vector<Index> dims{10, 100, 1000, 10000};
    int n = 200;
    double separation = 10.0;
    double eps = 0.005;
    int t = 200;
    std::vector<std::string> measures{"gk:10", "l2", "lk", "ik:32"};
    std::vector<int> psi_grid;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--dims", o->dims, "dimensions to sweep")->delimiter(',')->capture_default_str();
  sub->add_option("--n", o->n, "points per cluster")->check(kPositive)->capture_default_str();
  sub->add_option("--separation", o->separation)->capture_default_str();
  sub->add_option("--eps", o->eps, "N_eps tolerance")->check(kPositive)->capture_default_str();
  sub->add_option("--t", o->t, "t for IK measures")->check(kPositive)->capture_default_str();
  sub->add_option("--measures", o->measures, "e.g. ik:32,gk:10,lk,lp:0.5,snn:10,ag:10")
      ->delimiter(',')
      ->capture_default_str();
  add_psi_grid(sub, o->psi_grid, "add IK at each psi");
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    resolve_psi_grid(sub, o->psi_grid);
    InstabilityConfig config;
    config.dims = o->dims;
    config.n_per_cluster = o->n;
    config.separation = o->separation;
    config.epsilon = o->eps;
    config.seed = common.seed;
    config.workers = common.workers;
    for (const auto& m : o->measures) config.measures.push_back(parse_measure(m, o->t));
    for (int psi : o->psi_grid) config.measures.push_back(IsolationRecipe{psi, o->t});
    const auto rows = instability_sweep(config);
    std::string dims;
    for (std::size_t i = 0; i < o->dims.size(); ++i) dims += (i ? "," : "") + std::to_string(o->dims[i]);
    std::string measures;
    for (const auto& r : config.measures) measures += (measures.empty() ? "" : ";") + recipe_name(r);
    Sink sink(o->out, out);
    write_instability_csv(sink.stream(), rows,
                          header("instability", common,
                                 {{"dims", dims}, {"n", std::to_string(o->n)},
                                  {"separation", num(o->separation)}, {"t", std::to_string(o->t)},
                                  {"measures", measures}}));
    sink.close();
  };
}

Action add_vary_t(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("vary-t", "N_eps of IK as t grows");
  struct Opts {
    Index d = 10000;
    int n = 200;
    double separation = 10.0;
    int psi = 32;
    std::vector<int> t_values{5, 10, 20, 50, 100, 200};
    int trials = 10;
    double eps = 0.005;
    std::string source = "both";
    std::string query = "between";
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--d", o->d)->check(kPositive)->capture_default_str();
  sub->add_option("--n", o->n, "points per cluster")->check(kPositive)->capture_default_str();
  sub->add_option("--separation", o->separation)->capture_default_str();
  sub->add_option("--psi", o->psi)->check(kPositive)->capture_default_str();
  sub->add_option("--t-values", o->t_values)->delimiter(',')->check(kPositive)->capture_default_str();
  sub->add_option("--trials", o->trials)->check(kPositive)->capture_default_str();
  sub->add_option("--eps", o->eps)->check(kPositive)->capture_default_str();
  sub->add_option("--source", o->source, "partition references from: data, uniform or both")
      ->check(CLI::IsMember({"data", "uniform", "both"}))
      ->capture_default_str();
  sub->add_option("--query", o->query, "between or sparse")
      ->check(CLI::IsMember({"between", "sparse"}))
      ->capture_default_str();
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const Dataset ds = gen_gaussians({o->d, o->n, o->separation, common.seed});
    const FeatureVector q = instability_query(ds, kQueries.at(o->query));
    std::vector<TSweepRow> rows;
    for (auto src : {PartitionSource::GivenData, PartitionSource::Uniform}) {
      if (o->source == "data" && src != PartitionSource::GivenData) continue;
      if (o->source == "uniform" && src != PartitionSource::Uniform) continue;
      auto r = vary_t_sweep(ds, q, o->psi, o->t_values, o->trials, src, common.seed, o->eps,
                            common.workers);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    Sink sink(o->out, out);
    write_tsweep_csv(sink.stream(), rows,
                     header("vary-t", common,
                            {{"d", std::to_string(o->d)}, {"n", std::to_string(o->n)},
                             {"psi", std::to_string(o->psi)}, {"query", o->query},
                             {"eps", num(o->eps)}}));
    sink.close();
  };
}

Action add_lemma2(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("lemma2", "Monte-Carlo frequency of each Voronoi cell");
  struct Opts {
    int psi = 4;
    Index d = 100;
    std::string refs = "gaussian";
    std::string points = "gaussian";
    std::uint64_t trials = 10000;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  std::vector<std::string> dists{"uniform", "gaussian", "two-cluster"};
  sub->add_option("--psi", o->psi)->check(kPositive)->capture_default_str();
  sub->add_option("--d", o->d)->check(kPositive)->capture_default_str();
  sub->add_option("--refs", o->refs, "reference distribution")->check(CLI::IsMember(dists))->capture_default_str();
  sub->add_option("--points", o->points, "point distribution")->check(CLI::IsMember(dists))->capture_default_str();
  sub->add_option("--trials", o->trials)->check(kPositive)->capture_default_str();
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const auto freq = cell_probability_test(o->psi, kDistributions.at(o->refs),
                                            kDistributions.at(o->points), o->d, o->trials, common.seed);
    const auto band = binomial_band(1.0 / o->psi, o->trials);
    Sink sink(o->out, out);
    auto& s = sink.stream();
    write_header(s, header("lemma2", common,
                           {{"psi", std::to_string(o->psi)}, {"d", std::to_string(o->d)},
                            {"refs", o->refs}, {"points", o->points},
                            {"trials", std::to_string(o->trials)}}));
    s << "cell,frequency,expected,half_width,within\n";
    for (std::size_t j = 0; j < freq.size(); ++j) {
      s << j << ',' << num(freq[j]) << ',' << num(band.expected) << ',' << num(band.half_width)
        << ',' << (band.contains(freq[j]) ? 1 : 0) << '\n';
    }
    sink.close();
  };
}

Action add_theorem2(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("theorem2", "Monte-Carlo rate of identical IK codes");
  struct Opts {
    int psi = 16;
    int t = 4;
    Index d = 100;
    std::uint64_t trials = 100000;
    std::string dist = "gaussian";
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--psi", o->psi)->check(kPositive)->capture_default_str();
  sub->add_option("--t", o->t)->check(kPositive)->capture_default_str();
  sub->add_option("--d", o->d)->check(kPositive)->capture_default_str();
  sub->add_option("--trials", o->trials, "random distinct pairs")->check(kPositive)->capture_default_str();
  sub->add_option("--dist", o->dist)
      ->check(CLI::IsMember({"uniform", "gaussian", "two-cluster"}))
      ->capture_default_str();
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const auto r = collision_test(o->psi, o->t, o->d, o->trials, common.seed, kDistributions.at(o->dist));
    Sink sink(o->out, out);
    auto& s = sink.stream();
    write_header(s, header("theorem2", common,
                           {{"psi", std::to_string(o->psi)}, {"t", std::to_string(o->t)},
                            {"d", std::to_string(o->d)}, {"dist", o->dist}}));
    s << "pairs,collisions,rate,bound,threshold,within\n";
    s << r.pairs << ',' << r.collisions << ',' << num(r.rate) << ',' << num(r.bound) << ','
      << num(r.threshold) << ',' << (r.within_bound() ? 1 : 0) << '\n';
    sink.close();
  };
}

Action add_hubness(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("hubness", "k-occurrence distribution on the unit hypercube");
  struct Opts {
    std::vector<Index> dims{3, 100};
    int n = 1000;
    int k = 5;
    double sigma = 5.0;
    int psi = 32;
    int t = 200;
    std::string out, skew_out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--dims", o->dims)->delimiter(',')->capture_default_str();
  sub->add_option("--n", o->n)->check(kPositive)->capture_default_str();
  sub->add_option("--k", o->k)->check(kPositive)->capture_default_str();
  sub->add_option("--sigma", o->sigma, "GK bandwidth")->check(kPositive)->capture_default_str();
  sub->add_option("--psi", o->psi)->check(kPositive)->capture_default_str();
  sub->add_option("--t", o->t)->check(kPositive)->capture_default_str();
  sub->add_option("--out", o->out, "p(O_k) CSV path (default stdout)");
  sub->add_option("--skewness-out", o->skew_out, "CSV of skewness per (measure, d)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    std::vector<HubnessRow> rows;
    std::vector<std::tuple<std::string, Index, double>> skews;
    for (Index d : o->dims) {
      const Dataset ds = uniform_hypercube(d, static_cast<std::size_t>(o->n), common.seed);
      const std::pair<std::string, MeasureRecipe> measures[] = {
          {"GK", GaussianMeasure{o->sigma}}, {"IK", IsolationRecipe{o->psi, o->t}}};
      for (const auto& [name, recipe] : measures) {
        const auto bound = bind_measure(recipe, ds.points, common.seed, common.workers);
        auto h = hubness(ds, bound, name, o->k, common.workers);
        rows.insert(rows.end(), h.rows.begin(), h.rows.end());
        skews.emplace_back(name, d, h.skewness);
      }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const HubnessRow& a, const HubnessRow& b) {
      return std::tie(a.measure, a.d, a.o_k) < std::tie(b.measure, b.d, b.o_k);
    });
    const auto h = header("hubness", common,
                          {{"n", std::to_string(o->n)}, {"k", std::to_string(o->k)},
                           {"sigma", num(o->sigma)}, {"psi", std::to_string(o->psi)},
                           {"t", std::to_string(o->t)}});
    Sink sink(o->out, out);
    write_hubness_csv(sink.stream(), rows, h);
    sink.close();
    if (!o->skew_out.empty()) {
      Sink sk(o->skew_out, out);
      write_header(sk.stream(), h);
      sk.stream() << "measure,d,skewness\n";
      for (const auto& [name, d, s] : skews) sk.stream() << name << ',' << d << ',' << num(s) << '\n';
      sk.close();
    }
  };
}

Action add_cluster_dp(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("cluster-dp", "Density-peaks clustering under one measure");
  struct Opts {
    std::string input, measure = "ik:16", out, summary;
    int k = 2;
    int t = 200;
    double eps = 0.0;
    bool minmax = false;
    std::vector<int> psi_grid;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--input", o->input, "LIBSVM dataset")->required();
  sub->add_option("--measure", o->measure, "ik:PSI, l2, gk:SIGMA, lk, lp:P, snn:K, ag:K")->capture_default_str();
  sub->add_option("--k", o->k, "number of clusters")->check(kPositive)->capture_default_str();
  sub->add_option("--t", o->t, "t for IK")->check(kPositive)->capture_default_str();
  sub->add_option("--eps", o->eps, "eps as a fraction of the max dissimilarity; omit to search 1%..99% against labels")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_flag("--minmax", o->minmax, "min-max normalize first");
  add_psi_grid(sub, o->psi_grid, "search IK over psi instead of --measure (needs labels)");
  sub->add_option("--out", o->out, "labels CSV path (default stdout)");
  sub->add_option("--summary", o->summary, "summary CSV: dataset,measure,ami");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    resolve_psi_grid(sub, o->psi_grid);
    Dataset ds = load_dataset(o->input);
    if (o->minmax) ds = minmax_normalize(ds);
    std::vector<MeasureRecipe> candidates;
    if (!o->psi_grid.empty()) {
      for (int psi : usable_grid(o->psi_grid, ds.size())) candidates.push_back(IsolationRecipe{psi, o->t});
    } else {
      candidates.push_back(parse_measure(o->measure, o->t));
    }
    const bool search = o->eps == 0.0;
    if ((search || candidates.size() > 1) && !ds.labeled()) {
      throw InsufficientData("parameter search needs labels; pass --eps and a single --measure");
    }
    std::string best_name;
    double best_eps = o->eps;
    std::optional<double> best_ami;
    ClusterResult best;
    for (const auto& recipe : candidates) {
      const auto bound = bind_measure(recipe, ds.points, common.seed, common.workers);
      const auto dis = pairwise_dissimilarity(bound.spec, ds.points, bound.ctx(), common.workers);
      ClusterResult r;
      double eps = o->eps;
      std::optional<double> score;
      if (search) {
        const auto grid = percent_grid();
        auto s = dp_best_ami(dis, *ds.labels, o->k, grid);
        r = std::move(s.best);
        eps = s.best_eps_fraction;
        score = s.best_ami;
      } else {
        r = dp_cluster(dis, o->k, eps);
        if (ds.labeled()) score = ami(r.labels, *ds.labels);
      }
      if (best_name.empty() || (score && best_ami && *score > *best_ami)) {
        best_name = recipe_name(recipe);
        best_eps = eps;
        best_ami = score;
        best = std::move(r);
      }
    }
    const auto h = header("cluster-dp", common,
                          {{"input", o->input}, {"measure", best_name}, {"k", std::to_string(o->k)},
                           {"eps", num(best_eps)}, {"minmax", o->minmax ? "1" : "0"},
                           {"ami", best_ami ? num(*best_ami) : "NA"}});
    Sink sink(o->out, out);
    write_clustering_csv(sink.stream(), best.labels, h);
    sink.close();
    if (!o->summary.empty()) {
      Sink s(o->summary, out);
      write_header(s.stream(), h);
      s.stream() << "dataset,measure,ami\n"
                 << ds.name << ',' << best_name << ',' << (best_ami ? num(*best_ami) : "NA") << '\n';
      s.close();
    }
  };
}

// Labels from a `point_id,label` CSV or from a LIBSVM file's labels.
std::vector<int> load_labels(const std::string& path) {
  auto in = open_input(path);
  std::string first;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  if (!lines.empty() && lines[0] == "point_id,label") {
    std::vector<int> labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto comma = lines[i].find(',');
      if (comma == std::string::npos) throw ParseError(i + 1, "expected point_id,label");
      double v = 0;
      try {
        v = parse_double(std::string_view(lines[i]).substr(comma + 1));
      } catch (const InvalidArgument& e) {
        throw ParseError(i + 1, e.what());
      }
      labels.push_back(static_cast<int>(v));
    }
    return labels;
  }
  std::istringstream again;
  std::string joined;
  for (const auto& l : lines) joined += l + '\n';
  again.str(joined);
  return parse_libsvm(again).require_labels();
}

Action add_ami(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("ami", "Adjusted mutual information between two labelings");
  struct Opts {
    std::string a, b;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("a", o->a, "labels: point_id,label CSV or labeled LIBSVM")->required();
  sub->add_option("b", o->b, "labels: point_id,label CSV or labeled LIBSVM")->required();
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const auto a = load_labels(o->a);
    const auto b = load_labels(o->b);
    out << num(ami(a, b)) << '\n';
    (void)common;
  };
}

Action add_export_gram(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("export-gram", "Dense IK Gram matrix as CSV");
  struct Opts {
    std::string model, input, out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--model", o->model, "IKM1 model")->required();
  sub->add_option("--input", o->input, "LIBSVM dataset")->required();
  sub->add_option("--out", o->out, "CSV path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const auto model = load_model(o->model);
    const Dataset ds = load_dataset(o->input);
    const Eigen::MatrixXd g = gram(*model, ds.points, common.workers);
    Sink sink(o->out, out);
    auto& s = sink.stream();
    write_header(s, header("export-gram", common,
                           {{"model", o->model}, {"psi", std::to_string(model->psi())},
                            {"t", std::to_string(model->t())}, {"n", std::to_string(ds.size())}}));
    for (Index i = 0; i < g.rows(); ++i) {
      for (Index j = 0; j < g.cols(); ++j) s << (j ? "," : "") << num(g(i, j));
      s << '\n';
    }
    sink.close();
  };
}

Action add_export_features(CLI::App& app, Common& common) {
  auto* sub = app.add_subcommand("export-features", "IK feature map in LIBSVM format");
  struct Opts {
    std::string model, input, out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--model", o->model, "IKM1 model")->required();
  sub->add_option("--input", o->input, "LIBSVM dataset")->required();
  sub->add_option("--out", o->out, "LIBSVM path (default stdout)");
  return [&common, o, sub](std::ostream& out) {
    if (!sub->parsed()) return;
    const auto model = load_model(o->model);
    const Dataset ds = load_dataset(o->input);
    const auto codes = encode_all(*model, ds.points, common.workers);
    // t ones per row at 1/sqrt(t): linear kernel on rows == IK similarity.
    const std::string value = num(1.0 / std::sqrt(static_cast<double>(model->t())));
    Sink sink(o->out, out);
    auto& s = sink.stream();
    write_header(s, header("export-features", common,
                           {{"model", o->model}, {"psi", std::to_string(model->psi())},
                            {"t", std::to_string(model->t())},
                            {"columns", std::to_string(model->t() * model->psi())}}));
    for (std::size_t i = 0; i < codes.size(); ++i) {
      s << (ds.labels ? (*ds.labels)[i] : 0);
      for (int p = 0; p < model->t(); ++p) {
        s << ' ' << (p * model->psi() + codes[i].cells[p] + 1) << ':' << value;
      }
      s << '\n';
    }
    sink.close();
  };
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Isolation Kernel toolkit", "ikcli"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  app.add_option("--workers", common.workers, "parallel workers")->check(kPositive)->capture_default_str();
  app.add_option("--seed", common.seed, "random seed")->capture_default_str();
  app.fallthrough();

  std::vector<Action> actions{
      add_gen(app, common),        add_fit(app, common),       add_encode(app, common),
      add_knn(app, common),        add_bench(app, common),     add_precision(app, common),
      add_instability(app, common), add_vary_t(app, common),   add_lemma2(app, common),
      add_theorem2(app, common),   add_hubness(app, common),   add_cluster_dp(app, common),
      add_ami(app, common),        add_export_gram(app, common), add_export_features(app, common),
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& act : actions) act(out);
  } catch (const std::exception& e) {
    err << "ikcli: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ik::cli
