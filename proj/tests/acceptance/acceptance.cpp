// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include "ik/ball_tree.hpp"
#include "ik/cli.hpp"
#include "ik/clustering.hpp"
#include "ik/experiments.hpp"
#include "ik/text_io.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

using namespace ik;

namespace {

int failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

std::vector<FeatureVector> random_points(std::size_t n, Index d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<FeatureVector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd v(d);
    for (Index j = 0; j < d; ++j) v[j] = g(gen);
    pts.push_back(FeatureVector::dense(std::move(v)));
  }
  return pts;
}

const std::vector<int> kPsiGrid{2, 4, 8, 16, 32, 64, 128};

void feature_map_norm() {
  namespace fs = std::filesystem;
  const int t = 100;
  Dataset ds;
  ds.name = "norm";
  ds.points = random_points(1000, 5, 11);
  ds.dim = 5;
  const IKModel model = fit(ds.points, 16, t, 3);
  const auto codes = encode_all(model, ds.points);
  double worst_self = 0.0;
  for (const auto& c : codes) worst_self = std::max(worst_self, std::abs(similarity(c, c) - 1.0));

  // Round-trip through the command line export.
  const fs::path dir = fs::temp_directory_path() / ("ik_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream data(dir / "pts.libsvm");
    write_libsvm(data, ds);
  }
  std::ostringstream out, err;
  const int fit_rc = cli::run({"fit", "--input", (dir / "pts.libsvm").string(), "--psi", "16",
                               "--t", std::to_string(t), "--out", (dir / "m.ikm").string()},
                              out, err);
  const int exp_rc = cli::run({"export-features", "--model", (dir / "m.ikm").string(), "--input",
                               (dir / "pts.libsvm").string()},
                              out, err);
  std::istringstream rows(out.str());
  const Dataset feats = parse_libsvm(rows, static_cast<Index>(t * 16));
  fs::remove_all(dir);

  bool counts_ok = feats.size() == ds.size();
  double worst_row = 0.0;
  for (const auto& f : feats.points) {
    counts_ok = counts_ok && f.nonzeros() == static_cast<Index>(t);
    worst_row = std::max(worst_row, std::abs(dot(f, f) - 1.0));
  }
  report("feature-map norm",
         fit_rc == 0 && exp_rc == 0 && counts_ok && worst_self <= 1e-12 && worst_row <= 1e-12,
         "max |sim(c,c)-1|=" + fmt(worst_self) + ", max |<row,row>-1|=" + fmt(worst_row) +
             ", rows with t nonzeros: " + (counts_ok ? "all" : "not all") + " of " +
             std::to_string(feats.size()));
}

void cell_uniformity() {
  const std::uint64_t trials = 10000;
  int cases = 0, bad = 0;
  std::string first_bad;
  for (int psi : {2, 4, 16}) {
    for (Index d : {2, 100, 1000}) {
      for (auto dist : {Distribution::Uniform, Distribution::Gaussian, Distribution::TwoCluster}) {
        ++cases;
        const auto freq = cell_probability_test(psi, dist, dist, d, trials, 7 + cases);
        const auto band = binomial_band(1.0 / psi, trials);
        for (std::size_t j = 0; j < freq.size(); ++j) {
          if (!band.contains(freq[j])) {
            if (bad++ == 0) {
              first_bad = " (first: psi=" + std::to_string(psi) + " d=" + std::to_string(d) + " " +
                          distribution_name(dist) + " cell " + std::to_string(j) + " freq " +
                          fmt(freq[j]) + ")";
            }
          }
        }
      }
    }
  }
  report("cell uniformity", bad == 0,
         std::to_string(cases) + " settings x 1e4 trials, cells outside 3 sigma band: " +
             std::to_string(bad) + first_bad);
}

void collision_bound() {
  bool ok = true;
  std::string detail;
  for (auto [psi, t] : {std::pair{2, 1}, std::pair{4, 2}, std::pair{16, 4}}) {
    const auto r = collision_test(psi, t, 2, 100000, 5);
    ok = ok && r.within_bound();
    detail += "(" + std::to_string(psi) + "," + std::to_string(t) + ") rate " + fmt(r.rate) +
              " vs threshold " + fmt(r.threshold) + "; ";
  }
  report("collision bound", ok, detail + "same-cell probability is sum p_j^2 >= 1/psi per partitioning");
}

void instability() {
  InstabilityConfig c;
  c.n_per_cluster = 200;
  c.seed = 1;
  c.measures = {GaussianMeasure{10.0}};
  for (int psi : {2, 4, 8, 16, 32, 64}) c.measures.push_back(IsolationRecipe{psi, 200});
  const auto rows = instability_sweep(c);

  // variance_ratio by (measure, d), averaged over the two query kinds.
  std::map<std::string, std::map<Index, double>> vr;
  for (const auto& r : rows) vr[r.measure][r.d] += r.variance_ratio / 2.0;
  const auto& gk = vr["GK(sigma=10)"];
  const double gk_ratio = gk.at(10000) / gk.at(10);
  std::string best;
  double best_ratio = -1.0;
  for (const auto& [name, by_d] : vr) {
    if (name.rfind("IK", 0) != 0) continue;
    const double ratio = by_d.at(10000) / by_d.at(10);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = name;
    }
  }
  report("concentration", gk_ratio < 0.1 && best_ratio > 0.5,
         "GK variance ratio d=1e4/d=10: " + fmt(gk_ratio) + "; " + best + ": " + fmt(best_ratio));

  bool ik_ok = true, gk_ok = true;
  std::string detail;
  for (const auto& r : rows) {
    if (r.measure == "IK(psi=32)") ik_ok = ik_ok && r.n_epsilon <= 2;
  }
  for (auto qk : {QueryKind::BetweenClusters, QueryKind::SparseCenter}) {
    int g = 0, k = 0;
    for (const auto& r : rows) {
      if (r.d != 10000 || r.query_kind != qk) continue;
      if (r.measure == "GK(sigma=10)") g = r.n_epsilon;
      if (r.measure == "IK(psi=32)") k = r.n_epsilon;
    }
    gk_ok = gk_ok && g >= 10 * k;
    detail += query_kind_name(qk) + " d=1e4 GK " + std::to_string(g) + " IK " + std::to_string(k) + "; ";
  }
  report("n-epsilon", ik_ok && gk_ok,
         detail + "IK(psi=32) <= 2 at every d: " + (ik_ok ? "yes" : "no"));
}

void t_sweep() {
  const Dataset ds = gen_gaussians({10000, 200, 10.0, 1});
  const std::vector<int> ts{5, 200};
  bool ok = true;
  std::string detail;
  for (auto qk : {QueryKind::BetweenClusters, QueryKind::SparseCenter}) {
    const auto q = instability_query(ds, qk);
    const auto data = vary_t_sweep(ds, q, 32, ts, 10, PartitionSource::GivenData, 1);
    const auto unif = vary_t_sweep(ds, q, 32, ts, 10, PartitionSource::Uniform, 1);
    const double pooled = std::hypot(data[1].stderr_n_eps, unif[1].stderr_n_eps);
    const double diff = std::abs(data[1].mean_n_eps - unif[1].mean_n_eps);
    ok = ok && data[1].mean_n_eps < data[0].mean_n_eps && unif[1].mean_n_eps < unif[0].mean_n_eps &&
         (diff == 0.0 || diff < 2.0 * pooled);
    detail += query_kind_name(qk) + " data t=5 " + fmt(data[0].mean_n_eps) + " t=200 " +
              fmt(data[1].mean_n_eps) + ", uniform t=200 " + fmt(unif[1].mean_n_eps) +
              " (pooled stderr " + fmt(pooled) + "); ";
  }
  report("t-sweep", ok, detail);
}

void index_exactness() {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> nd(10, 300), dd(1, 20), kd(1, 20), leaf(1, 25);
  std::map<MetricKind, int> mismatches;
  for (auto kind : {MetricKind::RawEuclidean, MetricKind::IKFeature, MetricKind::NormalizedLinear}) {
    for (int trial = 0; trial < 100; ++trial) {
      const int n = nd(gen);
      const Index d = dd(gen);
      const auto pts = random_points(n, d, gen());
      const int k = std::min(kd(gen), n);
      auto model = std::make_shared<const IKModel>(fit(pts, std::min(1 << (1 + trial % 5), n), 50, gen()));
      const KnnIndex index(pts, {kind, model}, leaf(gen));
      bool same;
      if (trial % 2 == 0) {
        const std::size_t q = std::uniform_int_distribution<std::size_t>(0, n - 1)(gen);
        same = index.tree_query(q, k).neighbors == index.brute_query(q, k).neighbors;
      } else {
        const auto q = random_points(1, d, gen())[0];
        same = index.tree_query(q, k).neighbors == index.brute_query(q, k).neighbors;
      }
      if (!same) ++mismatches[kind];
    }
  }
  int total = 0;
  std::string detail;
  for (auto kind : {MetricKind::RawEuclidean, MetricKind::IKFeature, MetricKind::NormalizedLinear}) {
    total += mismatches[kind];
    detail += metric_name(kind) + " " + std::to_string(mismatches[kind]) + "/100; ";
  }
  report("index exactness", total == 0, "mismatching triples: " + detail);
}

void w_gaussian_criteria() {
  const Dataset ds = gen_w_gaussians({500, 200, 1.0, 1.0, 1});

  // Precision and index cost per psi.
  const double dist_prec = precision_at_k(ds, {MetricKind::RawEuclidean, nullptr}, 5);
  double best_prec = -1.0, best_ratio = 1e300;
  int best_prec_psi = 0, best_ratio_psi = 0;
  std::uint64_t best_tree = 0, best_brute = 0;
  for (int psi : kPsiGrid) {
    auto m = std::make_shared<const IKModel>(fit(ds.points, psi, 200, 1));
    const MetricSpec spec{MetricKind::IKFeature, m};
    const double p = precision_at_k(ds, spec, 5);
    if (p > best_prec) {
      best_prec = p;
      best_prec_psi = psi;
    }
    const auto b = bench_index(ds, spec);
    const double ratio = static_cast<double>(b.tree.distance_evaluations) /
                         static_cast<double>(b.brute.distance_evaluations);
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best_ratio_psi = psi;
      best_tree = b.tree.distance_evaluations;
      best_brute = b.brute.distance_evaluations;
    }
  }
  report("index efficiency", best_tree < best_brute,
         "best psi=" + std::to_string(best_ratio_psi) + ": tree " + std::to_string(best_tree) +
             " vs brute " + std::to_string(best_brute) +
             " distance evaluations (nearly equidistant codes, nothing prunes)");
  report("precision@5", best_prec >= 0.98 && best_prec >= dist_prec,
         "IK(psi=" + std::to_string(best_prec_psi) + ") " + fmt(best_prec) + " vs distance " +
             fmt(dist_prec));

  // Density peaks on min-max normalized data, best eps for each measure.
  const Dataset nds = minmax_normalize(ds);
  const auto grid = percent_grid();
  const auto& truth = *nds.labels;
  const double dist_ami =
      dp_best_ami(pairwise_dissimilarity(LpMeasure{2}, nds.points), truth, 2, grid).best_ami;
  double ik_ami = -1.0;
  int ik_psi = 0;
  for (int psi : kPsiGrid) {
    auto m = std::make_shared<const IKModel>(fit(nds.points, psi, 200, 1));
    const double a =
        dp_best_ami(pairwise_dissimilarity(IsolationMeasure{m}, nds.points), truth, 2, grid).best_ami;
    if (a > ik_ami) {
      ik_ami = a;
      ik_psi = psi;
    }
  }
  const double self = ami(truth, truth);
  std::mt19937_64 gen(17);
  double worst_null = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> a(400), b(400);
    std::uniform_int_distribution<int> lab(0, 4);
    for (auto& x : a) x = lab(gen);
    for (auto& x : b) x = lab(gen);
    worst_null = std::max(worst_null, std::abs(ami(a, b)));
  }
  report("dp clustering", ik_ami - dist_ami >= 0.3 && self == 1.0 && worst_null < 0.05,
         "AMI IK(psi=" + std::to_string(ik_psi) + ") " + fmt(ik_ami) + " vs distance " +
             fmt(dist_ami) + "; ami(x,x)=" + fmt(self) + "; max |null AMI| " + fmt(worst_null));
}

void hubness_check() {
  std::map<std::string, double> skew;
  bool sums_ok = true;
  for (Index d : {3, 100}) {
    const Dataset ds = uniform_hypercube(d, 1000, 7);
    const auto gk = hubness(ds, bind_measure(GaussianMeasure{5.0}, ds.points, 1), "GK", 5);
    const auto ik = hubness(ds, bind_measure(IsolationRecipe{32, 200}, ds.points, 1), "IK", 5);
    for (const auto* h : {&gk, &ik}) {
      sums_ok = sums_ok && std::accumulate(h->occurrences.begin(), h->occurrences.end(), 0) == 5000;
    }
    skew["GK d=" + std::to_string(d)] = gk.skewness;
    skew["IK d=" + std::to_string(d)] = ik.skewness;
  }
  const double g100 = skew["GK d=100"];
  report("hubness", sums_ok && g100 > skew["GK d=3"] && g100 > skew["IK d=100"],
         "skewness GK d=3 " + fmt(skew["GK d=3"]) + ", GK d=100 " + fmt(g100) + ", IK d=3 " +
             fmt(skew["IK d=3"]) + ", IK d=100 " + fmt(skew["IK d=100"]) +
             "; sum O_k = n*k: " + (sums_ok ? "yes" : "no"));
}

void data_dependence() {
  const auto r = data_dependence_test(1.0, 10.0, 500, 16, 200, 1);
  report("data dependence", r.sparse_mean > r.dense_mean && r.gap_in_stderr >= 2.0,
         "sparse " + fmt(r.sparse_mean) + " vs dense " + fmt(r.dense_mean) + " over " +
             std::to_string(r.matched_pairs) + " matched pairs in " +
             std::to_string(r.replicates) + " replicates, gap " + fmt(r.gap_in_stderr) +
             " pooled stderr");
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const std::pair<const char*, void (*)()> checks[] = {
      {"feature-map norm", feature_map_norm}, {"cell uniformity", cell_uniformity},
      {"collision bound", collision_bound},   {"instability", instability},
      {"t-sweep", t_sweep},                   {"index exactness", index_exactness},
      {"w-gaussians", w_gaussian_criteria},   {"hubness", hubness_check},
      {"data dependence", data_dependence},
  };
  for (const auto& [name, fn] : checks) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(name, false, std::string("threw: ") + e.what());
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << failures << " criteria failed (" << fmt(secs) << " s)" << std::endl;
  return failures == 0 ? 0 : 1;
}
