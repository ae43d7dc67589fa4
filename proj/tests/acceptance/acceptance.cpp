// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fail.
//
//   rcmlab_acceptance [--cli PATH] [--only N[,N...]] [--workers W]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "rcmlab/estimators.hpp"
#include "rcmlab/events.hpp"
#include "rcmlab/graph.hpp"
#include "rcmlab/growth.hpp"

namespace fs = std::filesystem;
using namespace rcmlab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunOptions g_run;
std::string g_cli;

const ConnectionFunction kDisk = ConnectionFunction::hard_disk();

// --- giant component laws ------------------------------------------------------

struct SupercriticalRuns {
  ThetaEstimate theta;
  std::vector<GiantStatistics> giant;
};

const SupercriticalRuns& supercritical() {
  static const SupercriticalRuns runs = [] {
    SupercriticalRuns r;
    ThetaOptions opt;
    opt.run = g_run;
    r.theta = estimate_theta(kDisk, 2.0, StoppingRule{10'000, 60.0}, 10'000, 1, opt);
    for (double s : {32.0, 64.0, 128.0}) r.giant.push_back(giant_statistics(kDisk, 2.0, s, 200, 1, g_run));
    return r;
  }();
  return runs;
}

Outcome c1() {
  const SupercriticalRuns& r = supercritical();
  const double target = 2.0 * r.theta.theta_hat.value;
  const EstimateWithCI lt = scale(r.theta.theta_hat, 2.0);
  std::vector<double> gaps;
  std::string detail = fmt("lambda*theta=%.4f gaps:", target);
  for (const GiantStatistics& g : r.giant) {
    gaps.push_back(std::abs(g.L1.value - target));
    detail += fmt(" s=%g %.4f", g.s, gaps.back());
  }
  bool nonincreasing = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) nonincreasing = nonincreasing && gaps[i] <= gaps[i - 1];
  const double tol = std::max(0.02, 3.0 * combined_sigma(r.giant.back().L1, lt));
  detail += fmt(" tol@128=%.4f", tol);
  return {nonincreasing && gaps.back() <= tol, detail};
}

Outcome c2() {
  const SupercriticalRuns& r = supercritical();
  std::string detail = "mean L2/s^2:";
  bool nonincreasing = true;
  for (std::size_t i = 0; i < r.giant.size(); ++i) {
    detail += fmt(" s=%g %.5f", r.giant[i].s, r.giant[i].L2.value);
    if (i > 0) nonincreasing = nonincreasing && r.giant[i].L2.value <= r.giant[i - 1].L2.value;
  }
  return {nonincreasing && r.giant.back().L2.value <= 0.01, detail};
}

Outcome c3() {
  std::vector<double> med;
  std::string detail = "median L1/s^2:";
  for (double s : {32.0, 64.0, 128.0}) {
    med.push_back(giant_statistics(kDisk, 0.5, s, 200, 3, g_run).median_L1);
    detail += fmt(" s=%g %.6f", s, med.back());
  }
  const bool decreasing = med[1] < med[0] && med[2] < med[1];
  return {decreasing && med[2] <= 0.01, detail};
}

// --- Mecke ---------------------------------------------------------------------

Outcome c4() {
  const MeckeReport a = mecke_check_Ns(kDisk, 1.0, 1.0, 16.0, 2000, 4, g_run);
  const MeckeReport b = mecke_check_Ns(kDisk, 2.0, 1.0, 32.0, 2000, 4, g_run);
  return {a.compatible && b.compatible,
          fmt("(1,16): %.3f vs %.3f sigma %.3f; (2,32): %.3f vs %.3f sigma %.3f", a.lhs.value, a.rhs.value,
              a.sigma, b.lhs.value, b.rhs.value, b.sigma)};
}

Outcome c5() {
  const MeckeSecondReport m = mecke_check_second(kDisk, 2.0, 64.0, 1000, 5, g_run, 0.02);
  return {m.compatible && m.factorization_ok,
          fmt("lhs %.4g rhs %.4g sigma %.3g; two-point %.4f vs theta_s^2 %.4f (3 sigma %.4f + %.2f)", m.lhs.value,
              m.rhs.value, m.sigma, m.both_fraction.value, m.theta_s_squared, 3.0 * m.factorization_sigma,
              m.allowance)};
}

// --- exact oracles -----------------------------------------------------------------

std::vector<int> bfs_labels(const EdgeSet& e, std::size_t n) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto [a, b] : e.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<std::uint32_t> q;
    q.push(static_cast<std::uint32_t>(s));
    comp[s] = next;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (auto w : adj[v]) {
        if (comp[w] < 0) {
          comp[w] = next;
          q.push(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

Outcome c6() {
  int mismatches = 0;
  std::uint64_t vertices = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const PalmPointSet p = with_origin(sample_points(1.0, BoxSpec(8.0), 6, r));
    const ClusterResult c = grow_cluster(SeedRegion::point({0.0, 0.0}), p, kDisk, StoppingRule::unlimited());
    const std::vector<Site> v = p.vertices();
    const std::vector<int> comp = bfs_labels(build_edges(p, kDisk), v.size());
    std::size_t origin = 0;
    while (!is_palm(v[origin].id)) ++origin;
    std::set<VertexId> eager;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (comp[i] == comp[origin]) eager.insert(v[i].id);
    }
    const std::set<VertexId> lazy(c.ids.begin(), c.ids.end());
    mismatches += lazy != eager || c.status != ClusterStatus::exhausted;
    vertices += eager.size();
  }
  return {mismatches == 0, fmt("100 instances, %d mismatches, %llu cluster vertices", mismatches,
                               static_cast<unsigned long long>(vertices))};
}

Outcome c7() {
  int mismatches = 0;
  int instances = 0;
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (std::uint64_t r = 0; r < 34; ++r) {
      const PointSet p = sample_points(lambda, BoxSpec(8.0), 7, r);
      const EdgeSet e = build_edges(p, kDisk);
      const ComponentSummary c = connected_components(e, p.size(), true);
      const std::vector<int> oracle = bfs_labels(e, p.size());
      std::map<std::uint32_t, int> fwd;
      std::map<int, std::uint32_t> back;
      bool same = true;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const auto [f, fresh_f] = fwd.emplace(c.labels[i], oracle[i]);
        const auto [b, fresh_b] = back.emplace(oracle[i], c.labels[i]);
        same = same && f->second == oracle[i] && b->second == c.labels[i];
      }
      std::map<int, std::uint64_t> sizes;
      for (int l : oracle) ++sizes[l];
      std::vector<std::uint64_t> expect;
      for (auto [l, n] : sizes) expect.push_back(n);
      std::sort(expect.rbegin(), expect.rend());
      same = same && c.component_sizes == expect;
      mismatches += !same;
      ++instances;
    }
  }
  return {mismatches == 0 && instances >= 100, fmt("%d instances, %d mismatches", instances, mismatches)};
}

Outcome c8() {
  int mismatches = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const double range = 0.5 + (r % 4) * 0.5;
    const PointSet p = sample_points(1.0 + r % 3, BoxSpec(6.0 + r % 5), 8, r);
    std::vector<Point2> pts;
    for (const Site& s : p.sites) pts.push_back(s.pos);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> brute;
    for (std::uint32_t i = 0; i < pts.size(); ++i) {
      for (std::uint32_t j = i + 1; j < pts.size(); ++j) {
        if (distance(pts[i], pts[j]) <= range) brute.emplace_back(i, j);
      }
    }
    mismatches += candidate_pairs(pts, range) != brute;
  }
  return {mismatches == 0, fmt("100 instances, %d mismatches", mismatches)};
}

Outcome c9() {
  std::uint64_t vertices = 0;
  std::uint64_t degree_sum = 0;
  for (std::uint64_t r = 0; vertices < 100'000; ++r) {
    const PointSet p = sample_points(1.0, BoxSpec(64.0), 9, r);
    std::vector<std::uint32_t> deg(p.size(), 0);
    for (auto [a, b] : build_edges(p, kDisk).edges) {
      ++deg[a];
      ++deg[b];
    }
    const double inner = p.box.half() - kDisk.range();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (std::abs(p.sites[i].pos.x) < inner && std::abs(p.sites[i].pos.y) < inner) {
        ++vertices;
        degree_sum += deg[i];
      }
    }
  }
  const double mean = static_cast<double>(degree_sum) / static_cast<double>(vertices);
  const double rel = std::abs(mean - std::numbers::pi) / std::numbers::pi;
  return {rel <= 0.01, fmt("mean degree %.4f over %llu vertices, relative error %.4f", mean,
                           static_cast<unsigned long long>(vertices), rel)};
}

// --- critical intensity ----------------------------------------------------------

Outcome c10() {
  LambdaCCriterion crit;
  const std::vector<double> s{64.0, 128.0};
  const LambdaCBracket a = estimate_lambda_c(kDisk, s, crit, 10, g_run);
  const std::vector<double> s2{128.0, 256.0};
  const LambdaCBracket b = estimate_lambda_c(kDisk.scaled(2.0), s2, crit, 11, g_run);
  const bool narrow = a.upper - a.lower <= 0.1;
  const bool hits = a.upper >= 1.3 && a.lower <= 1.6;
  const double slack = (a.upper - a.lower) / 4.0 + (b.upper - b.lower);
  const bool scaled = b.lower <= a.upper / 4.0 + slack && b.upper >= a.lower / 4.0 - slack &&
                      std::abs(0.5 * (b.lower + b.upper) - 0.5 * (a.lower + a.upper) / 4.0) <= slack;
  return {narrow && hits && scaled,
          fmt("hard-disk [%.4f, %.4f]; range 2 [%.4f, %.4f] vs quarter [%.4f, %.4f]", a.lower, a.upper, b.lower,
              b.upper, a.lower / 4.0, a.upper / 4.0)};
}

// --- renormalization events --------------------------------------------------------

Outcome c11() {
  const double K = 2.0;
  const double lambda = 2.0;
  const std::vector<double> L{4.0, 6.0, 8.0, 10.0};
  const std::vector<double> M{6.0, 10.0, 14.0, 18.0};
  const auto u = grid_search_U(kDisk, K, lambda, L, 1000, 12, g_run);
  const auto f = grid_search_F(kDisk, K, lambda, M, 1000, 12, g_run);
  double L_star = 0.0;
  double M_star = 0.0;
  for (const auto& [l, e] : u) {
    if (e.value >= 0.8 && L_star == 0.0) L_star = l;
  }
  for (const auto& [m, e] : f) {
    if (e.value >= 0.8 && M_star == 0.0) M_star = m;
  }
  std::string detail = "U:";
  for (const auto& [l, e] : u) detail += fmt(" L=%g %.3f", l, e.value);
  detail += "; F:";
  for (const auto& [m, e] : f) detail += fmt(" M=%g %.3f", m, e.value);
  if (L_star == 0.0 || M_star == 0.0) return {false, detail + "; no grid point reaches 0.8"};

  double block_M = std::max(M_star, 3.0 * L_star);
  if (block_M <= 3.0 * K) block_M = 3.0 * K + 1.0;
  const BlockParams bp{K, block_M, lambda};
  const BlockFieldSample field = block_field_sample(kDisk, bp, 10, 10, 12, 0, g_run);
  detail += fmt("; block M=%g P[X=1]=%.3f", block_M, field.fraction());

  std::vector<BlockFieldSample> samples;
  for (std::uint64_t j = 0; j < 10; ++j) samples.push_back(block_field_sample(kDisk, bp, 20, 20, 13, j, g_run));
  const DependenceReport d = dependence_check(samples, 8);
  detail += fmt("; d=8 disjoint=%d min dist %.1f > %.1f, corr %.4f cov %.5f sigma %.5f", d.structural_disjoint,
                d.min_center_distance, 6.0 * block_M, d.correlation, d.covariance, d.sigma);
  return {field.fraction() >= 0.7 && d.ok(), detail};
}

// --- monotonicity --------------------------------------------------------------------

Outcome c12() {
  std::string detail = "theta:";
  bool ok = true;
  ThetaOptions opt;
  opt.run = g_run;
  EstimateWithCI prev{};
  bool first = true;
  for (double lambda : {0.8, 1.2, 1.6, 2.0, 2.4}) {
    const EstimateWithCI t = estimate_theta(kDisk, lambda, StoppingRule{}, 2000, 14, opt).theta_hat;
    detail += fmt(" %.3f", t.value);
    if (!first) ok = ok && t.value + 3.0 * combined_sigma(t, prev) >= prev.value;
    prev = t;
    first = false;
  }
  detail += "; F:";
  double f_prev = -1.0;
  for (double lambda : {1.6, 2.0, 2.4}) {
    const EstimateWithCI f = estimate_event_F(kDisk, {2.0, 8.0, lambda}, 1000, 14, g_run);
    detail += fmt(" %.3f", f.value);
    ok = ok && f.value >= f_prev;
    f_prev = f.value;
  }
  const double s = 32.0;
  const double lambda = 1.6;
  const std::vector<std::pair<IncreasingEvent, IncreasingEvent>> pairs{
      {event_nonempty(), event_nonempty()},
      {event_L1_at_least(0.25 * lambda * s * s), event_disk_to_boundary(1.0)},
      {event_disk_to_boundary(1.0), event_disk_to_boundary(2.0)}};
  const FkgReport fkg = fkg_sanity(kDisk, lambda, s, pairs, 1000, 14, g_run);
  detail += "; fkg cov/sigma:";
  for (const CovarianceReport& c : fkg.pairs) detail += fmt(" %.4f/%.4f", c.covariance, c.sigma);
  return {ok && fkg.ok, detail};
}

// --- CLI determinism -----------------------------------------------------------------

std::map<std::string, std::string> outputs_of(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name == "manifest.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out[name] = os.str();
  }
  return out;
}

Outcome c13() {
  if (g_cli.empty()) return {false, "no --cli given"};
  const fs::path root = fs::temp_directory_path() / ("rcmlab-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> runs{
      {"giant", "--lambda 2 --s 32,64 --replicates 20"},
      {"theta", "--lambda 1.6,2 --replicates 200 --kmax 2000 --rmax-escape 30"},
      {"lambda-c", "--s 16,32 --replicates 40"},
      {"events", "--lambda 2 --K 2 --L 6,10 --M 6,10 --replicates 100"},
      {"block-field", "--lambda 2 --K 2 --M 10 --grid 4 --samples 2"},
      {"mecke", "--lambda 1 --s 16 --K 1 --replicates 200"},
      {"fkg", "--lambda 1.6 --s 16 --replicates 100"},
      {"sample", "--lambda 1 --s 16 --replicates 2"}};
  int mismatches = 0;
  int failures = 0;
  std::size_t files = 0;
  for (const auto& [sub, args] : runs) {
    std::vector<std::map<std::string, std::string>> seen;
    for (const char* tag : {"w1", "w4", "w1again"}) {
      const fs::path dir = root / (sub + "-" + tag);
      const int w = std::string(tag) == "w4" ? 4 : 1;
      const std::string cmd = "\"" + g_cli + "\" " + sub + " " + args + " --seed 13 --workers " +
                              std::to_string(w) + " --out \"" + dir.string() + "\" 2>/dev/null";
      if (std::system(cmd.c_str()) != 0) {
        ++failures;
        continue;
      }
      seen.push_back(outputs_of(dir));
    }
    for (std::size_t i = 1; i < seen.size(); ++i) mismatches += seen[i] != seen[0];
    if (!seen.empty()) files += seen[0].size();
  }
  fs::remove_all(root);
  return {failures == 0 && mismatches == 0,
          fmt("%zu subcommands x 3 runs, %zu output files each set, %d failed runs, %d mismatches", runs.size(),
              files, failures, mismatches)};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  g_run.workers = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      g_cli = argv[++i];
    } else if (a == "--workers" && i + 1 < argc) {
      g_run.workers = static_cast<unsigned>(std::stoul(argv[++i]));
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: %s [--cli PATH] [--only N[,N...]] [--workers W]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "supercritical giant law", c1},
      {2, "second component vanishes", c2},
      {3, "subcritical law", c3},
      {4, "first-order Mecke identity", c4},
      {5, "second-order Mecke and factorization", c5},
      {6, "eager/lazy exact coupling", c6},
      {7, "component oracle", c7},
      {8, "cell-list completeness", c8},
      {9, "degree calibration", c9},
      {10, "critical intensity bracket", c10},
      {11, "renormalization events", c11},
      {12, "monotonicity suite", c12},
      {13, "CLI determinism", c13}};

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s C%d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.number, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
