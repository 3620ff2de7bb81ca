// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Usage:
//
//   acceptance [--cli PATH] [--work DIR] [criterion ...]
//
// Prints one "criterion N: PASS|FAIL ..." line per criterion run and exits
// nonzero if any of them failed. Without criterion arguments all twelve run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hht/heavytail.hpp"
#include "hht/kernel.hpp"
#include "hht/montecarlo.hpp"
#include "hht/spectral.hpp"
#include "hht/verify.hpp"

namespace {

using namespace hht;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  double budget_s;
  std::function<Outcome()> run;
};

std::string cli_path;
fs::path work_dir = fs::temp_directory_path() / "hht_acceptance";

Outcome from_records(const std::vector<CheckRecord>& recs) {
  Outcome o{true, {}};
  std::ostringstream os;
  for (const auto& r : recs) {
    os << (os.tellp() > 0 ? "; " : "") << r.family << '/' << r.name << ' '
       << (r.pass ? "ok" : "FAILED") << " worst=" << r.worst << " tol=" << r.tolerance;
    o.pass = o.pass && r.pass;
  }
  o.detail = os.str();
  return o;
}

Outcome verify_families(std::initializer_list<const char*> names) {
  VerifyOptions opt;
  std::vector<CheckRecord> all;
  for (const char* n : names) {
    auto r = run_verify_suite(opt, n);
    all.insert(all.end(), r.begin(), r.end());
  }
  return from_records(all);
}

// --- 7: ESD ---------------------------------------------------------------

Outcome esd_convergence() {
  const auto dist = HeavyTailSpec::make(3.0, 1);
  const auto ens = EnsembleSpec::make(2000, 0.5, dist, true);
  const auto s = spectrum(build_matrix(ens, 0), ens.N, 0);
  const double d = esd_compare(s, 0.5);
  std::ostringstream os;
  os << "Kolmogorov distance " << d << " (threshold 0.05)";
  return {d <= 0.05, os.str()};
}

// --- 8: phi_N expansion ----------------------------------------------------

Outcome phi_expansion() {
  const auto dist = HeavyTailSpec::make(3.0, 1);
  const double noise = 1e-6;
  bool ok = true;
  std::ostringstream os;
  for (const cplx lam : {cplx{1.0, -1.0}, cplx{0.0, -2.0}}) {
    os << "lambda=" << lam << ':';
    std::optional<PhiResidual> prev;
    for (const std::size_t n : {1000u, 10000u, 100000u, 1000000u}) {
      const auto r = phi_N_residual(lam, dist, 0.01, n);
      os << ' ' << r.scaled;
      if (prev && r.scaled > prev->scaled * (1.0 + noise) + prev->scaled_err + r.scaled_err) ok = false;
      prev = r;
    }
    os << ' ';
  }
  return {ok, os.str()};
}

// --- 9: variance scaling ---------------------------------------------------

Outcome variance_scaling() {
  const double alpha = 3.0;
  const auto dist = HeavyTailSpec::make(alpha, 9);
  std::vector<double> lx, ly;
  std::ostringstream os;
  for (const std::size_t n : {250u, 500u, 1000u, 2000u}) {
    McPlan plan;
    plan.ensemble = EnsembleSpec::make(n, 0.5, dist, true);
    plan.z_grid = {cplx{0.0, 2.0}};
    plan.M = 500;
    const auto r = run_replicas(plan);
    const double s = detail::theta_scale(alpha, n);
    const double var = r.cov(0, 0).real() / (s * s);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(var));
    os << "N=" << n << " var=" << var << "; ";
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  const double slope = sxy / sxx;
  const double target = 2.0 - 0.5 * alpha;
  os << "slope " << slope << " target " << target << " +- 0.35";
  return {std::abs(slope - target) <= 0.35, os.str()};
}

// --- 10: CLT covariance band -------------------------------------------------

bool band_check(cplx est, cplx theory, double se, double rel, std::ostream& os, const char* label) {
  const double tol = std::max(3.0 * se, rel * std::abs(theory));
  const double diff = std::abs(est - theory);
  os << label << " est=" << est << " theory=" << theory << " |diff|=" << diff << " tol=" << tol << "; ";
  return diff <= tol;
}

Outcome clt_covariance() {
  const double alpha = 3.0, y = 0.5;
  const auto dist = HeavyTailSpec::make(alpha, 10);
  const auto kp = KernelParams::from(dist, y);
  McPlan plan;
  plan.ensemble = EnsembleSpec::make(1000, y, dist, true);
  const cplx z{0.0, 2.0}, w{1.0, 2.0};
  plan.z_grid = {z, std::conj(z), w};
  plan.M = 2000;
  const auto r = run_replicas(plan);
  std::ostringstream os;
  bool ok = band_check(r.pseudo(0, 1), kernel_route_C_closed_form(z, std::conj(z), kp),
                       r.pseudo_se(0, 1).real(), 0.25, os, "C(2i,-2i)");
  ok = band_check(r.pseudo(0, 2), kernel_route_C_closed_form(z, w, kp), r.pseudo_se(0, 2).real(),
                  0.25, os, "C(2i,1+2i)") &&
       ok;
  const auto g = gaussianity_diagnostics(r, 0, 1000, 10, 0.6);
  os << "gaussianity skew(re)=" << g.re.skewness.estimate << " kurt(re)=" << g.re.excess_kurtosis.estimate
     << " skew(im)=" << g.im.skewness.estimate << " kurt(im)=" << g.im.excess_kurtosis.estimate
     << (g.pass() ? " ok" : " FAILED");
  return {ok && g.pass(), os.str()};
}

// --- 11: overlap -----------------------------------------------------------

Outcome overlap() {
  const double alpha = 3.0;
  const auto dist = HeavyTailSpec::make(alpha, 11);
  std::ostringstream os;
  bool ok = true;

  // Full overlap reproduces the single-matrix kernel.
  double worst = 0.0;
  for (const double y : {0.5, 1.0, 2.0}) {
    const auto kp = KernelParams::from(dist, y);
    const OverlapParams full{y, y, 1.0, 1.0, y};
    for (const auto& [z, w] : kernel_test_pairs()) {
      const cplx c = kernel_route_C_closed_form(z, w, kp);
      const cplx b = overlap_kernel(z, w, kp, full, route_B_config()).value;
      const cplx cf = overlap_kernel_closed_form(z, w, kp, full);
      worst = std::max({worst, std::abs(b - c) / std::abs(c), std::abs(cf - c) / std::abs(c)});
    }
  }
  os << "full overlap worst rel " << worst << " (tol 1e-3); ";
  ok = worst <= 1e-3;

  // Half-overlap Monte Carlo.
  const double y = 0.6;
  const auto kp = KernelParams::from(dist, y);
  McPlan plan;
  plan.ensemble = EnsembleSpec::make(800, y, dist, true);
  const cplx z{0.0, 2.0}, w{1.0, 2.0};
  plan.z_grid = {z, std::conj(z), w};
  plan.M = 2000;
  plan.overlap = OverlapIndexSets::half(plan.ensemble.P, plan.ensemble.N);
  const auto r = run_overlap_replicas(plan);
  const auto& p = r.params;
  os << "gamma_ij=" << p.gamma_ij << "; ";
  const auto cij = [&](cplx a, cplx b) { return overlap_kernel(a, b, kp, p, route_B_config()).value; };
  ok = band_check(r.cross_pseudo(0, 1), cij(z, std::conj(z)), r.cross_pseudo_se(0, 1).real(), 0.30, os,
                  "C_ij(2i,-2i)") &&
       ok;
  ok = band_check(r.cross_pseudo(0, 2), cij(z, w), r.cross_pseudo_se(0, 2).real(), 0.30, os,
                  "C_ij(2i,1+2i)") &&
       ok;
  return {ok, os.str()};
}

// --- 12: determinism across thread counts ----------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  if (cli_path.empty()) return {false, "no --cli given"};
  const fs::path base = work_dir / "determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path cfg = base / "config.json";
  {
    std::ofstream os(cfg);
    os << R"({"N": 120, "M": 40, "y": 0.5, "seed": 7, "esd_replicas": 3,
              "write_eigenvalues": true, "verify_trials": 10,
              "phi_N": [1000, 10000]})";
  }
  struct Job {
    std::string command, extra;
    std::vector<std::string> files;
  };
  const std::vector<Job> jobs{{"mc", "", {"mc.json", "mc.csv"}},
                              {"mc", "--overlap half", {"mc.json", "mc.csv"}},
                              {"esd", "", {"esd.json", "eigenvalues.csv"}},
                              {"kernel", "", {"kernel.csv"}},
                              {"phi", "", {"phi.csv"}},
                              {"verify", "--only ward", {"verify.json"}}};
  std::ostringstream os;
  bool ok = true;
  int idx = 0;
  for (const auto& job : jobs) {
    std::vector<std::string> reference;
    for (const int threads : {1, 2, 4}) {
      const fs::path out = base / (std::to_string(idx) + "_t" + std::to_string(threads));
      const std::string cmd = '"' + cli_path + "\" " + job.command + ' ' + job.extra + " --config \"" +
                              cfg.string() + "\" --out \"" + out.string() + "\" --threads " +
                              std::to_string(threads) + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        os << job.command << " exited nonzero; ";
        ok = false;
        continue;
      }
      for (std::size_t f = 0; f < job.files.size(); ++f) {
        const std::string bytes = slurp(out / job.files[f]);
        if (bytes.empty()) {
          os << job.files[f] << " missing; ";
          ok = false;
        }
        if (threads == 1) {
          reference.push_back(bytes);
        } else if (bytes != reference[f]) {
          os << job.command << ' ' << job.files[f] << " differs at threads=" << threads << "; ";
          ok = false;
        }
      }
    }
    ++idx;
  }
  if (ok) os << jobs.size() << " commands byte-identical at 1, 2 and 4 threads";
  return {ok, os.str()};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c{
      {1, 1.0, [] { return verify_families({"mplaw"}); }},
      {2, 5.0, [] { return verify_families({"stieltjes"}); }},
      {3, 10.0, [] { return verify_families({"lemmas"}); }},
      {4, 300.0, [] { return verify_families({"routes"}); }},
      {5, 10.0, [] { return verify_families({"frullani"}); }},
      {6, 30.0, [] { return verify_families({"ward", "diagonal_bound", "sign", "diagonal_identity", "rank"}); }},
      {7, 60.0, esd_convergence},
      {8, 30.0, phi_expansion},
      {9, 1200.0, variance_scaling},
      {10, 3600.0, clt_covariance},
      {11, 3600.0, overlap},
      {12, 300.0, determinism},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--cli" && k + 1 < argc) {
      cli_path = argv[++k];
    } else if (a == "--work" && k + 1 < argc) {
      work_dir = argv[++k];
    } else {
      try {
        wanted.push_back(std::stoi(a));
      } catch (const std::exception&) {
        std::cerr << "usage: acceptance [--cli PATH] [--work DIR] [criterion ...]\n";
        return 2;
      }
    }
  }
  int failures = 0;
  for (const auto& c : criteria()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << " (" << secs << " s, budget "
              << c.budget_s << " s" << (in_time ? "" : ", OVER BUDGET") << ") " << o.detail << std::endl;
    if (!pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
