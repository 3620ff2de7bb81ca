// SPDX-License-Identifier: Apache-2.0
//
// Run configuration shared by every command: JSON in, JSON out, a stable
// hash of the canonical dump, and the provenance line each output starts with.
#pragma once

#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hht/errors.hpp"
#include "hht/kernel.hpp"
#include "hht/montecarlo.hpp"
#include "hht/quadrature.hpp"
#include "hht/spectral.hpp"

namespace hht {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

/// Overlap selection: a named preset or explicit index sets.
struct OverlapConfig {
  std::string preset;  ///< "full", "half", "disjoint" or empty
  OverlapIndexSets sets;

  OverlapIndexSets resolve(std::size_t P, std::size_t N) const {
    if (preset == "full") return OverlapIndexSets::full(P, N);
    if (preset == "half") return OverlapIndexSets::half(P, N);
    if (preset == "disjoint") return OverlapIndexSets::disjoint(P, N);
    if (!preset.empty()) throw ValidationError("overlap: unknown preset '" + preset + "'");
    sets.validate(P, N);
    return sets;
  }

  bool operator==(const OverlapConfig& o) const {
    return preset == o.preset && sets.rows_i == o.sets.rows_i && sets.rows_j == o.sets.rows_j &&
           sets.cols_i == o.sets.cols_i && sets.cols_j == o.sets.cols_j;
  }
};

struct RunConfig {
  double alpha = 3.0;
  double epsilon = 0.01;
  double y = 0.5;
  std::size_t N = 200;
  std::size_t M = 100;
  std::uint64_t seed = 1;
  bool truncate = true;
  std::vector<cplx> z_grid{{0.0, 2.0}, {0.0, -2.0}, {1.0, 2.0}};
  std::vector<cplx> w_grid;  ///< kernel command; empty means z_grid
  std::vector<std::string> routes{"A", "B", "C"};
  std::optional<OverlapConfig> overlap;
  QuadratureConfig quad_a = route_A_config();
  QuadratureConfig quad_b = route_B_config();
  double tol_a = 1e-3;  ///< route A vs C, relative
  double tol_b = 1e-8;  ///< route B vs C, relative
  double mc_band = 0.25;
  double gauss_band = 0.6;
  std::size_t bootstrap = 1000;
  std::size_t esd_replicas = 1;
  double esd_threshold = 0.05;
  bool write_eigenvalues = false;
  std::vector<cplx> lambdas{{1.0, -1.0}, {0.0, -2.0}};
  std::vector<std::size_t> phi_N{1000, 10000, 100000, 1000000};
  double phi_noise = 1e-6;  ///< allowed relative rise between consecutive N
  std::size_t verify_trials = 100;

  void validate() const {
    HeavyTailSpec::make(alpha, seed);
    if (!epsilon_admissible(alpha, epsilon))
      throw ValidationError("config: epsilon is not admissible for alpha");
    if (!(y > 0.0)) throw ValidationError("config: y must be positive");
    if (N < 1) throw ValidationError("config: N must be >= 1");
    if (M < 2) throw ValidationError("config: M must be >= 2");
    if (z_grid.empty()) throw ValidationError("config: z_grid is empty");
    for (const cplx z : z_grid)
      if (z.imag() == 0.0) throw ValidationError("config: z_grid points must be non-real");
    for (const cplx w : w_grid)
      if (w.imag() == 0.0) throw ValidationError("config: w_grid points must be non-real");
    for (const auto& r : routes)
      if (r != "A" && r != "B" && r != "C") throw ValidationError("config: unknown route '" + r + "'");
    quad_a.validate();
    quad_b.validate();
    if (!(tol_a > 0.0) || !(tol_b > 0.0)) throw ValidationError("config: route tolerances must be positive");
    if (!(mc_band > 0.0) || !(gauss_band > 0.0)) throw ValidationError("config: bands must be positive");
    if (bootstrap < 1) throw ValidationError("config: bootstrap must be >= 1");
    if (esd_replicas < 1) throw ValidationError("config: esd_replicas must be >= 1");
    if (!(esd_threshold > 0.0)) throw ValidationError("config: esd_threshold must be positive");
    for (const cplx l : lambdas)
      if (l.imag() > 0.0) throw ValidationError("config: lambdas need Im <= 0");
    for (const auto n : phi_N)
      if (n < 1) throw ValidationError("config: phi_N entries must be >= 1");
    if (!(phi_noise >= 0.0)) throw ValidationError("config: phi_noise must be >= 0");
    if (verify_trials < 1) throw ValidationError("config: verify_trials must be >= 1");
    if (overlap) {
      const auto ens = ensemble();
      overlap->resolve(ens.P, ens.N);
    }
  }

  HeavyTailSpec distribution() const { return HeavyTailSpec::make(alpha, seed); }

  EnsembleSpec ensemble() const { return EnsembleSpec::make(N, y, distribution(), truncate, epsilon); }

  KernelParams kernel_params() const { return KernelParams::from(distribution(), y); }
};

namespace detail {

inline json complex_list(const std::vector<cplx>& v) {
  json a = json::array();
  for (const cplx z : v) a.push_back({z.real(), z.imag()});
  return a;
}

inline std::vector<cplx> parse_complex_list(const json& j, const char* key) {
  if (!j.is_array()) throw ValidationError(std::string("config: ") + key + " must be an array");
  std::vector<cplx> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ValidationError(std::string("config: ") + key + " entries must be [re, im]");
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

inline json quad_json(const QuadratureConfig& q) {
  return {{"rel_tol", q.rel_tol},
          {"abs_tol", q.abs_tol},
          {"max_refinements", q.max_refinements},
          {"tail_cut_factor", q.tail_cut_factor}};
}

inline QuadratureConfig parse_quad(const json& j, QuadratureConfig q) {
  if (!j.is_object()) throw ValidationError("config: quadrature entries must be objects");
  for (const auto& [k, v] : j.items()) {
    if (k == "rel_tol") q.rel_tol = v.get<double>();
    else if (k == "abs_tol") q.abs_tol = v.get<double>();
    else if (k == "max_refinements") q.max_refinements = v.get<int>();
    else if (k == "tail_cut_factor") q.tail_cut_factor = v.get<double>();
    else throw ValidationError("config: unknown quadrature key '" + k + "'");
  }
  return q;
}

/// Contiguous index runs are written as {begin, end}.
inline json index_set_json(const std::vector<std::size_t>& v) {
  bool contiguous = !v.empty();
  for (std::size_t k = 1; k < v.size() && contiguous; ++k) contiguous = v[k] == v[k - 1] + 1;
  if (contiguous) return {{"begin", v.front()}, {"end", v.back() + 1}};
  return v;
}

inline std::vector<std::size_t> parse_index_set(const json& j, const char* key) {
  if (j.is_object()) {
    if (!j.contains("begin") || !j.contains("end") || j.size() != 2)
      throw ValidationError(std::string("config: overlap.") + key + " range needs begin and end");
    const auto b = j["begin"].get<std::size_t>();
    const auto e = j["end"].get<std::size_t>();
    if (e <= b) throw ValidationError(std::string("config: overlap.") + key + " range is empty");
    return OverlapIndexSets::range(b, e);
  }
  if (j.is_array()) return j.get<std::vector<std::size_t>>();
  throw ValidationError(std::string("config: overlap.") + key + " must be an array or a range");
}

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  json j;
  j["alpha"] = c.alpha;
  j["epsilon"] = c.epsilon;
  j["y"] = c.y;
  j["N"] = c.N;
  j["M"] = c.M;
  j["seed"] = c.seed;
  j["truncate"] = c.truncate;
  j["z_grid"] = detail::complex_list(c.z_grid);
  j["w_grid"] = detail::complex_list(c.w_grid);
  j["routes"] = c.routes;
  if (c.overlap) {
    if (!c.overlap->preset.empty()) {
      j["overlap"] = c.overlap->preset;
    } else {
      const auto& s = c.overlap->sets;
      j["overlap"] = {{"rows_i", detail::index_set_json(s.rows_i)},
                      {"rows_j", detail::index_set_json(s.rows_j)},
                      {"cols_i", detail::index_set_json(s.cols_i)},
                      {"cols_j", detail::index_set_json(s.cols_j)}};
    }
  }
  j["quadrature"] = {{"route_a", detail::quad_json(c.quad_a)}, {"route_b", detail::quad_json(c.quad_b)}};
  j["tol_a"] = c.tol_a;
  j["tol_b"] = c.tol_b;
  j["mc_band"] = c.mc_band;
  j["gauss_band"] = c.gauss_band;
  j["bootstrap"] = c.bootstrap;
  j["esd_replicas"] = c.esd_replicas;
  j["esd_threshold"] = c.esd_threshold;
  j["write_eigenvalues"] = c.write_eigenvalues;
  j["lambdas"] = detail::complex_list(c.lambdas);
  j["phi_N"] = c.phi_N;
  j["phi_noise"] = c.phi_noise;
  j["verify_trials"] = c.verify_trials;
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be an object");
  RunConfig c;
  for (const auto& [k, v] : j.items()) {
    using detail::get_as;
    if (k == "alpha") c.alpha = get_as<double>(v, k);
    else if (k == "epsilon") c.epsilon = get_as<double>(v, k);
    else if (k == "y") c.y = get_as<double>(v, k);
    else if (k == "N") c.N = get_as<std::size_t>(v, k);
    else if (k == "M") c.M = get_as<std::size_t>(v, k);
    else if (k == "seed") c.seed = get_as<std::uint64_t>(v, k);
    else if (k == "truncate") c.truncate = get_as<bool>(v, k);
    else if (k == "z_grid") c.z_grid = detail::parse_complex_list(v, "z_grid");
    else if (k == "w_grid") c.w_grid = detail::parse_complex_list(v, "w_grid");
    else if (k == "routes") c.routes = get_as<std::vector<std::string>>(v, k);
    else if (k == "overlap") {
      if (v.is_null()) {
        c.overlap.reset();
      } else if (v.is_string()) {
        c.overlap = OverlapConfig{v.get<std::string>(), {}};
      } else if (v.is_object()) {
        OverlapConfig oc;
        for (const auto& [ok, ov] : v.items()) {
          if (ok == "rows_i") oc.sets.rows_i = detail::parse_index_set(ov, "rows_i");
          else if (ok == "rows_j") oc.sets.rows_j = detail::parse_index_set(ov, "rows_j");
          else if (ok == "cols_i") oc.sets.cols_i = detail::parse_index_set(ov, "cols_i");
          else if (ok == "cols_j") oc.sets.cols_j = detail::parse_index_set(ov, "cols_j");
          else throw ValidationError("config: unknown overlap key '" + ok + "'");
        }
        c.overlap = oc;
      } else {
        throw ValidationError("config: overlap must be a preset name or an object");
      }
    } else if (k == "quadrature") {
      if (!v.is_object()) throw ValidationError("config: quadrature must be an object");
      for (const auto& [qk, qv] : v.items()) {
        if (qk == "route_a") c.quad_a = detail::parse_quad(qv, c.quad_a);
        else if (qk == "route_b") c.quad_b = detail::parse_quad(qv, c.quad_b);
        else throw ValidationError("config: unknown quadrature section '" + qk + "'");
      }
    } else if (k == "tol_a") c.tol_a = get_as<double>(v, k);
    else if (k == "tol_b") c.tol_b = get_as<double>(v, k);
    else if (k == "mc_band") c.mc_band = get_as<double>(v, k);
    else if (k == "gauss_band") c.gauss_band = get_as<double>(v, k);
    else if (k == "bootstrap") c.bootstrap = get_as<std::size_t>(v, k);
    else if (k == "esd_replicas") c.esd_replicas = get_as<std::size_t>(v, k);
    else if (k == "esd_threshold") c.esd_threshold = get_as<double>(v, k);
    else if (k == "write_eigenvalues") c.write_eigenvalues = get_as<bool>(v, k);
    else if (k == "lambdas") c.lambdas = detail::parse_complex_list(v, "lambdas");
    else if (k == "phi_N") c.phi_N = get_as<std::vector<std::size_t>>(v, k);
    else if (k == "phi_noise") c.phi_noise = get_as<double>(v, k);
    else if (k == "verify_trials") c.verify_trials = get_as<std::size_t>(v, k);
    else throw ValidationError("config: unknown key '" + k + "'");
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: parse error: ") + e.what());
  }
  return config_from_json(j);
}

inline bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

/// FNV-1a over the canonical (key-sorted, compact) dump.
inline std::uint64_t config_hash(const RunConfig& c) {
  const std::string s = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

/// "# hht-rmt version=... config_hash=... seed=..." for CSV outputs.
inline std::string provenance_line(const RunConfig& c, const std::string& command) {
  std::ostringstream os;
  os << "# hht-rmt version=" << kVersion << " command=" << command
     << " config_hash=" << hash_hex(config_hash(c)) << " seed=" << c.seed;
  return os.str();
}

inline json provenance_json(const RunConfig& c, const std::string& command) {
  return {{"tool", "hht-rmt"},
          {"version", kVersion},
          {"command", command},
          {"config_hash", hash_hex(config_hash(c))},
          {"seed", c.seed},
          {"config", to_json(c)}};
}

}  // namespace hht
