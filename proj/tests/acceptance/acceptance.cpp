/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 on any
// failure. Every value is recomputed here against an independent reference.

#include "neb_oracle.h"
#include "oracles.h"
#include "pt2_oracle.h"
#include "qew/active_space.h"
#include "qew/adapt.h"
#include "qew/integrals.h"
#include "qew/measurement.h"
#include "qew/neb.h"
#include "qew/parallel.h"
#include "qew/pt2.h"
#include "qew/rdm.h"
#include "qew/rng.h"
#include "qew/workflow.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace qew;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path data_dir(QEW_DATA_DIR);

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool condition, const std::string &what) {
    if (!condition) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Fixture {
  MolecularIntegrals ints;
  QubitOperator h;
  StateVector ground;
  double energy = 0.0;
};

Fixture load_fixture(const std::string &name) {
  Fixture f;
  f.ints = read_fcidump(data_dir / (name + ".fcidump"));
  f.h = simplify(jordan_wigner(build_hamiltonian(f.ints), 2 * f.ints.n_orb));
  const auto gs = exact_ground_state(f.h, Sector{f.ints.n_elec, f.ints.ms2});
  f.ground = gs.state;
  f.energy = gs.energy;
  return f;
}

fs::path scratch(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("qew_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig species_config(const json &species, const json &extra, const std::string &name) {
  json j = {{"species", species},
            {"adapt", {{"gradient_threshold", 1e-7}}},
            {"output_dir", scratch(name).string()}};
  j.merge_patch(extra);
  auto c = parse_run_config(j, {});
  c.validate();
  return c;
}

json entry(const std::string &name, bool bundle) {
  json e = {{"fcidump", (data_dir / (name + ".fcidump")).string()}};
  if (bundle)
    e["bundle"] = (data_dir / (name + ".bundle")).string();
  return e;
}

// Least-squares slope of log(rms error) against log(shots).
double log_slope(const std::vector<double> &xs, const std::vector<double> &ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k] / n;
    my += ys[k] / n;
  }
  double num = 0, den = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    num += (xs[k] - mx) * (ys[k] - my);
    den += (xs[k] - mx) * (xs[k] - mx);
  }
  return num / den;
}

void adapt_accuracy(Outcome &out) {
  for (const char *name : {"h3p_sto3g", "h4_chain_sto3g"}) {
    const auto f = load_fixture(name);
    const auto pool = build_upccgsd_pool(f.ints.n_orb);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = adapt_vqe_loop(f.h, hf_occupation(f.ints), pool);
    const double secs = seconds_since(t0);
    const double err = std::abs(r.energy - oracle::fci_energy(f.ints));
    out.detail << " " << name << "(" << 2 * f.ints.n_orb << "q): |E-E_FCI|=" << err
               << " t=" << secs << "s";
    out.require(err <= 1e-6, std::string(name) + " energy");
    out.require(secs < 60.0, std::string(name) + " runtime");
  }
}

void energy_ordering(Outcome &out) {
  const std::vector<std::pair<std::string, bool>> fixtures = {
      {"h2_sto3g", false},  {"h3p_sto3g", false},  {"h4_sto3g", false},
      {"h4_chain_sto3g", false}, {"h4_631g_r", true}, {"h4_631g_ts", true},
      {"h4_631g_p", true}};
  for (const auto &[name, avas] : fixtures) {
    json extra = {{"pt2", {{"enabled", false}}}};
    if (avas)
      extra["active_space"] = {{"method", "avas"}};
    const auto c = species_config({{"R", entry(name, avas)}}, extra, "ordering");
    const auto s = run_species(c, "R", false);
    bool monotone = std::abs(s.energy_trace.front() - s.e_hf) <= 1e-10;
    for (std::size_t k = 1; k < s.energy_trace.size(); ++k)
      monotone = monotone && s.energy_trace[k] <= s.energy_trace[k - 1] + 1e-12;
    const bool ordered = s.e_hf >= s.e_vqe - 1e-12 && s.e_vqe >= s.e_exact - 1e-9;
    out.detail << " " << name << (ordered && monotone ? ":ok" : ":bad");
    out.require(ordered, name + " ordering");
    out.require(monotone, name + " trace");
  }
}

void measurement_scaling(Outcome &out) {
  const auto f = load_fixture("h3p_sto3g");
  const auto groups = group_pauli_terms(f.h);
  std::vector<double> xs, ys;
  for (std::int64_t shots : {1000, 10000, 100000}) {
    double sq = 0.0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
      const auto t = measure_groups(f.ground, groups, allocate_shots(groups, shots), nullptr,
                                    derive_seed(2024, "slope", static_cast<std::uint64_t>(s)));
      const double d = estimate_expectation(groups, t).value - f.energy;
      sq += d * d;
    }
    xs.push_back(std::log(static_cast<double>(shots)));
    ys.push_back(0.5 * std::log(sq / seeds));
  }
  const double slope = log_slope(xs, ys);
  out.detail << " slope=" << slope;
  out.require(std::abs(slope + 0.5) <= 0.1, "slope");
  for (const char *name : {"h3p_sto3g", "h4_chain_sto3g"}) {
    const auto g = load_fixture(name);
    const auto grouping = group_pauli_terms(g.h);
    bool qwc = is_valid_grouping(grouping, g.h);
    for (const auto &group : grouping)
      for (const auto &term : group.terms)
        for (std::size_t q = 0; q < g.h.qubit_count(); ++q)
          qwc = qwc && (term.pauli.letter(q) == PauliLetter::I ||
                        term.pauli.letter(q) == group.basis.letter(q));
    out.detail << " " << name << ":" << grouping.size() << " groups";
    out.require(qwc, std::string(name) + " QWC partition");
  }
}

void symmetry_filter(Outcome &out) {
  const auto f = load_fixture("h3p_sto3g");
  const auto groups = group_pauli_terms(f.h);
  const auto sym = parity_symmetries(3, 1, 1);
  const auto shots = allocate_shots(groups, 10000);
  NoiseSpec noise;
  noise.measurement_flip_prob = 0.02;
  int better = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto raw =
        measure_groups(f.ground, groups, shots, &noise, derive_seed(99, "pmsv", trial));
    std::vector<ShotTable> kept;
    for (std::size_t k = 0; k < raw.size(); ++k)
      kept.push_back(pmsv_filter(raw[k], groups[k], sym).table);
    const double e_raw = estimate_expectation(groups, raw).value;
    const double e_pmsv = estimate_expectation(groups, kept).value;
    better += std::abs(e_pmsv - f.energy) <= std::abs(e_raw - f.energy);
  }
  std::int64_t discarded = 0;
  const auto clean = measure_groups(f.ground, groups, shots, nullptr, 17);
  for (std::size_t k = 0; k < clean.size(); ++k)
    discarded += pmsv_filter(clean[k], groups[k], sym).discarded;
  out.detail << " filtered<=raw in " << better << "/100, noiseless discarded=" << discarded;
  out.require(better >= 95, "trials");
  out.require(discarded == 0, "noiseless discards");
}

void rdm_traces(Outcome &out) {
  double worst_trace = 0.0, worst_partial = 0.0;
  for (const char *name : {"h3p_sto3g", "h4_chain_sto3g"}) {
    const auto f = load_fixture(name);
    const int n = f.ints.n_elec;
    const auto r = rdm_from_statevector(f.ground, 2);
    worst_trace = std::max(worst_trace, std::abs(r.trace(1) - double(n)));
    worst_trace = std::max(worst_trace, std::abs(r.trace(2) - double(n * (n - 1))));
    const auto r4 = rdm_from_statevector(f.ground, std::min(4, n));
    for (int k = 2; k <= r4.max_order(); ++k) {
      const Eigen::MatrixXcd lower = contract_last_index(r4, k);
      worst_partial = std::max(
          worst_partial, (lower - double(n - k + 1) * r4.block(k - 1)).cwiseAbs().maxCoeff());
    }
  }
  out.detail << " statevector trace err=" << worst_trace << " partial trace err=" << worst_partial;
  out.require(worst_trace <= 1e-9, "statevector traces");
  out.require(worst_partial <= 1e-9, "partial trace");

  const auto f = load_fixture("h4_chain_sto3g");
  const auto plan = plan_rdm_measurement(8, 2);
  const auto tables =
      measure_groups(f.ground, plan.groups, allocate_shots(plan.groups, 100000), nullptr, 2024);
  for (int k = 1; k <= 2; ++k) {
    const double expect = k == 1 ? 4.0 : 12.0;
    const auto est = rdm_trace_estimate(plan, tables, k);
    const double dev = std::abs(est.value - expect);
    out.detail << " shots Tr" << k << "=" << est.value << " (SE " << est.standard_error << ")";
    out.require(dev <= 3.0 * est.standard_error + 1e-9, "shots trace " + std::to_string(k));
  }
}

void pt2_checks(Outcome &out) {
  struct Case {
    std::size_t n;
    int n_elec;
    OrbitalPartition part;
    std::uint64_t seed;
  };
  const std::vector<Case> cases = {
      {3, 2, {{}, {0, 1}, {2}}, 1},     {4, 4, {{0}, {1, 2}, {3}}, 2},
      {5, 4, {{0}, {1, 2}, {3, 4}}, 3}, {4, 3, {{0}, {1, 2}, {3}}, 4},
      {4, 4, {{2}, {0, 3}, {1}}, 5},    {5, 6, {{0, 1}, {2, 3}, {4}}, 7}};
  double worst = 0.0;
  for (const auto &c : cases) {
    std::mt19937_64 rng(c.seed);
    const auto full = oracle::random_integrals(rng, c.n, c.n_elec);
    const auto r = pt2_correction(oracle::active_ground_state(full, c.part), full, c.part);
    worst = std::max(worst, std::abs(r.delta_e - oracle::dense_pt2(full, c.part)));
  }
  const auto h3p = read_fcidump(data_dir / "h3p_sto3g.fcidump");
  const OrbitalPartition h3p_part{{}, {0, 1}, {2}};
  worst = std::max(worst, std::abs(pt2_correction(oracle::active_ground_state(h3p, h3p_part),
                                                  h3p, h3p_part)
                                       .delta_e -
                                   oracle::dense_pt2(h3p, h3p_part)));
  out.detail << " max |dE-oracle|=" << worst;
  out.require(worst <= 1e-8, "dense oracle");

  std::mt19937_64 rng(21);
  const auto cas = oracle::random_integrals(rng, 3, 2);
  const OrbitalPartition all{{}, {0, 1, 2}, {}};
  const double full_cas = pt2_correction(oracle::active_ground_state(cas, all), cas, all).delta_e;
  out.detail << " full CAS dE=" << full_cas;
  out.require(full_cas == 0.0, "full CAS");

  int checked = 0, violations = 0;
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    std::mt19937_64 g(seed);
    const auto full = oracle::random_integrals(g, 4, 4);
    const OrbitalPartition part{{0}, {1, 2}, {3}};
    const auto r = pt2_correction(oracle::active_ground_state(full, part), full, part);
    const bool positive = std::all_of(r.perturbers.begin(), r.perturbers.end(),
                                      [](const Pt2Perturber &p) { return p.denominator > 0.0; });
    if (positive) {
      ++checked;
      violations += r.delta_e > 0.0;
    }
  }
  out.detail << " positive-denominator cases=" << checked << " with dE>0: " << violations;
  out.require(checked >= 10 && violations == 0, "sign");
}

void avas_checks(Outcome &out) {
  double residual = 0.0, sigma_lo = 1.0, sigma_hi = 0.0;
  bool monotone = true;
  for (const char *name : {"h4_631g_r", "h4_631g_ts", "h4_631g_p", "h2o_631g"}) {
    const auto b = read_orbital_bundle(data_dir / (std::string(name) + ".bundle"));
    for (auto subset : {OrbitalSubset::occupied, OrbitalSubset::virtual_orbitals}) {
      const auto sa = projected_overlap(b, subset);
      const auto spec = avas_rotate(sa);
      const Eigen::MatrixXd res = sa * spec.vectors - spec.vectors * spec.sigma.asDiagonal();
      residual = std::max(residual, res.cwiseAbs().maxCoeff());
      sigma_lo = std::min(sigma_lo, spec.sigma.minCoeff());
      sigma_hi = std::max(sigma_hi, spec.sigma.maxCoeff());
    }
    std::size_t previous = b.n_mo() + 1;
    for (int k = 0; k < 20; ++k) {
      const auto count = avas(b, k / 19.0).active().size();
      monotone = monotone && count <= previous;
      previous = count;
    }
  }
  out.detail << " residual=" << residual << " sigma in [" << sigma_lo << "," << sigma_hi << "]"
             << " sweep " << (monotone ? "monotone" : "not monotone");
  out.require(residual < 1e-9, "residual");
  out.require(sigma_lo >= -1e-12 && sigma_hi <= 1.0 + 1e-12, "sigma range");
  out.require(monotone, "sweep");

  double worst = 0.0;
  {
    const auto ints = read_fcidump(data_dir / "h4_631g_r.fcidump");
    const auto b = read_orbital_bundle(data_dir / "h4_631g_r.bundle");
    const auto r = avas(b);
    const auto eff = active_space_integrals(ints, r.rotation, r.core, r.active());
    const auto rotated = oracle::rotate_oracle(ints, r.rotation);
    worst = std::max(worst, std::abs(oracle::fci_energy(eff) -
                                     oracle::frozen_core_fci(rotated, r.core, r.frozen_virt)));
  }
  std::mt19937_64 rng(8);
  const auto random = oracle::random_integrals(rng, 4, 4);
  const auto rot = oracle::random_orthogonal(rng, 4);
  const auto rotated = oracle::rotate_oracle(random, rot);
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < 4; ++k)
      if (k != c)
        active.push_back(k);
    const auto eff = active_space_integrals(random, rot, {c}, active);
    worst = std::max(worst,
                     std::abs(oracle::fci_energy(eff) - oracle::frozen_core_fci(rotated, {c})));
  }
  out.detail << " frozen-core vs restricted FCI=" << worst;
  out.require(worst <= 1e-9, "frozen core");
}

void neb_checks(Outcome &out) {
  const auto entry = surface_by_name(data_dir / "surfaces", "muller_brown");
  auto config = entry.neb;
  config.max_steps = 200;
  const auto t0 = std::chrono::steady_clock::now();
  const auto path = relax_path(
      interpolate_path(entry.reactant, entry.product, 10, entry.spring), *entry.surface, config);
  const double secs = seconds_since(t0);
  out.require(path.converged && path.climb_index.has_value(), "converged");
  if (!path.climb_index)
    return;
  const Eigen::VectorXd ci = path.images[*path.climb_index];
  const auto saddles = oracle::mb_saddles();
  Eigen::Vector2d nearest = saddles.front();
  for (const auto &s : saddles)
    if ((s - Eigen::Vector2d(ci)).norm() < (nearest - Eigen::Vector2d(ci)).norm())
      nearest = s;
  const double e_err =
      std::abs(path.energies[*path.climb_index] - oracle::mb_oracle(nearest[0], nearest[1]).e);
  const int negative = saddle_character(*entry.surface, ci).negative_count();
  out.detail << std::setprecision(10) << " steps=" << path.steps << " force=" << path.force_history.back()
             << " E_ci=" << path.energies[*path.climb_index] << " E_saddle="
             << oracle::mb_oracle(nearest[0], nearest[1]).e << " |diff|=" << e_err << " negative=" << negative << " t=" << secs << "s";
  out.require(path.steps <= 200 && path.force_history.back() < 1e-4, "force");
  out.require(e_err <= 1e-3, "saddle energy");
  out.require(negative == 1, "Hessian");
  out.require(secs < 10.0, "runtime");
}

std::map<std::string, std::string> tree_contents(const fs::path &root) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  return out;
}

RunConfig reaction_config(const std::string &name) {
  return species_config({{"R", entry("h4_631g_r", true)},
                         {"TS", entry("h4_631g_ts", true)},
                         {"P", entry("h4_631g_p", true)}},
                        {{"active_space", {{"method", "avas"}}},
                         {"backend", "shots"},
                         {"shots", {{"per_group", 2000}, {"rdm_per_group", 300}}}},
                        name);
}

json shared_report;

void reproducibility(Outcome &out) {
  const auto a = reaction_config("repro_1"), b = reaction_config("repro_4");
  set_thread_count(1);
  const auto ra = run_reaction(a);
  set_thread_count(4);
  const auto rb = run_reaction(b);
  set_thread_count(0);
  out.require(ra.exit_code == exit_ok && rb.exit_code == exit_ok, "runs");
  const auto ta = tree_contents(a.output_dir), tb = tree_contents(b.output_dir);
  std::size_t differing = ta.size() == tb.size() ? 0 : 1;
  for (const auto &[name, text] : ta)
    differing += !tb.count(name) || tb.at(name) != text;
  out.detail << " files=" << ta.size() << " differing=" << differing;
  out.require(!ta.empty() && differing == 0, "byte identity");
  shared_report = ra.report;
}

void report_schema(Outcome &out) {
  const auto &report = shared_report;
  out.require(!report.empty(), "report present");
  if (report.empty())
    return;
  out.require(report.at("protocol").at("batches") == 10, "10 batches");
  std::size_t s1 = 0, s2 = 0;
  for (const auto &row : report.at("table_s1")) {
    const bool sampled = row.at("method") == "VQE" || row.at("method") == "VQE+PT2";
    for (const char *key : {"epsilon_E_a", "epsilon_E_d"})
      out.require(row.contains(key) && (row.at(key).get<double>() > 0.0) == sampled,
                  std::string(key) + " for " + row.at("method").get<std::string>());
    ++s1;
  }
  for (const auto &row : report.at("table_s2")) {
    out.require(row.contains("delta_E_minus_E_SV") &&
                    std::abs(row.at("delta_E_minus_E_SV").get<double>() -
                             (row.at("E").get<double>() - row.at("E_SV").get<double>())) <= 1e-12,
                "delta row");
    ++s2;
  }
  out.detail << " table_s1 rows=" << s1 << " table_s2 rows=" << s2;
  out.require(s1 == 4 && s2 == 6, "row counts");
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome &)>>> criteria = {
      {"adapt-vqe reaches exact diagonalization (6 and 8 qubits)", adapt_accuracy},
      {"E_HF >= E_VQE >= E_FCI with a monotone trace", energy_ordering},
      {"shot error slope -0.5 and valid QWC partition", measurement_scaling},
      {"symmetry filtering under readout noise", symmetry_filter},
      {"RDM traces and partial traces", rdm_traces},
      {"PT2 against the dense reference", pt2_checks},
      {"AVAS spectrum, threshold sweep, frozen core", avas_checks},
      {"NEB climbing image on Mueller-Brown", neb_checks},
      {"byte-identical reports across thread counts", reproducibility},
      {"report carries bootstrap errors and E-E_SV", report_schema},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome out;
    try {
      criteria[k].second(out);
    } catch (const std::exception &e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    failures += !out.pass;
    std::printf("%s %2zu %s:%s\n", out.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                out.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
