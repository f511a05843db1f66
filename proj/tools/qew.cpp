/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/fermion_operator.h"
#include "qew/integrals.h"
#include "qew/neb.h"
#include "qew/parallel.h"
#include "qew/rdm.h"
#include "qew/rng.h"
#include "qew/shot_table.h"
#include "qew/statevector.h"
#include "qew/workflow.h"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace qew;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path &path, const json &j) { write_text_file(path, j.dump(2) + "\n"); }

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t> &a,
                                    const std::vector<std::size_t> &b) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (std::find(a.begin(), a.end(), i) == a.end() && std::find(b.begin(), b.end(), i) == b.end())
      out.push_back(i);
  return out;
}

struct ActiveSpaceArgs {
  std::string fcidump, bundle, out = ".";
  ActiveSpaceSettings settings{"avas"};
};

int cmd_active_space(const ActiveSpaceArgs &a) {
  const auto full = read_fcidump(a.fcidump);
  const auto prep = prepare_active_space(a.settings, full, a.bundle);
  fs::create_directories(a.out);
  write_text_file(fs::path(a.out) / "effective.fcidump", write_fcidump(prep.active));
  write_text_file(fs::path(a.out) / "orbital_basis.fcidump", write_fcidump(prep.orbital_basis));
  write_json(fs::path(a.out) / "active_space.json", prep.description);
  std::cout << "active space (" << prep.active.n_elec << "e," << prep.active.n_orb << "o)\n";
  return exit_ok;
}

struct VqeArgs {
  std::string fcidump, out = ".";
  AdaptConfig adapt;
};

int cmd_vqe(const VqeArgs &a) {
  const auto ints = read_fcidump(a.fcidump);
  const std::size_t n = 2 * ints.n_orb;
  if (n > default_qubit_cap)
    throw ConfigError(std::to_string(n) + " qubits exceed the cap; select an active space first");
  const auto h = jordan_wigner(build_hamiltonian(ints), n);
  const auto ref = hf_occupation(ints);
  const auto pool = build_upccgsd_pool(ints.n_orb);
  const auto result = adapt_vqe_loop(h, ref, pool, a.adapt);
  const double exact = exact_ground_state(h, Sector{ints.n_elec, ints.ms2}).energy;
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "ansatz.json", ansatz_to_json(result.ansatz, pool));
  write_text_file(fs::path(a.out) / "energy_trace.csv", energy_trace_csv(result, pool));
  write_json(fs::path(a.out) / "vqe.json", {{"e_hf", hf_energy(ints, ref)},
                                            {"e_vqe", result.energy},
                                            {"e_exact", exact},
                                            {"operators", result.ansatz.operators.size()},
                                            {"stop_reason", to_string(result.stop_reason)}});
  std::cout << "E_HF " << format_real(hf_energy(ints, ref)) << "\nE_VQE "
            << format_real(result.energy) << "\nE_exact " << format_real(exact) << "\n";
  return exit_ok;
}

struct MeasureArgs {
  std::string fcidump, ansatz, out = ".";
  std::int64_t shots = 10000;
  std::size_t batches = 10;
  std::uint64_t seed = 2024;
  double flip = 0.0;
  bool no_pmsv = false;
};

int cmd_measure(const MeasureArgs &a) {
  const auto ints = read_fcidump(a.fcidump);
  const std::size_t n = 2 * ints.n_orb;
  const auto h = jordan_wigner(build_hamiltonian(ints), n);
  const auto pool = build_upccgsd_pool(ints.n_orb);
  const auto ansatz = ansatz_from_json(json::parse(read_text_file(a.ansatz)), pool);
  const auto state = prepare_state(ansatz, pool);
  const auto groups = group_pauli_terms(h);
  NoiseSpec noise;
  noise.depolarizing_prob_per_exponential = 0.0;
  noise.measurement_flip_prob = a.flip;
  noise.seed = derive_seed(a.seed, "noise");
  const auto raw = measure_groups(state, groups, allocate_shots(groups, a.shots),
                                  a.flip > 0.0 ? &noise : nullptr, derive_seed(a.seed, "energy"));
  const auto symmetry = parity_symmetries(ints.n_orb, ints.n_alpha(), ints.n_beta());
  std::vector<ShotTable> kept;
  std::int64_t discarded = 0;
  for (std::size_t g = 0; g < raw.size(); ++g) {
    if (a.no_pmsv) {
      kept.push_back(raw[g]);
      continue;
    }
    auto f = pmsv_filter(raw[g], groups[g], symmetry);
    discarded += f.discarded;
    kept.push_back(std::move(f.table));
  }
  const auto est = estimate_expectation(groups, kept);
  if (!est.valid())
    throw StageError("measurement", "groups without surviving shots");
  const auto boot = bootstrap_statistics(
      {kept}, a.batches,
      [&](const std::vector<ShotData> &d) { return estimate_expectation(groups, d[0]).value; },
      derive_seed(a.seed, "bootstrap"));
  const double e_sv = expectation(state, h);
  fs::create_directories(a.out);
  write_text_file(fs::path(a.out) / "shots.csv", write_shot_csv(raw));
  write_json(fs::path(a.out) / "measure.json", {{"groups", groups.size()},
                                                {"energy", est.value},
                                                {"standard_error", est.standard_error},
                                                {"bootstrap_stddev", boot.stddev},
                                                {"e_sv", e_sv},
                                                {"delta", est.value - e_sv},
                                                {"discarded", discarded}});
  std::cout << "groups " << groups.size() << "\nE " << format_real(est.value) << " +- "
            << format_real(est.standard_error) << "\nE_SV " << format_real(e_sv) << "\n";
  return exit_ok;
}

struct Pt2Args {
  std::string fcidump, ansatz, rdm, out = ".";
  std::vector<std::size_t> core, active;
  double cutoff = default_denominator_cutoff;
};

int cmd_pt2(const Pt2Args &a) {
  const auto full = read_fcidump(a.fcidump);
  OrbitalPartition part{a.core, a.active, complement(full.n_orb, a.core, a.active)};
  part.validate(full.n_orb);
  const auto act = partition_active_integrals(full, part);
  Pt2Options opts;
  opts.denominator_cutoff = a.cutoff;
  Pt2Result r;
  double e_ref = 0.0;
  if (!a.ansatz.empty()) {
    const auto pool = build_upccgsd_pool(act.n_orb);
    const auto state =
        prepare_state(ansatz_from_json(json::parse(read_text_file(a.ansatz)), pool), pool);
    e_ref = expectation(state, jordan_wigner(build_hamiltonian(act), 2 * act.n_orb));
    r = pt2_correction(state, full, part, opts);
  } else if (!a.rdm.empty()) {
    const auto rdms = parse_rdm_text(read_text_file(a.rdm), 2 * act.n_orb);
    r = pt2_correction(rdms, full, part, default_rdm_validation_tolerance, opts);
    e_ref = r.reference_active_energy + act.e_core;
  } else {
    throw ConfigError("pt2 needs --ansatz or --rdm");
  }
  fs::create_directories(a.out);
  auto report = pt2_report(r);
  report["reference_energy"] = e_ref;
  report["total_energy"] = total_energy(e_ref, r);
  write_json(fs::path(a.out) / "pt2.json", report);
  std::cout << "delta_E " << format_real(r.delta_e) << "\nE_total "
            << format_real(total_energy(e_ref, r)) << "\n";
  return exit_ok;
}

struct NebArgs {
  std::string surface = "muller_brown", surfaces_dir, from, out = ".";
  std::size_t images = 10;
  std::optional<std::size_t> max_steps;
  std::optional<double> spring;
  bool no_climb = false;
  std::vector<std::size_t> window;
};

int cmd_neb(const NebArgs &a) {
  const fs::path candidate(a.surface);
  const auto entry = fs::exists(candidate) && candidate.extension() == ".json"
                         ? load_surface(candidate)
                         : surface_by_name(a.surfaces_dir, a.surface);
  auto config = entry.neb;
  if (a.max_steps)
    config.max_steps = *a.max_steps;
  config.climbing = !a.no_climb;
  const double spring = a.spring.value_or(entry.spring);
  NebPath start;
  if (!a.window.empty()) {
    if (a.from.empty())
      throw ConfigError("--window needs --from <path.csv>");
    start = window_path(parse_path_csv(read_text_file(a.from)), a.window[0], a.window[1],
                        a.images);
    start.spring = spring;
  } else {
    start = interpolate_path(entry.reactant, entry.product, a.images, spring);
  }
  const auto path = relax_path(start, *entry.surface, config);
  const auto barrier = extract_barrier(path);
  fs::create_directories(a.out);
  write_text_file(fs::path(a.out) / "path.csv", write_path_csv(path));
  auto report = neb_report(path, barrier, config);
  report["surface"] = entry.name;
  if (path.climb_index) {
    const auto sc = saddle_character(*entry.surface, path.images[*path.climb_index]);
    report["saddle"] = {{"gradient_norm", sc.gradient_norm},
                        {"negative_eigenvalues", sc.negative_count()}};
  }
  write_json(fs::path(a.out) / "neb.json", report);
  std::cout << "steps " << path.steps << (path.converged ? " converged" : " not converged")
            << "\nE_a " << format_real(barrier.activation) << "\nE_d "
            << format_real(barrier.reaction) << "\n";
  return path.converged ? exit_ok : exit_stage_failure;
}

int cmd_reaction(const std::string &config_path) {
  const auto config = load_run_config(config_path);
  const auto outcome = run_reaction(config);
  for (const auto &[tag, message] : outcome.failures)
    std::cerr << "species " << tag << " failed: " << message << "\n";
  if (!outcome.report.empty())
    std::cout << format_reaction_tables(outcome.report);
  return outcome.exit_code;
}

int cmd_report(const std::string &dir) {
  const auto path = fs::path(dir) / "reaction.json";
  if (!fs::exists(path))
    throw ConfigError("no reaction.json in " + dir);
  std::cout << format_reaction_tables(json::parse(read_text_file(path)));
  return exit_ok;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"qew: quantum-embedding chemistry workbench"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (default QEW_THREADS or 1)");

  ActiveSpaceArgs as;
  auto *c_as = app.add_subcommand("active-space", "select an active space and fold the core");
  c_as->add_option("--fcidump", as.fcidump)->required()->check(CLI::ExistingFile);
  c_as->add_option("--bundle", as.bundle)->check(CLI::ExistingFile);
  c_as->add_option("--method", as.settings.method)
      ->check(CLI::IsMember({"none", "canonical", "avas"}));
  c_as->add_option("--threshold", as.settings.threshold);
  c_as->add_option("--electrons", as.settings.n_electrons);
  c_as->add_option("--orbitals", as.settings.n_orbitals);
  c_as->add_option("--out", as.out);

  VqeArgs vqe;
  auto *c_vqe = app.add_subcommand("vqe", "ADAPT-VQE on an FCIDUMP");
  c_vqe->add_option("--fcidump", vqe.fcidump)->required()->check(CLI::ExistingFile);
  c_vqe->add_option("--gradient-threshold", vqe.adapt.gradient_threshold);
  c_vqe->add_option("--max-operators", vqe.adapt.max_operators);
  c_vqe->add_option("--optimizer-tolerance", vqe.adapt.optimizer_tolerance);
  c_vqe->add_option("--out", vqe.out);

  MeasureArgs ms;
  auto *c_ms = app.add_subcommand("measure", "grouped shot estimation of an ansatz energy");
  c_ms->add_option("--fcidump", ms.fcidump)->required()->check(CLI::ExistingFile);
  c_ms->add_option("--ansatz", ms.ansatz)->required()->check(CLI::ExistingFile);
  c_ms->add_option("--shots", ms.shots, "shots per group")->check(CLI::PositiveNumber);
  c_ms->add_option("--batches", ms.batches)->check(CLI::Range(2, 1000000));
  c_ms->add_option("--seed", ms.seed);
  c_ms->add_option("--flip", ms.flip, "readout flip probability")->check(CLI::Range(0.0, 0.49));
  c_ms->add_flag("--no-pmsv", ms.no_pmsv);
  c_ms->add_option("--out", ms.out);

  Pt2Args pt;
  auto *c_pt = app.add_subcommand("pt2", "second-order correction on an active-space state");
  c_pt->add_option("--fcidump", pt.fcidump, "full integrals in the final orbital basis")
      ->required()
      ->check(CLI::ExistingFile);
  c_pt->add_option("--core", pt.core)->delimiter(',');
  c_pt->add_option("--active", pt.active)->delimiter(',')->required();
  auto *o_ansatz = c_pt->add_option("--ansatz", pt.ansatz)->check(CLI::ExistingFile);
  c_pt->add_option("--rdm", pt.rdm)->check(CLI::ExistingFile)->excludes(o_ansatz);
  c_pt->add_option("--denominator-cutoff", pt.cutoff);
  c_pt->add_option("--out", pt.out);

  NebArgs nb;
  nb.surfaces_dir = (fs::path(QEW_DATA_DIR) / "surfaces").string();
  auto *c_nb = app.add_subcommand("neb", "climbing-image NEB on a model surface");
  c_nb->add_option("--surface", nb.surface, "surface name or JSON file");
  c_nb->add_option("--surfaces-dir", nb.surfaces_dir);
  c_nb->add_option("--images", nb.images)->check(CLI::Range(3, 1000));
  c_nb->add_option("--max-steps", nb.max_steps);
  c_nb->add_option("--spring", nb.spring);
  c_nb->add_flag("--no-climb", nb.no_climb);
  c_nb->add_option("--window", nb.window, "re-run over images START END of --from")
      ->expected(2);
  c_nb->add_option("--from", nb.from)->check(CLI::ExistingFile);
  c_nb->add_option("--out", nb.out);

  std::string config_path;
  auto *c_rx = app.add_subcommand("reaction", "full pipeline for R, TS and P");
  c_rx->add_option("--config", config_path)->required();

  std::string report_dir;
  auto *c_rp = app.add_subcommand("report", "print the tables of a finished reaction run");
  c_rp->add_option("--dir", report_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }
  if (threads > 0)
    set_thread_count(threads);

  try {
    if (*c_as)
      return cmd_active_space(as);
    if (*c_vqe)
      return cmd_vqe(vqe);
    if (*c_ms)
      return cmd_measure(ms);
    if (*c_pt)
      return cmd_pt2(pt);
    if (*c_nb)
      return cmd_neb(nb);
    if (*c_rx)
      return cmd_reaction(config_path);
    if (*c_rp)
      return cmd_report(report_dir);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::invalid_argument &e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception &e) {
    std::cerr << "failed: " << e.what() << "\n";
    return exit_stage_failure;
  }
  return exit_config_error;
}
