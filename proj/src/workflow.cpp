/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/workflow.h"

#include "qew/fermion_operator.h"
#include "qew/integrals.h"
#include "qew/parallel.h"
#include "qew/rdm.h"
#include "qew/rng.h"
#include "qew/shot_table.h"
#include "qew/statevector.h"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <type_traits>

namespace qew {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> species_order{"R", "TS", "P"};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void check_keys(const json &j, const std::set<std::string> &allowed, const std::string &where) {
  if (!j.is_object())
    throw ConfigError(where + " must be an object");
  for (const auto &[key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

fs::path resolve(const fs::path &base, const std::string &p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string backend_name(Backend b) { return b == Backend::shots ? "shots" : "statevector"; }

Backend parse_backend(const std::string &s) {
  if (s == "statevector")
    return Backend::statevector;
  if (s == "shots")
    return Backend::shots;
  throw ConfigError("backend must be 'statevector' or 'shots', got '" + s + "'");
}

ShotAllocation parse_allocation(const std::string &s) {
  if (s == "uniform")
    return ShotAllocation::uniform;
  if (s == "weighted")
    return ShotAllocation::weighted;
  throw ConfigError("shot allocation must be 'uniform' or 'weighted', got '" + s + "'");
}

std::string allocation_name(ShotAllocation a) {
  return a == ShotAllocation::weighted ? "weighted" : "uniform";
}

bool parse_switch(const std::string &name, const std::string &v) {
  if (v == "1" || v == "on" || v == "true")
    return true;
  if (v == "0" || v == "off" || v == "false")
    return false;
  throw ConfigError(name + " must be on/off, got '" + v + "'");
}

template <class T> T parse_number(const std::string &name, const std::string &v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_floating_point_v<T>)
      out = static_cast<T>(std::stod(v, &used));
    else if constexpr (std::is_signed_v<T>)
      out = static_cast<T>(std::stoll(v, &used));
    else {
      if (!v.empty() && v[0] == '-')
        throw std::invalid_argument("negative");
      out = static_cast<T>(std::stoull(v, &used));
    }
    if (used != v.size())
      throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::logic_error &) {
    throw ConfigError(name + ": invalid number '" + v + "'");
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_json(const fs::path &path, const json &j) { write_text_file(path, j.dump(2) + "\n"); }

json manifest(const RunConfig &config, const std::string &scope, std::uint64_t seed) {
  const auto canonical = config_to_json(config).dump();
  return {{"tool", "qew"},
          {"version", "0.1.0"},
          {"scope", scope},
          {"master_seed", config.seed},
          {"seed", seed},
          {"config_hash", hex64(fnv1a(canonical))},
          {"threads", thread_count()},
          {"created_utc", utc_timestamp()}};
}

std::vector<std::size_t> range(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out(end - begin);
  std::iota(out.begin(), out.end(), begin);
  return out;
}

template <class F> auto stage(const char *name, F &&fn) {
  try {
    return fn();
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(name, e.what());
  }
}

int rdm_order_for(const RunConfig &config, int active_electrons) {
  if (config.rdm_order > 0)
    return config.rdm_order;
  if (!config.pt2)
    return 2;
  return std::clamp(active_electrons, 2, max_rdm_order);
}

double energy_of(const std::vector<MeasurementGroup> &groups, const std::vector<ShotTable> &t) {
  const auto est = estimate_expectation(groups, t);
  if (!est.valid())
    throw std::runtime_error("a resampled group has no shots");
  return est.value;
}

std::string csv_real(double v) { return format_real(v); }

} // namespace

ActiveSpacePreparation prepare_active_space(const ActiveSpaceSettings &as,
                                            const MolecularIntegrals &full,
                                            const fs::path &bundle_path) {
  const std::size_t n = full.n_orb;
  ActiveSpacePreparation out;
  if (as.method == "none") {
    out.active = full;
    out.orbital_basis = full;
    out.partition.active = range(0, n);
  } else if (as.method == "canonical") {
    const int n_core2 = full.n_elec - as.n_electrons;
    if (n_core2 < 0 || n_core2 % 2 != 0)
      throw std::invalid_argument("active electron count does not leave a closed-shell core");
    const auto n_core = static_cast<std::size_t>(n_core2 / 2);
    const auto n_act = static_cast<std::size_t>(as.n_orbitals);
    if (n_core + n_act > n)
      throw std::invalid_argument("active space exceeds the orbital count");
    out.partition = {range(0, n_core), range(n_core, n_core + n_act), range(n_core + n_act, n)};
    out.orbital_basis = full;
    const auto dim = static_cast<Eigen::Index>(n);
    out.active = active_space_integrals(full, Eigen::MatrixXd::Identity(dim, dim),
                                        out.partition.core, out.partition.active);
  } else {
    const auto bundle = read_orbital_bundle(bundle_path);
    if (bundle.n_mo() != n)
      throw std::invalid_argument("orbital bundle and FCIDUMP orbital counts differ");
    const AvasResult a =
        as.n_electrons > 0
            ? avas_for_spec(bundle, bundle.projector_coeff, {as.n_electrons, as.n_orbitals},
                            as.threshold)
            : avas(bundle, as.threshold);
    out.partition = {a.core, a.active(), a.frozen_virt};
    out.orbital_basis = active_space_integrals(full, a.rotation, {}, range(0, n));
    out.active = active_space_integrals(full, a);
    out.description["avas"] = avas_report(a);
  }
  out.partition.validate(n);
  out.description["method"] = as.method;
  out.description["core"] = out.partition.core;
  out.description["active"] = out.partition.active;
  out.description["virtual"] = out.partition.virtual_orbitals;
  out.description["n_active_electrons"] = out.active.n_elec;
  out.description["n_active_orbitals"] = out.active.n_orb;
  return out;
}

void RunConfig::validate() const {
  if (species.empty())
    throw ConfigError("no species configured");
  std::set<std::string> seen;
  for (const auto &s : species) {
    if (std::find(species_order.begin(), species_order.end(), s.tag) == species_order.end())
      throw ConfigError("species tag must be R, TS or P, got '" + s.tag + "'");
    if (!seen.insert(s.tag).second)
      throw ConfigError("species '" + s.tag + "' configured twice");
    if (!fs::exists(s.fcidump))
      throw ConfigError("species " + s.tag + ": FCIDUMP not found: " + s.fcidump.string());
    if (!s.bundle.empty() && !fs::exists(s.bundle))
      throw ConfigError("species " + s.tag + ": orbital bundle not found: " + s.bundle.string());
    if (active_space.method == "avas" && s.bundle.empty())
      throw ConfigError("species " + s.tag + ": avas needs an orbital bundle");
  }
  const auto &as = active_space;
  if (as.method != "none" && as.method != "canonical" && as.method != "avas")
    throw ConfigError("active_space.method must be none, canonical or avas");
  if (!(as.threshold >= 0.0 && as.threshold <= 1.0))
    throw ConfigError("active_space.threshold must lie in [0, 1]");
  if (as.method == "canonical" && (as.n_electrons <= 0 || as.n_orbitals <= 0))
    throw ConfigError("canonical active space needs electrons and orbitals");
  if ((as.n_electrons > 0) != (as.n_orbitals > 0))
    throw ConfigError("active_space electrons and orbitals must be given together");
  if (backend == Backend::shots) {
    if (shots.per_group <= 0 || shots.rdm_per_group <= 0)
      throw ConfigError("shots must be positive with the shots backend");
    if (shots.batches < 2)
      throw ConfigError("shots.batches must be at least 2");
  }
  if (!(shots.flip_probability >= 0.0 && shots.flip_probability < 0.5))
    throw ConfigError("shots.flip_probability must lie in [0, 0.5)");
  if (rdm_order < 0 || rdm_order > max_rdm_order)
    throw ConfigError("rdm_order must lie in [0, 4]");
  if (!(denominator_cutoff >= 0.0))
    throw ConfigError("pt2.denominator_cutoff must be non-negative");
  try {
    adapt.validate();
  } catch (const std::exception &e) {
    throw ConfigError(std::string("adapt: ") + e.what());
  }
}

const SpeciesInput &RunConfig::input(const std::string &tag) const {
  for (const auto &s : species)
    if (s.tag == tag)
      return s;
  throw ConfigError("species '" + tag + "' is not configured");
}

RunConfig parse_run_config(const json &j, const fs::path &base_dir) {
  RunConfig c;
  try {
    check_keys(j, {"name", "species", "active_space", "backend", "shots", "adapt", "pt2",
                   "rdm_order", "seed", "output_dir"},
               "config");
    c.name = j.value("name", c.name);
    if (!j.contains("species"))
      throw ConfigError("config: missing 'species'");
    check_keys(j.at("species"), {"R", "TS", "P"}, "species");
    for (const auto &tag : species_order) {
      if (!j.at("species").contains(tag))
        continue;
      const auto &s = j.at("species").at(tag);
      check_keys(s, {"fcidump", "bundle"}, "species " + tag);
      SpeciesInput in;
      in.tag = tag;
      in.fcidump = resolve(base_dir, s.at("fcidump").get<std::string>());
      if (s.contains("bundle"))
        in.bundle = resolve(base_dir, s.at("bundle").get<std::string>());
      c.species.push_back(in);
    }
    if (j.contains("active_space")) {
      const auto &a = j.at("active_space");
      check_keys(a, {"method", "threshold", "electrons", "orbitals"}, "active_space");
      c.active_space.method = a.value("method", c.active_space.method);
      c.active_space.threshold = a.value("threshold", c.active_space.threshold);
      c.active_space.n_electrons = a.value("electrons", 0);
      c.active_space.n_orbitals = a.value("orbitals", 0);
    }
    if (j.contains("backend"))
      c.backend = parse_backend(j.at("backend").get<std::string>());
    if (j.contains("shots")) {
      const auto &s = j.at("shots");
      check_keys(s, {"per_group", "rdm_per_group", "batches", "allocation", "pmsv",
                     "flip_probability"},
                 "shots");
      c.shots.per_group = s.value("per_group", c.shots.per_group);
      c.shots.rdm_per_group = s.value("rdm_per_group", c.shots.per_group);
      c.shots.batches = s.value("batches", c.shots.batches);
      if (s.contains("allocation"))
        c.shots.allocation = parse_allocation(s.at("allocation").get<std::string>());
      c.shots.pmsv = s.value("pmsv", c.shots.pmsv);
      c.shots.flip_probability = s.value("flip_probability", c.shots.flip_probability);
    }
    if (j.contains("adapt")) {
      const auto &a = j.at("adapt");
      check_keys(a, {"gradient_threshold", "max_operators", "optimizer_tolerance",
                     "max_optimizer_iterations"},
                 "adapt");
      c.adapt.gradient_threshold = a.value("gradient_threshold", c.adapt.gradient_threshold);
      c.adapt.max_operators = a.value("max_operators", c.adapt.max_operators);
      c.adapt.optimizer_tolerance = a.value("optimizer_tolerance", c.adapt.optimizer_tolerance);
      c.adapt.max_optimizer_iterations =
          a.value("max_optimizer_iterations", c.adapt.max_optimizer_iterations);
    }
    if (j.contains("pt2")) {
      const auto &p = j.at("pt2");
      check_keys(p, {"enabled", "denominator_cutoff"}, "pt2");
      c.pt2 = p.value("enabled", c.pt2);
      c.denominator_cutoff = p.value("denominator_cutoff", c.denominator_cutoff);
    }
    c.rdm_order = j.value("rdm_order", c.rdm_order);
    c.seed = j.value("seed", c.seed);
    c.output_dir = resolve(base_dir, j.value("output_dir", c.output_dir.string()));
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path &path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception &e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  } catch (const std::exception &e) {
    throw ConfigError(e.what());
  }
  auto c = parse_run_config(j, path.parent_path());
  apply_env_overrides(c);
  c.validate();
  return c;
}

void apply_env_overrides(RunConfig &c, const EnvLookup &lookup) {
  if (auto v = lookup("QEW_BACKEND"))
    c.backend = parse_backend(*v);
  if (auto v = lookup("QEW_SHOTS"))
    c.shots.per_group = parse_number<std::int64_t>("QEW_SHOTS", *v);
  if (auto v = lookup("QEW_RDM_SHOTS"))
    c.shots.rdm_per_group = parse_number<std::int64_t>("QEW_RDM_SHOTS", *v);
  if (auto v = lookup("QEW_BATCHES"))
    c.shots.batches = parse_number<std::size_t>("QEW_BATCHES", *v);
  if (auto v = lookup("QEW_SEED"))
    c.seed = parse_number<std::uint64_t>("QEW_SEED", *v);
  if (auto v = lookup("QEW_PT2"))
    c.pt2 = parse_switch("QEW_PT2", *v);
  if (auto v = lookup("QEW_FLIP"))
    c.shots.flip_probability = parse_number<double>("QEW_FLIP", *v);
  if (auto v = lookup("QEW_THRESHOLD"))
    c.active_space.threshold = parse_number<double>("QEW_THRESHOLD", *v);
  if (auto v = lookup("QEW_OUTPUT_DIR"))
    c.output_dir = *v;
}

void apply_env_overrides(RunConfig &config) {
  apply_env_overrides(config, [](const std::string &name) -> std::optional<std::string> {
    if (const char *v = std::getenv(name.c_str()))
      return std::string(v);
    return std::nullopt;
  });
}

json config_to_json(const RunConfig &c) {
  json species = json::object();
  for (const auto &s : c.species) {
    species[s.tag]["fcidump"] = s.fcidump.string();
    if (!s.bundle.empty())
      species[s.tag]["bundle"] = s.bundle.string();
  }
  return {{"name", c.name},
          {"species", species},
          {"active_space",
           {{"method", c.active_space.method},
            {"threshold", c.active_space.threshold},
            {"electrons", c.active_space.n_electrons},
            {"orbitals", c.active_space.n_orbitals}}},
          {"backend", backend_name(c.backend)},
          {"shots",
           {{"per_group", c.shots.per_group},
            {"rdm_per_group", c.shots.rdm_per_group},
            {"batches", c.shots.batches},
            {"allocation", allocation_name(c.shots.allocation)},
            {"pmsv", c.shots.pmsv},
            {"flip_probability", c.shots.flip_probability}}},
          {"adapt",
           {{"gradient_threshold", c.adapt.gradient_threshold},
            {"max_operators", c.adapt.max_operators},
            {"optimizer_tolerance", c.adapt.optimizer_tolerance},
            {"max_optimizer_iterations", c.adapt.max_optimizer_iterations}}},
          {"pt2", {{"enabled", c.pt2}, {"denominator_cutoff", c.denominator_cutoff}}},
          {"rdm_order", c.rdm_order},
          {"seed", c.seed},
          {"output_dir", c.output_dir.string()}};
}

json SpeciesResult::to_json() const {
  return {{"tag", tag},
          {"qubits", qubits},
          {"active_electrons", active_electrons},
          {"e_hf", e_hf},
          {"e_exact", e_exact},
          {"e_vqe", e_vqe},
          {"e_sv", e_sv},
          {"e_vqe_pt2", e_vqe_pt2},
          {"e_sv_pt2", e_sv_pt2},
          {"pt2_delta", pt2_delta},
          {"standard_error", standard_error},
          {"bootstrap_stddev", bootstrap_stddev},
          {"ansatz", {{"operators", operator_labels}, {"parameters", ansatz.parameters}}},
          {"energy_trace", energy_trace},
          {"shots", {{"total", shots_total}, {"kept", shots_kept}}},
          {"warnings", warnings}};
}

SpeciesResult run_species(const RunConfig &config, const std::string &tag, bool write_outputs) {
  const auto &in = config.input(tag);
  const fs::path dir = config.output_dir / tag;
  const std::uint64_t seed = derive_seed(config.seed, tag);
  const bool shots = config.backend == Backend::shots;
  if (write_outputs)
    stage("output", [&] { return fs::create_directories(dir); });

  SpeciesResult r;
  r.tag = tag;
  const auto full = stage("input", [&] { return read_fcidump(in.fcidump); });
  const auto space = stage("active_space", [&] { return prepare_active_space(config.active_space, full, in.bundle); });
  const auto &act = space.active;
  r.qubits = 2 * act.n_orb;
  r.active_electrons = act.n_elec;
  if (r.qubits > default_qubit_cap)
    throw StageError("active_space", std::to_string(r.qubits) + " qubits exceed the cap of " +
                                         std::to_string(default_qubit_cap));

  const auto h = stage("hamiltonian", [&] { return jordan_wigner(build_hamiltonian(act), r.qubits); });
  const auto reference = stage("hamiltonian", [&] { return hf_occupation(act); });
  r.e_hf = stage("hamiltonian", [&] { return hf_energy(act, reference); });
  r.e_exact = stage("hamiltonian", [&] {
    return exact_ground_state(h, Sector{act.n_elec, act.ms2}).energy;
  });

  const auto pool = build_upccgsd_pool(act.n_orb);
  const auto adapt = stage("adapt", [&] { return adapt_vqe_loop(h, reference, pool, config.adapt); });
  r.ansatz = adapt.ansatz;
  for (auto k : adapt.ansatz.operators)
    r.operator_labels.push_back(pool[k].label);
  r.energy_trace = adapt.energy_trace();
  const auto state = prepare_state(adapt.ansatz, pool);
  r.e_sv = HamiltonianAction(h).energy(state);
  if (r.e_sv > r.e_hf + 1e-9)
    throw StageError("adapt", "statevector energy " + format_real(r.e_sv) +
                                  " is above the reference energy " + format_real(r.e_hf));
  for (std::size_t i = 1; i < r.energy_trace.size(); ++i)
    if (r.energy_trace[i] > r.energy_trace[i - 1] + 1e-10)
      r.warnings.push_back("energy trace increases at iteration " + std::to_string(i));
  if (adapt.stop_reason != AdaptStop::gradient_converged)
    r.warnings.push_back("adapt stopped: " + to_string(adapt.stop_reason));
  r.e_vqe = r.e_sv;

  const auto symmetry = parity_symmetries(act.n_orb, act.n_alpha(), act.n_beta());
  NoiseSpec noise;
  noise.depolarizing_prob_per_exponential = 0.0;
  noise.measurement_flip_prob = config.shots.flip_probability;
  noise.seed = derive_seed(seed, "noise");
  const NoiseSpec *noise_ptr = config.shots.flip_probability > 0.0 ? &noise : nullptr;
  std::vector<ShotTable> raw;
  if (shots) {
    stage("measurement", [&] {
      r.groups = group_pauli_terms(h);
      const auto alloc = allocate_shots(r.groups, config.shots.per_group, config.shots.allocation);
      raw = measure_groups(state, r.groups, alloc, noise_ptr, derive_seed(seed, "energy"));
      r.tables.clear();
      for (std::size_t g = 0; g < raw.size(); ++g) {
        r.shots_total += raw[g].shots_total;
        r.tables.push_back(config.shots.pmsv ? pmsv_filter(raw[g], r.groups[g], symmetry).table
                                             : raw[g]);
        r.shots_kept += r.tables.back().shots_kept;
      }
      const auto est = estimate_expectation(r.groups, r.tables);
      if (!est.valid())
        throw std::runtime_error(std::to_string(est.invalid_groups.size()) +
                                 " groups have no surviving shots");
      r.e_vqe = est.value;
      r.standard_error = est.standard_error;
      const auto boot = bootstrap_statistics(
          {r.tables}, config.shots.batches,
          [&](const std::vector<ShotData> &d) { return energy_of(r.groups, d[0]); },
          derive_seed(seed, "bootstrap"));
      r.bootstrap_stddev = boot.stddev;
      return 0;
    });
  }

  const int order = rdm_order_for(config, act.n_elec);
  const auto rdms = stage("rdm", [&] {
    if (!shots)
      return rdm_from_statevector(state, order);
    const auto plan = plan_rdm_measurement(r.qubits, order);
    auto out = rdm_from_shots(plan, state, config.shots.rdm_per_group,
                              config.shots.pmsv ? &symmetry : nullptr, noise_ptr,
                              derive_seed(seed, "rdm"));
    if (out.invalid_elements > 0)
      r.warnings.push_back(std::to_string(out.invalid_elements) +
                           " RDM elements had no surviving shots");
    return out;
  });

  Pt2Result pt2_sv, pt2_used;
  if (config.pt2) {
    stage("pt2", [&] {
      Pt2Options opts;
      opts.denominator_cutoff = config.denominator_cutoff;
      pt2_sv = pt2_correction(state, space.orbital_basis, space.partition, opts);
      if (shots) {
        if (rdms.max_order() < act.n_elec)
          throw std::runtime_error("the shots path needs RDMs of order " +
                                   std::to_string(act.n_elec) + " (at most 4)");
        pt2_used = pt2_from_measured_rdms(rdms, space.orbital_basis, space.partition, opts);
      } else {
        pt2_used = pt2_sv;
      }
      for (const auto &w : pt2_used.warnings)
        r.warnings.push_back("pt2: " + w);
      return 0;
    });
  }
  r.pt2_delta = pt2_used.delta_e;
  r.e_vqe_pt2 = total_energy(r.e_vqe, pt2_used);
  r.e_sv_pt2 = total_energy(r.e_sv, pt2_sv);

  if (write_outputs) {
    stage("output", [&] {
      write_text_file(dir / "effective.fcidump", write_fcidump(act));
      if (config.active_space.method == "avas")
        write_text_file(dir / "orbital_basis.fcidump", write_fcidump(space.orbital_basis));
      write_json(dir / "active_space.json", space.description);
      write_json(dir / "ansatz.json", ansatz_to_json(adapt.ansatz, pool));
      write_text_file(dir / "energy_trace.csv", energy_trace_csv(adapt, pool));
      if (shots)
        write_text_file(dir / "shots.csv", write_shot_csv(raw));
      write_text_file(dir / "rdm.txt", write_rdm_text(rdms));
      if (config.pt2)
        write_json(dir / "pt2.json", pt2_report(pt2_used));
      write_json(dir / "result.json", r.to_json());
      write_json(dir / "manifest.json", manifest(config, "species " + tag, seed));
      return 0;
    });
  }
  return r;
}

std::vector<DeltaRow> compare_to_statevector(const std::vector<SpeciesResult> &shots,
                                             const std::vector<SpeciesResult> &statevector) {
  if (shots.size() != statevector.size())
    throw std::invalid_argument("runs cover different species");
  std::vector<DeltaRow> out;
  for (std::size_t i = 0; i < shots.size(); ++i) {
    const auto &a = shots[i], &b = statevector[i];
    if (a.tag != b.tag || a.qubits != b.qubits || a.ansatz.operators != b.ansatz.operators ||
        a.ansatz.reference != b.ansatz.reference)
      throw std::invalid_argument("species " + a.tag + ": ansatz differs between runs");
    out.push_back({a.tag, "VQE", a.e_vqe, b.e_vqe, a.e_vqe - b.e_vqe});
    out.push_back({a.tag, "VQE+PT2", a.e_vqe_pt2, b.e_vqe_pt2, a.e_vqe_pt2 - b.e_vqe_pt2});
  }
  return out;
}

ReactionOutcome run_reaction(const RunConfig &config, bool write_outputs) {
  config.validate();
  for (const auto &tag : species_order)
    config.input(tag);

  ReactionOutcome out;
  std::vector<std::optional<SpeciesResult>> results(species_order.size());
  std::vector<std::string> errors(species_order.size());
  parallel_for(species_order.size(), [&](std::size_t i) {
    try {
      results[i] = run_species(config, species_order[i], write_outputs);
    } catch (const std::exception &e) {
      errors[i] = e.what();
      if (write_outputs) {
        try {
          fs::create_directories(config.output_dir / species_order[i]);
          const auto *se = dynamic_cast<const StageError *>(&e);
          write_json(config.output_dir / species_order[i] / "error.json",
                     {{"species", species_order[i]},
                      {"stage", se ? se->stage() : std::string("unknown")},
                      {"message", e.what()}});
        } catch (...) {
        }
      }
    }
  });
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i])
      out.species.push_back(*results[i]);
    else
      out.failures.emplace_back(species_order[i], errors[i]);
  }
  if (!out.failures.empty()) {
    out.exit_code = exit_stage_failure;
    return out;
  }

  const auto &R = out.species[0], &TS = out.species[1], &P = out.species[2];
  const bool shots = config.backend == Backend::shots;

  double eps_a = 0.0, eps_d = 0.0;
  if (shots) {
    const std::vector<ShotData> data{R.tables, TS.tables, P.tables};
    const std::uint64_t seed = derive_seed(config.seed, "reaction bootstrap");
    auto energies = [&](const std::vector<ShotData> &d) {
      return std::array<double, 3>{energy_of(R.groups, d[0]), energy_of(TS.groups, d[1]),
                                   energy_of(P.groups, d[2])};
    };
    eps_a = bootstrap_statistics(
                data, config.shots.batches,
                [&](const std::vector<ShotData> &d) {
                  const auto e = energies(d);
                  return e[1] - e[0];
                },
                seed)
                .stddev;
    eps_d = bootstrap_statistics(
                data, config.shots.batches,
                [&](const std::vector<ShotData> &d) {
                  const auto e = energies(d);
                  return e[2] - e[0];
                },
                seed)
                .stddev;
  }

  struct Level {
    std::string method;
    std::function<double(const SpeciesResult &)> energy;
    bool sampled;
  };
  const std::vector<Level> levels{
      {"HF", [](const SpeciesResult &s) { return s.e_hf; }, false},
      {"VQE", [](const SpeciesResult &s) { return s.e_vqe; }, true},
      {"VQE+PT2", [](const SpeciesResult &s) { return s.e_vqe_pt2; }, true},
      {"exact", [](const SpeciesResult &s) { return s.e_exact; }, false}};

  json table_s1 = json::array();
  std::string s1_csv = "method,E_a,E_d,epsilon_E_a,epsilon_E_d,E_a_ev,E_d_ev,epsilon_E_a_ev,"
                       "epsilon_E_d_ev\n";
  json profile = json::array();
  std::string profile_csv = "method,species,energy,relative_ev\n";
  for (const auto &lv : levels) {
    const auto d = energy_differences(lv.energy(R), lv.energy(TS), lv.energy(P));
    const double ea = lv.sampled ? eps_a : 0.0, ed = lv.sampled ? eps_d : 0.0;
    table_s1.push_back({{"method", lv.method},
                        {"E_a", d.activation},
                        {"E_d", d.reaction},
                        {"epsilon_E_a", ea},
                        {"epsilon_E_d", ed},
                        {"E_a_ev", d.activation_ev()},
                        {"E_d_ev", d.reaction_ev()},
                        {"epsilon_E_a_ev", ea * hartree_to_ev},
                        {"epsilon_E_d_ev", ed * hartree_to_ev}});
    s1_csv += lv.method + "," + csv_real(d.activation) + "," + csv_real(d.reaction) + "," +
              csv_real(ea) + "," + csv_real(ed) + "," + csv_real(d.activation_ev()) + "," +
              csv_real(d.reaction_ev()) + "," + csv_real(ea * hartree_to_ev) + "," +
              csv_real(ed * hartree_to_ev) + "\n";
    for (const auto *s : {&R, &TS, &P}) {
      const double rel = (lv.energy(*s) - lv.energy(R)) * hartree_to_ev;
      profile.push_back({{"method", lv.method},
                         {"species", s->tag},
                         {"energy", lv.energy(*s)},
                         {"relative_ev", rel}});
      profile_csv += lv.method + "," + s->tag + "," + csv_real(lv.energy(*s)) + "," +
                     csv_real(rel) + "\n";
    }
  }

  std::vector<SpeciesResult> reference = out.species;
  for (auto &s : reference) {
    s.e_vqe = s.e_sv;
    s.e_vqe_pt2 = s.e_sv_pt2;
  }
  const auto deltas = compare_to_statevector(out.species, reference);
  json table_s2 = json::array();
  std::string s2_csv = "species,method,E,E_SV,delta_E_minus_E_SV,epsilon\n";
  for (const auto &row : deltas) {
    double eps = 0.0;
    for (const auto &s : out.species)
      if (s.tag == row.tag)
        eps = s.bootstrap_stddev;
    table_s2.push_back({{"species", row.tag},
                        {"method", row.method},
                        {"E", row.energy},
                        {"E_SV", row.statevector},
                        {"delta_E_minus_E_SV", row.delta},
                        {"epsilon", eps}});
    s2_csv += row.tag + "," + row.method + "," + csv_real(row.energy) + "," +
              csv_real(row.statevector) + "," + csv_real(row.delta) + "," + csv_real(eps) + "\n";
  }

  json species = json::object();
  for (const auto &s : out.species)
    species[s.tag] = s.to_json();
  out.report = {{"name", config.name},
                {"units", "hartree"},
                {"hartree_to_ev", hartree_to_ev},
                {"protocol",
                 {{"backend", backend_name(config.backend)},
                  {"batches", shots ? json(config.shots.batches) : json(nullptr)},
                  {"shots_per_group", shots ? json(config.shots.per_group) : json(nullptr)},
                  {"pmsv", shots && config.shots.pmsv},
                  {"flip_probability", config.shots.flip_probability},
                  {"epsilon", shots ? "population standard deviation over bootstrap batches; "
                                      "each batch resamples every group table with replacement"
                                    : "zero: exact statevector energies"}}},
                {"table_s1", table_s1},
                {"table_s2", table_s2},
                {"profile", profile},
                {"species", species}};

  if (write_outputs) {
    write_json(config.output_dir / "reaction.json", out.report);
    write_text_file(config.output_dir / "table_s1.csv", s1_csv);
    write_text_file(config.output_dir / "table_s2.csv", s2_csv);
    write_text_file(config.output_dir / "profile.csv", profile_csv);
    write_json(config.output_dir / "manifest.json", manifest(config, "reaction", config.seed));
  }
  return out;
}

std::string format_reaction_tables(const json &report) {
  std::ostringstream s;
  s << std::fixed;
  s << "Activation and reaction energies (eV)\n";
  s << std::left << std::setw(10) << "method" << std::right << std::setw(12) << "E_a"
    << std::setw(12) << "eps(E_a)" << std::setw(12) << "E_d" << std::setw(12) << "eps(E_d)"
    << "\n";
  for (const auto &row : report.at("table_s1"))
    s << std::left << std::setw(10) << row.at("method").get<std::string>() << std::right
      << std::setprecision(4) << std::setw(12) << row.at("E_a_ev").get<double>() << std::setw(12)
      << row.at("epsilon_E_a_ev").get<double>() << std::setw(12)
      << row.at("E_d_ev").get<double>() << std::setw(12)
      << row.at("epsilon_E_d_ev").get<double>() << "\n";
  s << "\nDistance to statevector (Hartree)\n";
  s << std::left << std::setw(8) << "species" << std::setw(10) << "method" << std::right
    << std::setw(16) << "E" << std::setw(16) << "E_SV" << std::setw(14) << "delta"
    << std::setw(12) << "eps" << "\n";
  for (const auto &row : report.at("table_s2"))
    s << std::left << std::setw(8) << row.at("species").get<std::string>() << std::setw(10)
      << row.at("method").get<std::string>() << std::right << std::setprecision(8)
      << std::setw(16) << row.at("E").get<double>() << std::setw(16)
      << row.at("E_SV").get<double>() << std::setprecision(6) << std::setw(14)
      << row.at("delta_E_minus_E_SV").get<double>() << std::setw(12)
      << row.at("epsilon").get<double>() << "\n";
  return s.str();
}

} // namespace qew
