/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/active_space.h"
#include "qew/adapt.h"
#include "qew/measurement.h"
#include "qew/pt2.h"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qew {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_stage_failure = 3;

/// Invalid or inconsistent run configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage failed for one species (exit code 3).
class StageError : public std::runtime_error {
public:
  StageError(std::string stage, const std::string &message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

private:
  std::string stage_;
};

enum class Backend { statevector, shots };

struct SpeciesInput {
  std::string tag; // R, TS or P
  std::filesystem::path fcidump;
  std::filesystem::path bundle; // empty when absent
};

/// none: the whole FCIDUMP is active. canonical: the lowest core orbitals
/// are frozen and the next n_orbitals are active. avas: threshold selection,
/// or the n_electrons/n_orbitals highest-overlap orbitals when both are set.
struct ActiveSpaceSettings {
  std::string method = "none";
  double threshold = default_avas_threshold;
  int n_electrons = 0;
  int n_orbitals = 0;
};

struct ActiveSpacePreparation {
  MolecularIntegrals active;        // core-folded active-space integrals
  MolecularIntegrals orbital_basis; // full integrals in the final orbitals
  OrbitalPartition partition;
  nlohmann::json description;
};

/// Applies the settings to full integrals; bundle_path is read for avas.
ActiveSpacePreparation prepare_active_space(const ActiveSpaceSettings &settings,
                                            const MolecularIntegrals &full,
                                            const std::filesystem::path &bundle_path = {});

struct ShotSettings {
  std::int64_t per_group = 10000;
  std::int64_t rdm_per_group = 10000;
  std::size_t batches = 10;
  ShotAllocation allocation = ShotAllocation::uniform;
  bool pmsv = true;
  double flip_probability = 0.0; // readout bit-flip noise
};

struct RunConfig {
  std::string name = "run";
  std::vector<SpeciesInput> species;
  ActiveSpaceSettings active_space;
  Backend backend = Backend::statevector;
  ShotSettings shots;
  AdaptConfig adapt;
  bool pt2 = true;
  double denominator_cutoff = default_denominator_cutoff;
  int rdm_order = 0; // 0: 2 without PT2, else min(4, active electrons) and at least 2
  std::uint64_t seed = 2024;
  std::filesystem::path output_dir = "qew_output";

  /// Throws ConfigError on invalid settings or missing input files.
  void validate() const;
  const SpeciesInput &input(const std::string &tag) const;
};

/// Relative paths resolve against base_dir. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json &j, const std::filesystem::path &base_dir);
RunConfig load_run_config(const std::filesystem::path &path);

using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;

/// QEW_BACKEND, QEW_SHOTS, QEW_RDM_SHOTS, QEW_BATCHES, QEW_SEED, QEW_PT2
/// (on/off), QEW_FLIP, QEW_THRESHOLD, QEW_OUTPUT_DIR. Throws ConfigError.
void apply_env_overrides(RunConfig &config, const EnvLookup &lookup);
/// Reads the process environment.
void apply_env_overrides(RunConfig &config);

/// Canonical JSON form (paths as given, sorted keys).
nlohmann::json config_to_json(const RunConfig &config);

struct SpeciesResult {
  std::string tag;
  std::size_t qubits = 0;
  int active_electrons = 0;
  double e_hf = 0.0;
  double e_exact = 0.0;   // exact active-space ground state
  double e_vqe = 0.0;     // statevector energy or shot estimate
  double e_sv = 0.0;      // statevector energy of the same ansatz
  double e_vqe_pt2 = 0.0; // e_vqe plus the PT2 correction (equals e_vqe with PT2 off)
  double e_sv_pt2 = 0.0;
  double pt2_delta = 0.0;
  double standard_error = 0.0; // shots only
  double bootstrap_stddev = 0.0;
  AnsatzState ansatz;
  std::vector<std::string> operator_labels;
  std::vector<double> energy_trace;
  std::int64_t shots_total = 0, shots_kept = 0;
  std::vector<std::string> warnings;
  // Shots path: filtered tables and their groups, kept for reaction statistics.
  std::vector<MeasurementGroup> groups;
  std::vector<ShotTable> tables;

  nlohmann::json to_json() const;
};

/// Active space -> Hamiltonian -> ADAPT-VQE -> (shots: grouping, sampling,
/// PMSV, bootstrap) -> RDMs -> PT2. Writes the intermediates under
/// output_dir/<tag>/ when write_outputs is set. Throws StageError.
SpeciesResult run_species(const RunConfig &config, const std::string &tag,
                          bool write_outputs = true);

struct DeltaRow {
  std::string tag;
  std::string method; // VQE or VQE+PT2
  double energy = 0.0;
  double statevector = 0.0;
  double delta = 0.0; // energy - statevector
};

/// Per-species E_method - E_SV. Throws std::invalid_argument when the two
/// runs do not share species, qubit counts and ansatz operators.
std::vector<DeltaRow> compare_to_statevector(const std::vector<SpeciesResult> &shots,
                                             const std::vector<SpeciesResult> &statevector);

struct ReactionOutcome {
  nlohmann::json report; // empty when a species failed
  std::vector<SpeciesResult> species;
  std::vector<std::pair<std::string, std::string>> failures; // tag, message
  int exit_code = exit_ok;
};

/// Runs every species (concurrently, each failing independently), then the
/// activation/reaction tables per method with bootstrap errors and the
/// distance to the statevector energies. Writes reaction.json, the two
/// tables, the profile and manifests into output_dir.
ReactionOutcome run_reaction(const RunConfig &config, bool write_outputs = true);

/// Text rendering of a reaction report (energies in eV).
std::string format_reaction_tables(const nlohmann::json &report);

} // namespace qew
