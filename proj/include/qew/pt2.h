/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/integrals.h"
#include "qew/rdm.h"
#include "qew/statevector.h"

#include <Eigen/Dense>

#include <json.hpp>

#include <string>
#include <vector>

namespace qew {

inline constexpr double default_denominator_cutoff = 1e-8;
inline constexpr double default_rdm_validation_tolerance = 1e-6;

/// Spatial orbital roles in the basis of the full integrals. The three sets
/// are disjoint and together cover every orbital. The active order defines
/// the qubit order of the active-space state.
struct OrbitalPartition {
  std::vector<std::size_t> core;
  std::vector<std::size_t> active;
  std::vector<std::size_t> virtual_orbitals;

  void validate(std::size_t n_orb) const;
};

/// Core-folded integrals of the partition's active space.
MolecularIntegrals partition_active_integrals(const MolecularIntegrals &full,
                                              const OrbitalPartition &partition);

/// Throws when `effective` disagrees with the active integrals derived from
/// `full` (size, electron count, or any element beyond tol).
void check_effective_integrals(const MolecularIntegrals &effective,
                               const MolecularIntegrals &full,
                               const OrbitalPartition &partition, double tol = 1e-8);

struct Pt2Options {
  double denominator_cutoff = default_denominator_cutoff;
};

/// One perturber: an external excitation pattern combined with one
/// eigenstate of the active Hamiltonian in the matching sector.
struct Pt2Perturber {
  std::string excitation_class;
  std::vector<std::size_t> core_holes;        // spin orbitals, full numbering
  std::vector<std::size_t> virtual_particles; // spin orbitals, full numbering
  std::size_t active_root = 0;
  double coupling = 0.0;    // <Psi_k|H|Psi_0> squared, density weighted
  double denominator = 0.0; // E0_k - E0
  double energy = 0.0;      // -coupling / denominator
};

struct Pt2ClassTotal {
  std::string name;
  double energy = 0.0;
  std::size_t perturbers = 0;
};

struct Pt2Result {
  double delta_e = 0.0;
  double reference_active_energy = 0.0; // Tr[H_active rho], core energy excluded
  Eigen::VectorXd orbital_energies;      // generalized Fock diagonal, full numbering
  std::vector<Pt2ClassTotal> classes;
  std::vector<Pt2Perturber> perturbers; // nonzero couplings only
  std::size_t skipped = 0;              // perturbers below the denominator cutoff
  std::vector<std::string> warnings;
};

/// Uncontracted second-order correction with the Dyall zeroth-order
/// Hamiltonian, from an active-space density over
/// sector_determinants(2 n_active, n_active_electrons, ms2). Linear in rho.
Pt2Result pt2_from_density(const Eigen::MatrixXcd &rho, const MolecularIntegrals &full,
                           const OrbitalPartition &partition, const Pt2Options &options = {});

/// Correction for a pure active-space reference state.
Pt2Result pt2_correction(const StateVector &active_state, const MolecularIntegrals &full,
                         const OrbitalPartition &partition, const Pt2Options &options = {});

/// Correction from RDMs of order >= n_active_electrons. The reference is
/// rebuilt as the dominant eigenvector of the sector density; its RDMs must
/// reproduce the supplied ones within validation_tol, otherwise this throws.
Pt2Result pt2_correction(const RdmSet &rdms, const MolecularIntegrals &full,
                         const OrbitalPartition &partition,
                         double validation_tol = default_rdm_validation_tolerance,
                         const Pt2Options &options = {});

/// Correction from estimated RDMs without purity validation: the sector
/// density read from them is used as is.
Pt2Result pt2_from_measured_rdms(const RdmSet &rdms, const MolecularIntegrals &full,
                                 const OrbitalPartition &partition,
                                 const Pt2Options &options = {});

double total_energy(double e_vqe, const Pt2Result &pt2);

/// delta_e, class totals, per-perturber entries and warnings.
nlohmann::json pt2_report(const Pt2Result &result);

} // namespace qew
