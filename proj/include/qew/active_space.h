/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/integrals.h"

#include <Eigen/Dense>

#include <json.hpp>

#include <optional>
#include <vector>

namespace qew {

inline constexpr double default_avas_threshold = 0.18;
/// Overlap eigenvalues at or below this are treated as exactly zero.
inline constexpr double sigma_zero_tolerance = 1e-10;
/// Largest accepted condition number of the projector overlap.
inline constexpr double projector_condition_limit = 1e12;

struct ActiveSpaceSpec {
  int n_active_electrons = 0;
  int n_active_orbitals = 0;

  void validate() const;
  friend bool operator==(const ActiveSpaceSpec &, const ActiveSpaceSpec &) = default;
};

enum class OrbitalSubset { occupied, virtual_orbitals };

/// Reference-occupied (mo_occ > 0) or empty MO indices, ascending.
std::vector<std::size_t> subset_indices(const OrbitalBundle &bundle,
                                        OrbitalSubset subset);

/// S^A_ij = <i|P|j> over the chosen MO subset, P the projector onto the
/// span of the bundle's projector functions.
Eigen::MatrixXd projected_overlap(const OrbitalBundle &bundle, OrbitalSubset subset);
Eigen::MatrixXd projected_overlap(const OrbitalBundle &bundle,
                                  const Eigen::MatrixXd &projector_coeff,
                                  OrbitalSubset subset);

struct OverlapSpectrum {
  Eigen::VectorXd sigma;   // descending
  Eigen::MatrixXd vectors; // columns are the matching eigenvectors
};

/// Eigen-decomposition of a projected overlap. Eigenvalues descend;
/// degenerate clusters (within 1e-10) get the basis closest to the original
/// orbital order, and each vector's largest component is made positive.
OverlapSpectrum avas_rotate(const Eigen::MatrixXd &overlap);

struct AvasResult {
  Eigen::VectorXd sigma_occ;
  Eigen::VectorXd sigma_virt;
  /// n_mo x n_mo orthogonal; rotated orbitals are mo_coeff * rotation. The
  /// k-th rotated orbital of a block sits at that block's k-th MO index.
  Eigen::MatrixXd rotation;
  std::vector<std::size_t> active_occ;
  std::vector<std::size_t> active_virt;
  std::vector<std::size_t> core;
  std::vector<std::size_t> frozen_virt;
  double threshold = default_avas_threshold;

  /// Active orbitals, occupied first, each block ascending.
  std::vector<std::size_t> active() const;
  ActiveSpaceSpec spec() const;
};

/// Block-local selection: positions k with sigma[k] >= threshold and
/// sigma[k] > 1e-10 are active. Indices refer to the descending spectra.
struct BlockSelection {
  std::vector<std::size_t> active_occ, active_virt, core, frozen_virt;
};
BlockSelection select_active(const Eigen::VectorXd &sigma_occ,
                             const Eigen::VectorXd &sigma_virt, double threshold);

/// Full AVAS pass: both spectra, the block-diagonal rotation, and
/// threshold-based index sets in MO numbering.
AvasResult avas(const OrbitalBundle &bundle, double threshold = default_avas_threshold);
AvasResult avas(const OrbitalBundle &bundle, const Eigen::MatrixXd &projector_coeff,
                double threshold = default_avas_threshold);

/// Same spectra and rotation, but the active set is the n_e/2 highest-sigma
/// occupied and n_o - n_e/2 highest-sigma virtual orbitals. Throws when a
/// block is too small or a chosen sigma falls below the threshold.
AvasResult avas_for_spec(const OrbitalBundle &bundle,
                         const Eigen::MatrixXd &projector_coeff,
                         const ActiveSpaceSpec &spec, double threshold);

/// Projector functions of a fragment: the listed AO basis functions.
Eigen::MatrixXd regional_embedding_projectors(const OrbitalBundle &bundle,
                                              const std::vector<std::size_t> &fragment_ao);

/// Integrals over `active` rotated orbitals with the doubly occupied `core`
/// folded into the core energy and an effective one-body term.
MolecularIntegrals active_space_integrals(const MolecularIntegrals &ints,
                                          const Eigen::MatrixXd &rotation,
                                          const std::vector<std::size_t> &core,
                                          const std::vector<std::size_t> &active);

/// Effective integrals from a completed AVAS pass.
MolecularIntegrals active_space_integrals(const MolecularIntegrals &ints,
                                          const AvasResult &avas);

struct TwoStepThresholds {
  double large = default_avas_threshold;
  double small = default_avas_threshold;
};

struct TwoStepResult {
  AvasResult first;
  AvasResult second;
  MolecularIntegrals intermediate;
  MolecularIntegrals final;
  OrbitalBundle intermediate_bundle;
};

/// First AVAS selects large_spec from the full bundle; the second runs on
/// the intermediate orbitals (projectors second_projectors, or the bundle's
/// own when absent) and selects small_spec.
TwoStepResult two_step_reduction(const MolecularIntegrals &ints, const OrbitalBundle &bundle,
                                 const ActiveSpaceSpec &large_spec,
                                 const ActiveSpaceSpec &small_spec,
                                 const TwoStepThresholds &thresholds = {},
                                 const std::optional<Eigen::MatrixXd> &first_projectors = {},
                                 const std::optional<Eigen::MatrixXd> &second_projectors = {});

nlohmann::json avas_report(const AvasResult &result);

} // namespace qew
