/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/qubit_operator.h"
#include "qew/shot_table.h"
#include "qew/statevector.h"

#include <functional>
#include <string>
#include <vector>

namespace qew {

inline constexpr double hartree_to_ev = 27.211386245988;

struct MeasurementTerm {
  PauliString pauli;
  double coefficient = 0.0;
};

/// Qubit-wise commuting terms measured with one set of single-qubit bases.
/// basis.letter(q) is the letter shared by every member acting on q, or I.
struct MeasurementGroup {
  std::size_t id = 0;
  PauliString basis;
  std::vector<MeasurementTerm> terms;

  double weight() const; // sum of |coefficient|
};

/// Greedy first-fit coloring of the qubit-wise incompatibility graph. Terms
/// are visited by |coefficient| descending, then Pauli order ascending.
/// Coefficients must be real (Hermitian operator); throws on an empty operator.
std::vector<MeasurementGroup> group_pauli_terms(const QubitOperator &op);

/// True when the groups partition the operator's terms exactly and all
/// members of each group pairwise qubit-wise commute and match its basis.
bool is_valid_grouping(const std::vector<MeasurementGroup> &groups, const QubitOperator &op);

struct SymmetryConstraint {
  std::string name;
  PauliString pauli; // Z-type
  int eigenvalue = 1;
};

struct SymmetrySpec {
  std::vector<SymmetryConstraint> constraints;

  /// Throws unless every constraint is Z-type with eigenvalue +-1 and
  /// commutes with `h`.
  void validate(const QubitOperator &h) const;
};

/// Alpha-number parity, beta-number parity and total-number parity for
/// interleaved spin orbitals.
SymmetrySpec parity_symmetries(std::size_t n_spatial, int n_alpha, int n_beta);

struct PmsvResult {
  ShotTable table;
  std::vector<std::size_t> applied; // constraint indices checked
  std::vector<std::size_t> skipped; // not diagonal in the group basis
  std::int64_t discarded = 0;
};

/// Drops outcomes whose eigenvalue under any checkable constraint differs
/// from the required one. A constraint is checkable when the group measures
/// all of its qubits in Z (or leaves them unrotated).
PmsvResult pmsv_filter(const ShotTable &table, const MeasurementGroup &group,
                       const SymmetrySpec &symmetry);

enum class ShotAllocation { uniform, weighted };

/// Uniform: every group gets shots_per_group. Weighted: the same total budget
/// split in proportion to group weight (largest remainder, at least one).
std::vector<std::int64_t> allocate_shots(const std::vector<MeasurementGroup> &groups,
                                         std::int64_t shots_per_group,
                                         ShotAllocation mode = ShotAllocation::uniform);

/// One table per group, sampled in the group basis with the stream
/// derive_seed(seed, "group", id). Independent of the thread count.
std::vector<ShotTable> measure_groups(const StateVector &state,
                                      const std::vector<MeasurementGroup> &groups,
                                      const std::vector<std::int64_t> &shots,
                                      const NoiseSpec *noise, std::uint64_t seed);

struct GroupEstimate {
  double value = 0.0;    // sum of coefficient * eigenvalue mean
  double variance = 0.0; // variance of that mean
  std::int64_t shots = 0;
  bool valid = true;
};

struct ExpectationEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::vector<GroupEstimate> groups;
  std::vector<std::size_t> invalid_groups; // groups without surviving shots
  bool valid() const { return invalid_groups.empty(); }
};

/// Empirical estimate from one table per group. Identity terms contribute
/// their coefficient exactly.
ExpectationEstimate estimate_expectation(const std::vector<MeasurementGroup> &groups,
                                         const std::vector<ShotTable> &tables);

/// Infinite-shot limit: analytic outcome probabilities of `state` per group.
ExpectationEstimate estimate_expectation(const std::vector<MeasurementGroup> &groups,
                                         const StateVector &state);

/// Tables for every measured setting of one quantity (e.g. one species).
using ShotData = std::vector<ShotTable>;

struct BootstrapResult {
  double mean = 0.0;
  double stddev = 0.0; // population standard deviation over batches
  std::vector<double> samples;
};

/// Each batch resamples every table with replacement to its kept-shot count
/// (stream derive_seed(seed, "bootstrap", batch)) and evaluates the quantity
/// on the resampled data. Throws when batches < 2 or a table has no shots.
BootstrapResult bootstrap_statistics(const std::vector<ShotData> &data, std::size_t batches,
                                     const std::function<double(const std::vector<ShotData> &)> &evaluator,
                                     std::uint64_t seed);

struct EnergyDifferences {
  double activation = 0.0; // E_TS - E_R
  double reaction = 0.0;   // E_P - E_R
  double activation_ev() const { return activation * hartree_to_ev; }
  double reaction_ev() const { return reaction * hartree_to_ev; }
};

EnergyDifferences energy_differences(double e_reactant, double e_ts, double e_product);

} // namespace qew
