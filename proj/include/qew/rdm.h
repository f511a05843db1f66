/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/measurement.h"
#include "qew/statevector.h"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qew {

inline constexpr int max_rdm_order = 4;

/// Ascending bitmasks of all k-element subsets of n modes.
std::vector<std::uint64_t> mode_subsets(std::size_t n_modes, int k);

/// Spin-orbital reduced density matrices
///   gamma_k[p1..pk; q1..qk] = <a+_p1 .. a+_pk a_qk .. a_q1>,
/// so gamma_2[p,q;r,s] = <a+_p a+_q a_s a_r>. Only sorted index tuples are
/// stored: block(k)(P, Q) is indexed by the positions of the subsets P and
/// Q in mode_subsets(n_modes, k). Other orderings follow by antisymmetry.
class RdmSet {
public:
  RdmSet() = default;
  RdmSet(std::size_t n_modes, int max_order);

  std::size_t mode_count() const { return n_; }
  int max_order() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::uint64_t> &subsets(int k) const { return subsets_.at(index(k)); }
  const Eigen::MatrixXcd &block(int k) const { return blocks_.at(index(k)); }
  Eigen::MatrixXcd &block(int k) { return blocks_.at(index(k)); }
  /// Row/column of a sorted subset mask in block(k).
  std::size_t position(int k, std::uint64_t subset) const;

  /// Element for arbitrary index order; zero when an index repeats.
  std::complex<double> element(const std::vector<std::size_t> &creators,
                               const std::vector<std::size_t> &annihilators) const;

  /// Full-tensor trace sum_{p1..pk} gamma_k[p1..pk; p1..pk] = N!/(N-k)!.
  std::complex<double> trace(int k) const;

  /// Elements that could not be estimated (shots path), left at zero.
  std::size_t invalid_elements = 0;

private:
  std::size_t index(int k) const;
  std::size_t n_ = 0;
  std::vector<std::vector<std::uint64_t>> subsets_;
  std::vector<Eigen::MatrixXcd> blocks_;
};

/// Orders 1..max_order of a state. Throws unless 1 <= max_order <= 4.
RdmSet rdm_from_statevector(const StateVector &state, int max_order);

/// sum_q gamma_k[P q; Q q], an order k-1 matrix in block(k-1) layout; equals
/// (N-k+1) gamma_{k-1} for an N-particle state.
Eigen::MatrixXcd contract_last_index(const RdmSet &rdms, int k);

/// Largest elementwise difference over the orders present in both sets.
double max_rdm_difference(const RdmSet &a, const RdmSet &b);

/// (A + A^dagger)/2 on every block.
void hermitize(RdmSet &rdms);

/// Text form, one stored nonzero element per line:
/// `order p1..pk q1..qk value [imag]` (imag only when nonzero).
std::string write_rdm_text(const RdmSet &rdms);
RdmSet parse_rdm_text(std::string_view text, std::size_t n_modes);

/// Pauli decomposition of the RDM elements and the measurement groups that
/// cover them.
struct RdmMeasurementPlan {
  struct Element {
    int order = 0;
    std::size_t row = 0, col = 0;
    std::vector<std::pair<std::size_t, std::complex<double>>> terms; // (pauli, coefficient)
  };
  std::size_t n_modes = 0;
  int max_order = 0;
  std::vector<PauliString> paulis;
  std::vector<std::size_t> pauli_group; // group index of each Pauli
  std::vector<MeasurementGroup> groups;
  std::vector<Element> elements;
};

/// Elements with row <= col for orders 1..max_order. With spin_conserving,
/// only elements whose creator and annihilator sets hold the same number of
/// alpha modes (interleaved spin orbitals) are planned; the rest are zero
/// for S_z eigenstates.
RdmMeasurementPlan plan_rdm_measurement(std::size_t n_modes, int max_order,
                                        bool spin_conserving = true);

/// Estimates from one table per plan group, optionally PMSV filtered, then
/// Hermitized. Elements touching a group with no surviving shots are
/// counted in invalid_elements.
RdmSet rdm_from_shots(const RdmMeasurementPlan &plan, const std::vector<ShotTable> &tables,
                      const SymmetrySpec *symmetry = nullptr);

/// Samples the plan groups from `state` and estimates the RDMs.
RdmSet rdm_from_shots(const RdmMeasurementPlan &plan, const StateVector &state,
                      std::int64_t shots_per_group, const SymmetrySpec *symmetry,
                      const NoiseSpec *noise, std::uint64_t seed);

/// Full-tensor trace of gamma_k estimated from the same tables, with the
/// standard error of the combined per-group estimators.
ExpectationEstimate rdm_trace_estimate(const RdmMeasurementPlan &plan,
                                       const std::vector<ShotTable> &tables, int k,
                                       const SymmetrySpec *symmetry = nullptr);

/// Infinite-shot limit of rdm_from_shots (exact outcome probabilities).
RdmSet rdm_from_probabilities(const RdmMeasurementPlan &plan, const StateVector &state);

/// Determinants of an (n_elec, sz2) sector over n_modes, ascending.
std::vector<std::uint64_t> sector_determinants(std::size_t n_modes, int n_elec, int sz2);

/// rho[i][j] = c_i c_j^* over sector_determinants, read from gamma_N with
/// N = n_elec (requires max_order >= N). Hermitized and trace-normalized.
Eigen::MatrixXcd sector_density(const RdmSet &rdms, int n_elec, int sz2);

} // namespace qew
