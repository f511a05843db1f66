/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/qubit_operator.h"
#include "qew/rng.h"
#include "qew/shot_table.h"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace qew {

/// Dense amplitudes over 2^n basis states; basis index bit k is qubit k and
/// |1> marks an occupied spin orbital.
class StateVector {
public:
  StateVector() = default;
  explicit StateVector(std::size_t qubit_count); // |0...0>
  StateVector(std::size_t qubit_count, Eigen::VectorXcd amplitudes);

  std::size_t qubit_count() const { return n_; }
  std::size_t dimension() const { return static_cast<std::size_t>(amps_.size()); }
  const Eigen::VectorXcd &amplitudes() const { return amps_; }
  Eigen::VectorXcd &amplitudes() { return amps_; }
  std::complex<double> operator[](std::uint64_t index) const {
    return amps_[static_cast<Eigen::Index>(index)];
  }

  double norm() const { return amps_.norm(); }
  void normalize();

  /// `index real imag` per line, nonzero amplitudes only.
  std::string dump() const;

private:
  std::size_t n_ = 0;
  Eigen::VectorXcd amps_;
};

StateVector fock_state(std::size_t qubit_count, std::string_view occupation);
StateVector fock_state(std::size_t qubit_count, std::uint64_t occupation);

/// P|v> for a bare Pauli string.
Eigen::VectorXcd apply_pauli(const PauliString &p, const Eigen::VectorXcd &v);
/// op|v>; op need not be Hermitian.
Eigen::VectorXcd apply_operator(const QubitOperator &op,
                                const Eigen::VectorXcd &v);

/// In place: |psi> <- (cos(theta) I + i sin(theta) P)|psi> = exp(i theta P)|psi>.
void apply_pauli_exponential(StateVector &state, const PauliString &p,
                             double theta);

/// <psi|op|psi>. Throws for non-Hermitian op; the imaginary residue of the
/// result is reported through `imaginary_residue` when requested.
double expectation(const StateVector &state, const QubitOperator &op,
                   double *imaginary_residue = nullptr);

/// Dense matrix of an operator (2^n x 2^n). Intended for small n.
Eigen::MatrixXcd dense_matrix(const QubitOperator &op);

/// Sparse matrix of an operator over the full 2^n space.
Eigen::SparseMatrix<std::complex<double>> sparse_matrix(const QubitOperator &op);

/// Particle-number / S_z sector for interleaved spin orbitals.
struct Sector {
  int n_particles = 0;
  int sz2 = 0; // N_alpha - N_beta
};

bool in_sector(std::uint64_t index, const Sector &sector);

struct GroundState {
  double energy = 0.0;
  StateVector state;
};

inline constexpr std::size_t default_qubit_cap = 14;

/// Lowest eigenpair of a Hermitian operator, optionally restricted to a
/// sector. Dense diagonalization for small spaces, Lanczos otherwise.
GroundState exact_ground_state(const QubitOperator &op,
                               std::optional<Sector> sector = std::nullopt,
                               std::size_t qubit_cap = default_qubit_cap);

struct NoiseSpec {
  double depolarizing_prob_per_exponential = 1e-3;
  double measurement_flip_prob = 2e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Rotates each qubit from its measurement letter (X/Y/Z; I is read in Z)
/// into the computational basis and samples `shots` outcomes. A non-null
/// noise spec flips every measured bit independently with
/// measurement_flip_prob. Deterministic for a fixed seed.
ShotTable sample_bitstrings(const StateVector &state,
                            const PauliString &basis, std::int64_t shots,
                            const NoiseSpec *noise, std::uint64_t seed);

/// Exact outcome probabilities in the given measurement basis.
std::vector<double> outcome_probabilities(const StateVector &state,
                                          const PauliString &basis);

/// Stochastic depolarizing trajectory: each qubit set in `touched` receives,
/// with probability prob, a uniformly random non-identity Pauli.
void apply_depolarizing(StateVector &state, std::uint64_t touched, double prob,
                        Rng &rng);
void apply_depolarizing(StateVector &state, std::uint64_t touched, double prob,
                        std::uint64_t seed);

} // namespace qew
