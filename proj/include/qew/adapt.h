/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/fermion_operator.h"
#include "qew/statevector.h"

#include <json.hpp>

#include <Eigen/Sparse>

#include <string>
#include <utility>
#include <vector>

namespace qew {

/// Anti-Hermitian pool generator G = T - T^dagger. Its qubit image is
/// i * sum_k c_k P_k with mutually commuting P_k, so exp(theta G) is the
/// exact product of exp(i theta c_k P_k).
struct PoolOperator {
  std::string label; // "single(p->q)" or "double(p->q)", spatial orbitals p < q
  FermionOperator generator;
  QubitOperator qubit_generator;
  std::vector<std::pair<PauliString, double>> rotations;
};

/// Spin-adapted generalized singles, then paired doubles, for every spatial
/// pair p < q (2 * n(n-1)/2 operators).
std::vector<PoolOperator> build_upccgsd_pool(std::size_t n_spatial_orbitals);

/// Wraps an anti-Hermitian generator; throws if it is not anti-Hermitian or
/// its Pauli terms do not commute.
PoolOperator make_pool_operator(std::string label, const FermionOperator &generator,
                                std::size_t n_modes);

/// Ordered generators (pool indices) with angles acting on a reference
/// determinant: |psi> = exp(theta_N G_N) ... exp(theta_1 G_1) |ref>.
struct AnsatzState {
  std::size_t qubit_count = 0;
  std::uint64_t reference = 0;
  std::vector<std::size_t> operators;
  std::vector<double> parameters;

  void validate(std::size_t pool_size) const;
};

void apply_generator(StateVector &state, const PoolOperator &op, double theta);

StateVector prepare_state(const AnsatzState &ansatz, const std::vector<PoolOperator> &pool);

/// Trajectory sample of the ansatz circuit: after every Pauli exponential
/// each touched qubit depolarizes with noise.depolarizing_prob_per_exponential.
StateVector prepare_noisy_state(const AnsatzState &ansatz,
                                const std::vector<PoolOperator> &pool,
                                double depolarizing_prob, Rng &rng);

/// Hamiltonian prepared once for repeated application.
class HamiltonianAction {
public:
  explicit HamiltonianAction(const QubitOperator &h);
  std::size_t qubit_count() const { return n_; }
  Eigen::VectorXcd apply(const Eigen::VectorXcd &v) const { return matrix_ * v; }
  double energy(const StateVector &state) const;

private:
  std::size_t n_ = 0;
  Eigen::SparseMatrix<std::complex<double>> matrix_;
};

/// <psi|[H, G]|psi> = 2 Re <H psi|G psi>.
double adapt_gradient(const StateVector &state, const QubitOperator &h, const PoolOperator &g);
double adapt_gradient(const StateVector &state, const HamiltonianAction &h,
                      const PoolOperator &g);

struct AdaptConfig {
  double gradient_threshold = 1e-5;
  std::size_t max_operators = 60;
  double optimizer_tolerance = 1e-7;
  std::size_t max_optimizer_iterations = 1000;

  void validate() const;
};

/// Energy and analytic gradient of the ansatz (adjoint differentiation).
double ansatz_energy_and_gradient(const AnsatzState &ansatz,
                                  const std::vector<PoolOperator> &pool,
                                  const HamiltonianAction &h, std::vector<double> *gradient);

struct VqeResult {
  double energy = 0.0;
  std::vector<double> parameters;
  std::size_t iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0; // infinity norm at the returned point
  std::vector<double> energy_history; // initial energy, then each accepted step
};

/// BFGS with Armijo backtracking; a step is accepted only if the energy does
/// not increase. Stops when the gradient infinity norm is <= tolerance.
VqeResult vqe_minimize(const AnsatzState &ansatz, const std::vector<PoolOperator> &pool,
                       const HamiltonianAction &h, const AdaptConfig &config = {});

enum class AdaptStop { gradient_converged, max_operators, pool_empty, stalled };
std::string to_string(AdaptStop reason);

struct AdaptIteration {
  std::size_t operator_index = 0;
  double max_gradient = 0.0;
  double energy = 0.0;
  bool optimizer_converged = true;
};

struct AdaptResult {
  AnsatzState ansatz;
  double energy = 0.0;
  double reference_energy = 0.0;
  std::vector<AdaptIteration> iterations;
  AdaptStop stop_reason = AdaptStop::gradient_converged;
  double final_max_gradient = 0.0;

  /// Reference energy followed by the energy after each macro-iteration.
  std::vector<double> energy_trace() const;
};

AdaptResult adapt_vqe_loop(const QubitOperator &h, std::uint64_t reference,
                           const std::vector<PoolOperator> &pool,
                           const AdaptConfig &config = {});

/// JSON: qubit count, reference bitstring, ordered labels and angles.
nlohmann::json ansatz_to_json(const AnsatzState &ansatz, const std::vector<PoolOperator> &pool);
AnsatzState ansatz_from_json(const nlohmann::json &j, const std::vector<PoolOperator> &pool);

/// `iteration,operator,max_gradient,energy`, iteration 0 is the reference.
std::string energy_trace_csv(const AdaptResult &result, const std::vector<PoolOperator> &pool);

} // namespace qew
