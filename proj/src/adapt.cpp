/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/adapt.h"

#include "qew/integrals.h"
#include "qew/parallel.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qew {

namespace {

using cplx = std::complex<double>;

double inf_norm(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

std::string pair_label(const char *kind, std::size_t p, std::size_t q) {
  return std::string(kind) + "(" + std::to_string(p) + "->" + std::to_string(q) + ")";
}

} // namespace

PoolOperator make_pool_operator(std::string label, const FermionOperator &generator,
                                std::size_t n_modes) {
  PoolOperator op;
  op.label = std::move(label);
  op.generator = generator;
  op.qubit_generator = simplify(jordan_wigner(generator, n_modes));
  if (!op.qubit_generator.is_anti_hermitian(1e-12))
    throw std::invalid_argument("pool generator " + op.label + " is not anti-Hermitian");
  for (const auto &[p, c] : op.qubit_generator.terms())
    op.rotations.emplace_back(p, c.imag());
  for (std::size_t a = 0; a < op.rotations.size(); ++a)
    for (std::size_t b = a + 1; b < op.rotations.size(); ++b)
      if (!commutes(op.rotations[a].first, op.rotations[b].first))
        throw std::invalid_argument("pool generator " + op.label +
                                    " has non-commuting Pauli terms");
  return op;
}

std::vector<PoolOperator> build_upccgsd_pool(std::size_t n) {
  const std::size_t modes = 2 * n;
  std::vector<PoolOperator> pool;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) {
      FermionOperator t;
      for (int spin = 0; spin < 2; ++spin)
        t.add_term(1.0, {{spin_orbital(q, spin), true}, {spin_orbital(p, spin), false}});
      pool.push_back(make_pool_operator(pair_label("single", p, q), t - t.adjoint(), modes));
    }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) {
      FermionOperator t;
      t.add_term(1.0, {{spin_orbital(q, 0), true},
                       {spin_orbital(q, 1), true},
                       {spin_orbital(p, 1), false},
                       {spin_orbital(p, 0), false}});
      pool.push_back(make_pool_operator(pair_label("double", p, q), t - t.adjoint(), modes));
    }
  return pool;
}

void AnsatzState::validate(std::size_t pool_size) const {
  if (operators.size() != parameters.size())
    throw std::invalid_argument("ansatz operator and parameter counts differ");
  for (auto k : operators)
    if (k >= pool_size)
      throw std::out_of_range("ansatz references pool operator " + std::to_string(k));
  if (qubit_count < 64 && (reference >> qubit_count) != 0)
    throw std::invalid_argument("ansatz reference has bits beyond the qubit count");
}

void apply_generator(StateVector &state, const PoolOperator &op, double theta) {
  for (const auto &[p, c] : op.rotations)
    apply_pauli_exponential(state, p, theta * c);
}

StateVector prepare_state(const AnsatzState &ansatz, const std::vector<PoolOperator> &pool) {
  ansatz.validate(pool.size());
  auto state = fock_state(ansatz.qubit_count, ansatz.reference);
  for (std::size_t k = 0; k < ansatz.operators.size(); ++k)
    apply_generator(state, pool[ansatz.operators[k]], ansatz.parameters[k]);
  return state;
}

StateVector prepare_noisy_state(const AnsatzState &ansatz,
                                const std::vector<PoolOperator> &pool,
                                double depolarizing_prob, Rng &rng) {
  ansatz.validate(pool.size());
  auto state = fock_state(ansatz.qubit_count, ansatz.reference);
  for (std::size_t k = 0; k < ansatz.operators.size(); ++k)
    for (const auto &[p, c] : pool[ansatz.operators[k]].rotations) {
      apply_pauli_exponential(state, p, ansatz.parameters[k] * c);
      apply_depolarizing(state, p.support(), depolarizing_prob, rng);
    }
  return state;
}

HamiltonianAction::HamiltonianAction(const QubitOperator &h) : n_(h.qubit_count()) {
  if (!h.is_hermitian(1e-10))
    throw std::invalid_argument("Hamiltonian must be Hermitian");
  matrix_ = sparse_matrix(h);
}

double HamiltonianAction::energy(const StateVector &state) const {
  return state.amplitudes().dot(apply(state.amplitudes())).real();
}

double adapt_gradient(const StateVector &state, const QubitOperator &h, const PoolOperator &g) {
  const Eigen::VectorXcd hv = apply_operator(h, state.amplitudes());
  const Eigen::VectorXcd gv = apply_operator(g.qubit_generator, state.amplitudes());
  return 2.0 * hv.dot(gv).real();
}

double adapt_gradient(const StateVector &state, const HamiltonianAction &h,
                      const PoolOperator &g) {
  const Eigen::VectorXcd hv = h.apply(state.amplitudes());
  const Eigen::VectorXcd gv = apply_operator(g.qubit_generator, state.amplitudes());
  return 2.0 * hv.dot(gv).real();
}

void AdaptConfig::validate() const {
  if (!(gradient_threshold > 0.0) || max_operators == 0 || !(optimizer_tolerance > 0.0) ||
      max_optimizer_iterations == 0)
    throw std::invalid_argument("ADAPT configuration values must be positive");
}

double ansatz_energy_and_gradient(const AnsatzState &ansatz,
                                  const std::vector<PoolOperator> &pool,
                                  const HamiltonianAction &h, std::vector<double> *gradient) {
  auto psi = prepare_state(ansatz, pool);
  StateVector lambda(psi.qubit_count(), h.apply(psi.amplitudes()));
  const double energy = psi.amplitudes().dot(lambda.amplitudes()).real();
  if (!gradient)
    return energy;
  const std::size_t n = ansatz.operators.size();
  gradient->assign(n, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const auto &op = pool[ansatz.operators[k]];
    const Eigen::VectorXcd gpsi = apply_operator(op.qubit_generator, psi.amplitudes());
    (*gradient)[k] = 2.0 * lambda.amplitudes().dot(gpsi).real();
    apply_generator(psi, op, -ansatz.parameters[k]);
    apply_generator(lambda, op, -ansatz.parameters[k]);
  }
  return energy;
}

VqeResult vqe_minimize(const AnsatzState &ansatz, const std::vector<PoolOperator> &pool,
                       const HamiltonianAction &h, const AdaptConfig &config) {
  config.validate();
  ansatz.validate(pool.size());
  const std::size_t n = ansatz.parameters.size();
  AnsatzState trial = ansatz;
  std::vector<double> g;
  double f = ansatz_energy_and_gradient(trial, pool, h, &g);

  VqeResult out;
  out.energy_history.push_back(f);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                   static_cast<Eigen::Index>(n));
  bool identity_inverse = true;
  std::vector<double> x = ansatz.parameters, xn(n), gn;
  while (out.iterations < config.max_optimizer_iterations) {
    if (inf_norm(g) <= config.optimizer_tolerance) {
      out.converged = true;
      break;
    }
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d[i] -= hinv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * g[j];
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      identity_inverse = true;
      for (std::size_t i = 0; i < n; ++i)
        d[i] = -g[i];
      slope = dot(g, d);
    }
    double alpha = 1.0, fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i)
        xn[i] = x[i] + alpha * d[i];
      trial.parameters = xn;
      fn = ansatz_energy_and_gradient(trial, pool, h, &gn);
      if (fn <= f + 1e-4 * alpha * slope || (fn <= f && inf_norm(gn) < inf_norm(g))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (identity_inverse)
        break;
      hinv.setIdentity();
      identity_inverse = true;
      continue;
    }
    Eigen::VectorXd s(static_cast<Eigen::Index>(n)), y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      s[static_cast<Eigen::Index>(i)] = xn[i] - x[i];
      y[static_cast<Eigen::Index>(i)] = gn[i] - g[i];
    }
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm() && sy > 0.0) {
      if (identity_inverse)
        hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd i_n = Eigen::MatrixXd::Identity(hinv.rows(), hinv.cols());
      hinv = (i_n - rho * s * y.transpose()) * hinv * (i_n - rho * y * s.transpose()) +
             rho * s * s.transpose();
      identity_inverse = false;
    }
    x = xn;
    f = fn;
    g = gn;
    ++out.iterations;
    out.energy_history.push_back(f);
  }
  out.energy = f;
  out.parameters = x;
  out.gradient_norm = inf_norm(g);
  if (!out.converged && out.gradient_norm <= config.optimizer_tolerance)
    out.converged = true;
  return out;
}

std::string to_string(AdaptStop reason) {
  switch (reason) {
  case AdaptStop::gradient_converged:
    return "gradient_converged";
  case AdaptStop::max_operators:
    return "max_operators";
  case AdaptStop::pool_empty:
    return "pool_empty";
  case AdaptStop::stalled:
    return "stalled";
  }
  return "unknown";
}

std::vector<double> AdaptResult::energy_trace() const {
  std::vector<double> out{reference_energy};
  for (const auto &it : iterations)
    out.push_back(it.energy);
  return out;
}

AdaptResult adapt_vqe_loop(const QubitOperator &h, std::uint64_t reference,
                           const std::vector<PoolOperator> &pool, const AdaptConfig &config) {
  config.validate();
  HamiltonianAction action(h);
  AdaptResult out;
  out.ansatz.qubit_count = h.qubit_count();
  out.ansatz.reference = reference;
  auto state = fock_state(h.qubit_count(), reference);
  out.reference_energy = action.energy(state);
  out.energy = out.reference_energy;
  if (pool.empty()) {
    out.stop_reason = AdaptStop::pool_empty;
    return out;
  }
  int flat = 0;
  std::vector<double> grads(pool.size());
  while (true) {
    parallel_for(pool.size(),
                 [&](std::size_t k) { grads[k] = adapt_gradient(state, action, pool[k]); });
    std::size_t best = 0;
    for (std::size_t k = 1; k < pool.size(); ++k)
      if (std::abs(grads[k]) > std::abs(grads[best]))
        best = k;
    out.final_max_gradient = std::abs(grads[best]);
    if (out.final_max_gradient < config.gradient_threshold) {
      out.stop_reason = AdaptStop::gradient_converged;
      break;
    }
    if (out.ansatz.operators.size() >= config.max_operators) {
      out.stop_reason = AdaptStop::max_operators;
      break;
    }
    out.ansatz.operators.push_back(best);
    out.ansatz.parameters.push_back(0.0);
    auto vr = vqe_minimize(out.ansatz, pool, action, config);
    out.ansatz.parameters = vr.parameters;
    flat = (out.energy - vr.energy < 1e-12) ? flat + 1 : 0;
    out.energy = vr.energy;
    out.iterations.push_back({best, out.final_max_gradient, vr.energy, vr.converged});
    state = prepare_state(out.ansatz, pool);
    if (flat >= 3) {
      out.stop_reason = AdaptStop::stalled;
      break;
    }
  }
  return out;
}

nlohmann::json ansatz_to_json(const AnsatzState &ansatz, const std::vector<PoolOperator> &pool) {
  ansatz.validate(pool.size());
  nlohmann::json ops = nlohmann::json::array();
  for (std::size_t k = 0; k < ansatz.operators.size(); ++k)
    ops.push_back({{"label", pool[ansatz.operators[k]].label}, {"theta", ansatz.parameters[k]}});
  return {{"qubits", ansatz.qubit_count},
          {"reference", format_bitstring(ansatz.reference, ansatz.qubit_count)},
          {"operators", ops}};
}

AnsatzState ansatz_from_json(const nlohmann::json &j, const std::vector<PoolOperator> &pool) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < pool.size(); ++k)
    index.emplace(pool[k].label, k);
  AnsatzState a;
  a.qubit_count = j.at("qubits").get<std::size_t>();
  const auto bits = j.at("reference").get<std::string>();
  if (bits.size() != a.qubit_count)
    throw std::invalid_argument("ansatz reference length differs from qubit count");
  a.reference = parse_bitstring(bits);
  for (const auto &op : j.at("operators")) {
    const auto label = op.at("label").get<std::string>();
    auto it = index.find(label);
    if (it == index.end())
      throw std::invalid_argument("ansatz operator '" + label + "' is not in the pool");
    a.operators.push_back(it->second);
    a.parameters.push_back(op.at("theta").get<double>());
  }
  a.validate(pool.size());
  return a;
}

std::string energy_trace_csv(const AdaptResult &result, const std::vector<PoolOperator> &pool) {
  std::string out = "iteration,operator,max_gradient,energy\n";
  out += "0,reference,," + format_real(result.reference_energy) + "\n";
  for (std::size_t k = 0; k < result.iterations.size(); ++k) {
    const auto &it = result.iterations[k];
    out += std::to_string(k + 1) + "," + pool.at(it.operator_index).label + "," +
           format_real(it.max_gradient) + "," + format_real(it.energy) + "\n";
  }
  return out;
}

} // namespace qew
