/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/statevector.h"

#include "qew/integrals.h"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qew {

namespace {

using cplx = std::complex<double>;

cplx i_power(std::size_t k) {
  static const cplx table[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[k % 4];
}

void require_qubits(std::size_t a, std::size_t b) {
  if (a != b)
    throw std::invalid_argument("qubit count mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
}

void apply_single_qubit(Eigen::VectorXcd &v, std::size_t qubit,
                        const cplx (&m)[2][2]) {
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  const auto dim = static_cast<std::uint64_t>(v.size());
  for (std::uint64_t j = 0; j < dim; ++j) {
    if (j & bit)
      continue;
    const auto a = static_cast<Eigen::Index>(j);
    const auto b = static_cast<Eigen::Index>(j | bit);
    const cplx x0 = v[a], x1 = v[b];
    v[a] = m[0][0] * x0 + m[0][1] * x1;
    v[b] = m[1][0] * x0 + m[1][1] * x1;
  }
}

// Lowest eigenpair of a Hermitian sparse matrix by Lanczos with full
// reorthogonalization.
std::pair<double, Eigen::VectorXcd>
lanczos_lowest(const Eigen::SparseMatrix<cplx> &a, double tol) {
  const Eigen::Index dim = a.rows();
  const Eigen::Index max_steps = std::min<Eigen::Index>(dim, 400);
  Rng rng(0x5EEDULL);
  Eigen::VectorXcd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    v[i] = cplx(0.5 + rng.uniform(), 0.0);
  v.normalize();
  std::vector<Eigen::VectorXcd> basis{v};
  std::vector<double> alpha, beta;
  double best = 0.0;
  Eigen::VectorXd ritz;
  for (Eigen::Index k = 0; k < max_steps; ++k) {
    Eigen::VectorXcd w = a * basis.back();
    alpha.push_back(basis.back().dot(w).real());
    for (int pass = 0; pass < 2; ++pass)
      for (const auto &b : basis)
        w -= b.dot(w) * b;
    const double bk = w.norm();
    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m)
        t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    best = es.eigenvalues()[0];
    ritz = es.eigenvectors().col(0);
    if (bk * std::abs(ritz[m - 1]) < tol || bk < 1e-14 || m == dim)
      break;
    beta.push_back(bk);
    basis.push_back(w / bk);
  }
  Eigen::VectorXcd ground = Eigen::VectorXcd::Zero(dim);
  for (Eigen::Index i = 0; i < ritz.size(); ++i)
    ground += ritz[i] * basis[static_cast<std::size_t>(i)];
  ground.normalize();
  return {best, ground};
}

} // namespace

StateVector::StateVector(std::size_t qubit_count)
    : n_(qubit_count),
      amps_(Eigen::VectorXcd::Zero(Eigen::Index{1} << qubit_count)) {
  if (qubit_count > 30)
    throw std::invalid_argument("statevector limited to 30 qubits");
  amps_[0] = 1.0;
}

StateVector::StateVector(std::size_t qubit_count, Eigen::VectorXcd amplitudes)
    : n_(qubit_count), amps_(std::move(amplitudes)) {
  if (amps_.size() != (Eigen::Index{1} << qubit_count))
    throw std::invalid_argument("amplitude count must be 2^qubit_count");
}

void StateVector::normalize() {
  const double nrm = amps_.norm();
  if (nrm == 0.0)
    throw std::runtime_error("cannot normalize the zero vector");
  amps_ /= nrm;
}

std::string StateVector::dump() const {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < amps_.size(); ++i) {
    if (amps_[i] == cplx{})
      continue;
    out += std::to_string(i);
    for (double x : {amps_[i].real(), amps_[i].imag()}) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
      out += ' ';
      out.append(buf, end);
    }
    out += '\n';
  }
  return out;
}

StateVector fock_state(std::size_t qubit_count, std::string_view occupation) {
  if (occupation.size() != qubit_count)
    throw std::invalid_argument("occupation bitstring length " +
                                std::to_string(occupation.size()) +
                                " != qubit count " + std::to_string(qubit_count));
  return fock_state(qubit_count, parse_bitstring(occupation));
}

StateVector fock_state(std::size_t qubit_count, std::uint64_t occupation) {
  if (qubit_count < 64 && (occupation >> qubit_count) != 0)
    throw std::invalid_argument("occupation has bits beyond qubit count");
  StateVector s(qubit_count);
  s.amplitudes()[0] = 0.0;
  s.amplitudes()[static_cast<Eigen::Index>(occupation)] = 1.0;
  return s;
}

Eigen::VectorXcd apply_pauli(const PauliString &p, const Eigen::VectorXcd &v) {
  const auto dim = static_cast<std::uint64_t>(v.size());
  if (dim != (std::uint64_t{1} << p.qubit_count()))
    throw std::invalid_argument("Pauli string does not match vector dimension");
  Eigen::VectorXcd out(v.size());
  const cplx yphase = i_power(p.y_count());
  const auto x = p.x_mask(), z = p.z_mask();
  for (std::uint64_t j = 0; j < dim; ++j) {
    const double sign = (std::popcount(j & z) & 1) ? -1.0 : 1.0;
    out[static_cast<Eigen::Index>(j ^ x)] =
        yphase * sign * v[static_cast<Eigen::Index>(j)];
  }
  return out;
}

Eigen::VectorXcd apply_operator(const QubitOperator &op,
                                const Eigen::VectorXcd &v) {
  const auto dim = static_cast<std::uint64_t>(v.size());
  if (!op.empty() && dim != (std::uint64_t{1} << op.qubit_count()))
    throw std::invalid_argument("operator does not match vector dimension");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
  for (const auto &[p, c] : op.terms()) {
    const cplx base = c * i_power(p.y_count());
    const auto x = p.x_mask(), z = p.z_mask();
    for (std::uint64_t j = 0; j < dim; ++j) {
      const double sign = (std::popcount(j & z) & 1) ? -1.0 : 1.0;
      out[static_cast<Eigen::Index>(j ^ x)] +=
          base * sign * v[static_cast<Eigen::Index>(j)];
    }
  }
  return out;
}

void apply_pauli_exponential(StateVector &state, const PauliString &p,
                             double theta) {
  require_qubits(state.qubit_count(), p.qubit_count());
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::VectorXcd pv = apply_pauli(p, state.amplitudes());
  state.amplitudes() = c * state.amplitudes() + cplx(0, s) * pv;
}

double expectation(const StateVector &state, const QubitOperator &op,
                   double *imaginary_residue) {
  if (!op.is_hermitian(1e-10))
    throw std::invalid_argument("expectation requires a Hermitian operator");
  if (!op.empty())
    require_qubits(state.qubit_count(), op.qubit_count());
  const auto &v = state.amplitudes();
  const auto dim = static_cast<std::uint64_t>(v.size());
  cplx total{};
  for (const auto &[p, c] : op.terms()) {
    const cplx base = c * i_power(p.y_count());
    const auto x = p.x_mask(), z = p.z_mask();
    cplx acc{};
    for (std::uint64_t j = 0; j < dim; ++j) {
      const double sign = (std::popcount(j & z) & 1) ? -1.0 : 1.0;
      acc += std::conj(v[static_cast<Eigen::Index>(j ^ x)]) * sign *
             v[static_cast<Eigen::Index>(j)];
    }
    total += base * acc;
  }
  if (imaginary_residue)
    *imaginary_residue = total.imag();
  return total.real();
}

Eigen::MatrixXcd dense_matrix(const QubitOperator &op) {
  const auto dim = Eigen::Index{1} << op.qubit_count();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto &[p, c] : op.terms()) {
    const cplx base = c * i_power(p.y_count());
    for (std::uint64_t j = 0; j < static_cast<std::uint64_t>(dim); ++j) {
      const double sign = (std::popcount(j & p.z_mask()) & 1) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(j ^ p.x_mask()), static_cast<Eigen::Index>(j)) +=
          base * sign;
    }
  }
  return m;
}

Eigen::SparseMatrix<cplx> sparse_matrix(const QubitOperator &op) {
  const std::uint64_t dim = std::uint64_t{1} << op.qubit_count();
  std::vector<Eigen::Triplet<cplx>> triplets;
  triplets.reserve(op.size() * dim);
  for (const auto &[p, c] : op.terms()) {
    const cplx base = c * i_power(p.y_count());
    for (std::uint64_t j = 0; j < dim; ++j) {
      const double sign = (std::popcount(j & p.z_mask()) & 1) ? -1.0 : 1.0;
      triplets.emplace_back(static_cast<Eigen::Index>(j ^ p.x_mask()),
                            static_cast<Eigen::Index>(j), base * sign);
    }
  }
  const auto n = static_cast<Eigen::Index>(dim);
  Eigen::SparseMatrix<cplx> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune(cplx(0.0, 0.0));
  return m;
}

bool in_sector(std::uint64_t index, const Sector &sector) {
  constexpr std::uint64_t alpha = 0x5555555555555555ULL;
  const int na = std::popcount(index & alpha);
  const int nb = std::popcount(index & ~alpha);
  return na + nb == sector.n_particles && na - nb == sector.sz2;
}

GroundState exact_ground_state(const QubitOperator &op,
                               std::optional<Sector> sector,
                               std::size_t qubit_cap) {
  const std::size_t n = op.qubit_count();
  if (n > qubit_cap)
    throw std::invalid_argument("exact_ground_state: " + std::to_string(n) +
                                " qubits exceeds the cap of " +
                                std::to_string(qubit_cap));
  if (!op.is_hermitian(1e-10))
    throw std::invalid_argument("exact_ground_state requires a Hermitian operator");
  const std::uint64_t full = std::uint64_t{1} << n;
  std::vector<std::uint64_t> basis;
  std::vector<std::int64_t> position(full, -1);
  for (std::uint64_t j = 0; j < full; ++j)
    if (!sector || in_sector(j, *sector)) {
      position[j] = static_cast<std::int64_t>(basis.size());
      basis.push_back(j);
    }
  if (basis.empty())
    throw std::invalid_argument("exact_ground_state: empty symmetry sector");
  const auto dim = static_cast<Eigen::Index>(basis.size());

  std::vector<Eigen::Triplet<cplx>> triplets;
  for (const auto &[p, c] : op.terms()) {
    const cplx base = c * i_power(p.y_count());
    for (Eigen::Index col = 0; col < dim; ++col) {
      const auto j = basis[static_cast<std::size_t>(col)];
      const auto row = position[j ^ p.x_mask()];
      if (row < 0)
        continue;
      const double sign = (std::popcount(j & p.z_mask()) & 1) ? -1.0 : 1.0;
      triplets.emplace_back(row, col, base * sign);
    }
  }
  Eigen::SparseMatrix<cplx> h(dim, dim);
  h.setFromTriplets(triplets.begin(), triplets.end());

  double energy = 0.0;
  Eigen::VectorXcd vec;
  if (dim <= 512) {
    Eigen::MatrixXcd dense = Eigen::MatrixXcd(h);
    if (dense.imag().cwiseAbs().maxCoeff() == 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense.real());
      energy = es.eigenvalues()[0];
      vec = es.eigenvectors().col(0).cast<cplx>();
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
      energy = es.eigenvalues()[0];
      vec = es.eigenvectors().col(0);
    }
  } else {
    std::tie(energy, vec) = lanczos_lowest(h, 1e-11);
  }
  StateVector out(n);
  out.amplitudes().setZero();
  for (Eigen::Index k = 0; k < dim; ++k)
    out.amplitudes()[static_cast<Eigen::Index>(basis[static_cast<std::size_t>(k)])] =
        vec[k];
  out.normalize();
  return {energy, std::move(out)};
}

void NoiseSpec::validate() const {
  auto bad = [](double p) { return !(p >= 0.0 && p <= 1.0); };
  if (bad(depolarizing_prob_per_exponential) || bad(measurement_flip_prob))
    throw std::invalid_argument("noise probabilities must lie in [0, 1]");
}

std::vector<double> outcome_probabilities(const StateVector &state,
                                          const PauliString &basis) {
  require_qubits(state.qubit_count(), basis.qubit_count());
  static const double r = 1.0 / std::sqrt(2.0);
  static const cplx hadamard[2][2] = {{r, r}, {r, -r}};
  // H S^dagger maps the Y eigenbasis onto Z.
  static const cplx hs_dag[2][2] = {{r, cplx(0, -r)}, {r, cplx(0, r)}};
  Eigen::VectorXcd v = state.amplitudes();
  for (std::size_t q = 0; q < basis.qubit_count(); ++q) {
    const auto l = basis.letter(q);
    if (l == PauliLetter::X)
      apply_single_qubit(v, q, hadamard);
    else if (l == PauliLetter::Y)
      apply_single_qubit(v, q, hs_dag);
  }
  std::vector<double> probs(static_cast<std::size_t>(v.size()));
  for (Eigen::Index j = 0; j < v.size(); ++j)
    probs[static_cast<std::size_t>(j)] = std::norm(v[j]);
  return probs;
}

ShotTable sample_bitstrings(const StateVector &state, const PauliString &basis,
                            std::int64_t shots, const NoiseSpec *noise,
                            std::uint64_t seed) {
  if (shots <= 0)
    throw std::invalid_argument("shots must be positive");
  if (noise)
    noise->validate();
  const auto probs = outcome_probabilities(state, basis);
  std::vector<double> cumulative(probs.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    cumulative[j] = (acc += probs[j]);
  ShotTable table;
  table.qubit_count = state.qubit_count();
  Rng rng(seed);
  const double flip = noise ? noise->measurement_flip_prob : 0.0;
  for (std::int64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto outcome = static_cast<std::uint64_t>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(probs.size()) - 1));
    if (flip > 0.0)
      for (std::size_t q = 0; q < state.qubit_count(); ++q)
        if (rng.bernoulli(flip))
          outcome ^= std::uint64_t{1} << q;
    table.add(outcome);
  }
  return table;
}

void apply_depolarizing(StateVector &state, std::uint64_t touched, double prob,
                        Rng &rng) {
  if (!(prob >= 0.0 && prob <= 1.0))
    throw std::invalid_argument("depolarizing probability must lie in [0, 1]");
  if (prob == 0.0)
    return;
  for (std::size_t q = 0; q < state.qubit_count(); ++q) {
    if (!((touched >> q) & 1U) || !rng.bernoulli(prob))
      continue;
    PauliString p(state.qubit_count());
    p.set(q, static_cast<PauliLetter>(1 + rng.below(3)));
    state.amplitudes() = apply_pauli(p, state.amplitudes());
  }
}

void apply_depolarizing(StateVector &state, std::uint64_t touched, double prob,
                        std::uint64_t seed) {
  Rng rng(seed);
  apply_depolarizing(state, touched, prob, rng);
}

} // namespace qew
