/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

// Dense second-order reference over the full determinant space.

#include "oracles.h"
#include "qew/active_space.h"
#include "qew/adapt.h"
#include "qew/pt2.h"

#include <map>

namespace qew::oracle {

using Eigen::Index;

inline Index ix(std::size_t i) { return static_cast<Index>(i); }

inline std::uint64_t spatial_mask(const std::vector<std::size_t> &orbs) {
  std::uint64_t m = 0;
  for (auto p : orbs)
    m |= std::uint64_t{3} << (2 * p);
  return m;
}

// Active-space ground state on 2 n_active qubits, active order as given.
inline StateVector active_ground_state(const MolecularIntegrals &full, const OrbitalPartition &part) {
  const auto eff = partition_active_integrals(full, part);
  const auto h = jordan_wigner(build_hamiltonian(eff), 2 * eff.n_orb);
  return exact_ground_state(h, Sector{eff.n_elec, eff.ms2}).state;
}

// Rayleigh-Schroedinger second order with a dense Dyall H0 over the full
// determinant space in the original orbital numbering.
inline double dense_pt2(const MolecularIntegrals &full, const OrbitalPartition &part) {
  const std::size_t n = full.n_orb, nso = 2 * n;
  const auto dets = determinants(nso, full.n_alpha(), full.n_beta());
  const Eigen::MatrixXd h = determinant_hamiltonian(full, dets);
  const std::uint64_t core = spatial_mask(part.core), virt = spatial_mask(part.virtual_orbitals);
  std::vector<Index> p_idx, q_idx;
  for (std::size_t i = 0; i < dets.size(); ++i)
    ((dets[i] & core) == core && (dets[i] & virt) == 0 ? p_idx : q_idx).push_back(ix(i));

  // Reference: lowest eigenvector of H inside the reference space.
  const Eigen::MatrixXd hpp = h(p_idx, p_idx);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(hpp);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(ix(dets.size()));
  psi(p_idx) = ep.eigenvectors().col(0);

  // Spin-averaged generalized Fock diagonal from the reference 1-RDM.
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(ix(nso), ix(nso));
  std::map<std::uint64_t, Index> pos;
  for (std::size_t i = 0; i < dets.size(); ++i)
    pos[dets[i]] = ix(i);
  for (std::size_t k = 0; k < dets.size(); ++k)
    for (std::size_t s = 0; s < nso; ++s) {
      if (!((dets[k] >> s) & 1))
        continue;
      for (std::size_t r = 0; r < nso; ++r) {
        const std::uint64_t rest = dets[k] ^ (std::uint64_t{1} << s);
        if ((rest >> r) & 1)
          continue;
        const std::uint64_t bra = rest | (std::uint64_t{1} << r);
        auto it = pos.find(bra);
        if (it == pos.end())
          continue;
        gamma(ix(r), ix(s)) +=
            excitation_sign(dets[k], s, r) * psi(it->second) * psi(ix(k));
      }
    }
  Eigen::VectorXd eps(ix(n));
  for (std::size_t p = 0; p < n; ++p) {
    double f = 0.0;
    for (std::size_t sigma = 0; sigma < 2; ++sigma) {
      const std::size_t ps = 2 * p + sigma;
      f += so_h1(full, ps, ps);
      for (std::size_t r = 0; r < nso; ++r)
        for (std::size_t s = 0; s < nso; ++s)
          f += gamma(ix(r), ix(s)) * so_anti(full, ps, r, ps, s);
    }
    eps[ix(p)] = 0.5 * f;
  }

  // Dyall integrals: diagonal core and virtual energies, core-folded active part.
  const auto eff = partition_active_integrals(full, part);
  auto dyall = MolecularIntegrals::zeros(n, full.n_elec, full.ms2);
  for (auto c : part.core)
    dyall.h1(ix(c), ix(c)) = eps[ix(c)];
  for (auto v : part.virtual_orbitals)
    dyall.h1(ix(v), ix(v)) = eps[ix(v)];
  const auto &act = part.active;
  for (std::size_t t = 0; t < act.size(); ++t)
    for (std::size_t u = 0; u < act.size(); ++u) {
      dyall.h1(ix(act[t]), ix(act[u])) = eff.h1(ix(t), ix(u));
      for (std::size_t v = 0; v < act.size(); ++v)
        for (std::size_t w = 0; w < act.size(); ++w)
          dyall.h2[dyall.eri_index(act[t], act[u], act[v], act[w])] = eff.eri(t, u, v, w);
    }
  const Eigen::MatrixXd h0 = determinant_hamiltonian(dyall, dets);
  const double e0 = psi.dot(h0 * psi);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(h0(q_idx, q_idx).eval());
  const Eigen::VectorXd b = (h * psi)(q_idx);
  const Eigen::VectorXd proj = eq.eigenvectors().transpose() * b;
  double e2 = 0.0;
  for (Index k = 0; k < proj.size(); ++k)
    e2 -= proj[k] * proj[k] / (eq.eigenvalues()[k] - e0);
  return e2;
}

} // namespace qew::oracle
