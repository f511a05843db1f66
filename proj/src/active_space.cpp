/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/active_space.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace qew {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

Eigen::MatrixXd columns(const Eigen::MatrixXd &m, const std::vector<std::size_t> &cols) {
  Eigen::MatrixXd out(m.rows(), ix(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.col(ix(k)) = m.col(ix(cols[k]));
  return out;
}

void require_closed_shell(const OrbitalBundle &bundle) {
  for (Index k = 0; k < bundle.mo_occ.size(); ++k)
    if (bundle.mo_occ[k] == 1.0)
      throw std::invalid_argument(
          "active-space selection supports closed-shell references only");
}

void check_index_set(const std::vector<std::size_t> &set, std::size_t n,
                     const char *what) {
  std::set<std::size_t> seen;
  for (auto i : set) {
    if (i >= n)
      throw std::out_of_range(std::string(what) + " index " + std::to_string(i) +
                              " out of range");
    if (!seen.insert(i).second)
      throw std::invalid_argument(std::string(what) + " index " + std::to_string(i) +
                                  " repeated");
  }
}

/// (pq|rs) over the columns of `coeff` (n x m) from an n^4 chemist tensor.
std::vector<double> transform_eri(const std::vector<double> &h2, std::size_t n,
                                  const Eigen::MatrixXd &coeff) {
  const auto m = static_cast<std::size_t>(coeff.cols());
  auto c = [&](std::size_t a, std::size_t p) { return coeff(ix(a), ix(p)); };
  // quarter transforms, one index at a time
  std::vector<double> t1(m * n * n * n, 0.0);
  for (std::size_t p = 0; p < m; ++p)
    for (std::size_t a = 0; a < n; ++a) {
      const double w = c(a, p);
      if (w == 0.0)
        continue;
      for (std::size_t rest = 0; rest < n * n * n; ++rest)
        t1[p * n * n * n + rest] += w * h2[a * n * n * n + rest];
    }
  std::vector<double> t2(m * m * n * n, 0.0);
  for (std::size_t p = 0; p < m; ++p)
    for (std::size_t q = 0; q < m; ++q)
      for (std::size_t b = 0; b < n; ++b) {
        const double w = c(b, q);
        if (w == 0.0)
          continue;
        for (std::size_t rest = 0; rest < n * n; ++rest)
          t2[(p * m + q) * n * n + rest] += w * t1[(p * n + b) * n * n + rest];
      }
  std::vector<double> t3(m * m * m * n, 0.0);
  for (std::size_t pq = 0; pq < m * m; ++pq)
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t cc = 0; cc < n; ++cc) {
        const double w = c(cc, r);
        if (w == 0.0)
          continue;
        for (std::size_t d = 0; d < n; ++d)
          t3[(pq * m + r) * n + d] += w * t2[(pq * n + cc) * n + d];
      }
  std::vector<double> out(m * m * m * m, 0.0);
  for (std::size_t pqr = 0; pqr < m * m * m; ++pqr)
    for (std::size_t s = 0; s < m; ++s) {
      double v = 0.0;
      for (std::size_t d = 0; d < n; ++d)
        v += c(d, s) * t3[pqr * n + d];
      out[pqr * m + s] = v;
    }
  return out;
}

} // namespace

void ActiveSpaceSpec::validate() const {
  if (n_active_orbitals < 0 || n_active_electrons < 0 ||
      n_active_electrons > 2 * n_active_orbitals)
    throw std::invalid_argument("active space (" + std::to_string(n_active_electrons) +
                                "e, " + std::to_string(n_active_orbitals) +
                                "o) is inconsistent");
}

std::vector<std::size_t> subset_indices(const OrbitalBundle &bundle, OrbitalSubset subset) {
  std::vector<std::size_t> out;
  for (Index k = 0; k < bundle.mo_occ.size(); ++k)
    if ((bundle.mo_occ[k] > 0.0) == (subset == OrbitalSubset::occupied))
      out.push_back(static_cast<std::size_t>(k));
  return out;
}

Eigen::MatrixXd projected_overlap(const OrbitalBundle &bundle, OrbitalSubset subset) {
  return projected_overlap(bundle, bundle.projector_coeff, subset);
}

Eigen::MatrixXd projected_overlap(const OrbitalBundle &bundle,
                                  const Eigen::MatrixXd &projector_coeff,
                                  OrbitalSubset subset) {
  if (projector_coeff.cols() == 0)
    throw std::invalid_argument("projected_overlap: no projector functions");
  if (projector_coeff.rows() != bundle.ao_overlap.rows())
    throw std::invalid_argument("projected_overlap: projector rows must equal n_ao");
  const auto &s = bundle.ao_overlap;
  const Eigen::MatrixXd m = projector_coeff.transpose() * s * projector_coeff;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > projector_condition_limit)
    throw std::invalid_argument("projected_overlap: projector overlap is singular "
                                "(condition number above 1e12)");
  const Eigen::MatrixXd inv_sqrt = es.eigenvectors() *
                                   es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                   es.eigenvectors().transpose();
  const Eigen::MatrixXd c = columns(bundle.mo_coeff, subset_indices(bundle, subset));
  const Eigen::MatrixXd b = c.transpose() * s * projector_coeff * inv_sqrt;
  const Eigen::MatrixXd sa = b * b.transpose();
  return 0.5 * (sa + sa.transpose());
}

OverlapSpectrum avas_rotate(const Eigen::MatrixXd &overlap) {
  if (overlap.rows() != overlap.cols())
    throw std::invalid_argument("avas_rotate: overlap must be square");
  const Index n = overlap.rows();
  OverlapSpectrum out;
  out.sigma.resize(n);
  out.vectors.resize(n, n);
  if (n == 0)
    return out;
  if ((overlap - overlap.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("avas_rotate: overlap is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(overlap);
  for (Index k = 0; k < n; ++k) {
    out.sigma[k] = es.eigenvalues()[n - 1 - k];
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  for (Index start = 0; start < n;) {
    Index end = start + 1;
    while (end < n && out.sigma[end - 1] - out.sigma[end] <= sigma_zero_tolerance)
      ++end;
    const Index m = end - start;
    if (m > 1) {
      const Eigen::MatrixXd v = out.vectors.middleCols(start, m);
      Eigen::MatrixXd basis(n, m);
      Index found = 0;
      for (Index j = 0; j < n && found < m; ++j) {
        Eigen::VectorXd w = v * v.row(j).transpose();
        for (Index k = 0; k < found; ++k)
          w -= basis.col(k).dot(w) * basis.col(k);
        const double len = w.norm();
        if (len > 1e-6)
          basis.col(found++) = w / len;
      }
      if (found == m)
        out.vectors.middleCols(start, m) = basis;
      const double mean = out.sigma.segment(start, m).mean();
      out.sigma.segment(start, m).setConstant(mean);
    }
    start = end;
  }
  for (Index k = 0; k < n; ++k) {
    Index arg = 0;
    for (Index j = 1; j < n; ++j)
      if (std::abs(out.vectors(j, k)) > std::abs(out.vectors(arg, k)) + 1e-12)
        arg = j;
    if (out.vectors(arg, k) < 0.0)
      out.vectors.col(k) *= -1.0;
  }
  return out;
}

std::vector<std::size_t> AvasResult::active() const {
  std::vector<std::size_t> out = active_occ;
  out.insert(out.end(), active_virt.begin(), active_virt.end());
  return out;
}

ActiveSpaceSpec AvasResult::spec() const {
  return {2 * static_cast<int>(active_occ.size()),
          static_cast<int>(active_occ.size() + active_virt.size())};
}

BlockSelection select_active(const Eigen::VectorXd &sigma_occ,
                             const Eigen::VectorXd &sigma_virt, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("AVAS threshold must lie in [0, 1]");
  BlockSelection sel;
  auto split = [&](const Eigen::VectorXd &sigma, std::vector<std::size_t> &active,
                   std::vector<std::size_t> &rest) {
    for (Index k = 0; k < sigma.size(); ++k) {
      const bool on = sigma[k] >= threshold && sigma[k] > sigma_zero_tolerance;
      (on ? active : rest).push_back(static_cast<std::size_t>(k));
    }
  };
  split(sigma_occ, sel.active_occ, sel.core);
  split(sigma_virt, sel.active_virt, sel.frozen_virt);
  return sel;
}

namespace {

struct Spectra {
  std::vector<std::size_t> occ, virt;
  OverlapSpectrum so, sv;
  Eigen::MatrixXd rotation;
};

Spectra spectra(const OrbitalBundle &bundle, const Eigen::MatrixXd &projectors) {
  bundle.validate();
  require_closed_shell(bundle);
  Spectra s;
  s.occ = subset_indices(bundle, OrbitalSubset::occupied);
  s.virt = subset_indices(bundle, OrbitalSubset::virtual_orbitals);
  s.so = avas_rotate(projected_overlap(bundle, projectors, OrbitalSubset::occupied));
  s.sv = avas_rotate(projected_overlap(bundle, projectors, OrbitalSubset::virtual_orbitals));
  const auto n = ix(bundle.n_mo());
  s.rotation = Eigen::MatrixXd::Zero(n, n);
  auto place = [&](const std::vector<std::size_t> &idx, const Eigen::MatrixXd &u) {
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t k = 0; k < idx.size(); ++k)
        s.rotation(ix(idx[a]), ix(idx[k])) = u(ix(a), ix(k));
  };
  place(s.occ, s.so.vectors);
  place(s.virt, s.sv.vectors);
  return s;
}

AvasResult assemble(const Spectra &s, const BlockSelection &sel, double threshold) {
  AvasResult r;
  r.sigma_occ = s.so.sigma;
  r.sigma_virt = s.sv.sigma;
  r.rotation = s.rotation;
  r.threshold = threshold;
  auto map = [](const std::vector<std::size_t> &local, const std::vector<std::size_t> &idx) {
    std::vector<std::size_t> out;
    for (auto k : local)
      out.push_back(idx[k]);
    return out;
  };
  r.active_occ = map(sel.active_occ, s.occ);
  r.core = map(sel.core, s.occ);
  r.active_virt = map(sel.active_virt, s.virt);
  r.frozen_virt = map(sel.frozen_virt, s.virt);
  return r;
}

} // namespace

AvasResult avas(const OrbitalBundle &bundle, double threshold) {
  return avas(bundle, bundle.projector_coeff, threshold);
}

AvasResult avas(const OrbitalBundle &bundle, const Eigen::MatrixXd &projector_coeff,
                double threshold) {
  auto s = spectra(bundle, projector_coeff);
  return assemble(s, select_active(s.so.sigma, s.sv.sigma, threshold), threshold);
}

AvasResult avas_for_spec(const OrbitalBundle &bundle, const Eigen::MatrixXd &projector_coeff,
                         const ActiveSpaceSpec &spec, double threshold) {
  spec.validate();
  if (spec.n_active_electrons % 2 != 0)
    throw std::invalid_argument("closed-shell active space needs an even electron count");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("AVAS threshold must lie in [0, 1]");
  auto s = spectra(bundle, projector_coeff);
  const auto n_occ = static_cast<std::size_t>(spec.n_active_electrons / 2);
  if (static_cast<int>(n_occ) > spec.n_active_orbitals)
    throw std::invalid_argument("active space has more occupied than total orbitals");
  const auto n_virt = static_cast<std::size_t>(spec.n_active_orbitals) - n_occ;
  if (n_occ > s.occ.size() || n_virt > s.virt.size())
    throw std::invalid_argument("active space (" + std::to_string(spec.n_active_electrons) +
                                "e, " + std::to_string(spec.n_active_orbitals) +
                                "o) does not fit the available orbitals");
  auto check = [&](const Eigen::VectorXd &sigma, std::size_t count, const char *block) {
    if (count == 0)
      return;
    const double v = sigma[ix(count - 1)];
    if (v < threshold || v <= sigma_zero_tolerance)
      throw std::invalid_argument(std::string("AVAS: ") + block + " orbital " +
                                  std::to_string(count) + " has overlap " +
                                  std::to_string(v) + " below threshold " +
                                  std::to_string(threshold));
  };
  check(s.so.sigma, n_occ, "occupied");
  check(s.sv.sigma, n_virt, "virtual");
  BlockSelection sel;
  for (std::size_t k = 0; k < s.occ.size(); ++k)
    (k < n_occ ? sel.active_occ : sel.core).push_back(k);
  for (std::size_t k = 0; k < s.virt.size(); ++k)
    (k < n_virt ? sel.active_virt : sel.frozen_virt).push_back(k);
  return assemble(s, sel, threshold);
}

Eigen::MatrixXd regional_embedding_projectors(const OrbitalBundle &bundle,
                                              const std::vector<std::size_t> &fragment_ao) {
  if (fragment_ao.empty())
    throw std::invalid_argument("regional embedding: empty fragment");
  check_index_set(fragment_ao, bundle.n_ao(), "fragment AO");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(ix(bundle.n_ao()), ix(fragment_ao.size()));
  for (std::size_t k = 0; k < fragment_ao.size(); ++k)
    p(ix(fragment_ao[k]), ix(k)) = 1.0;
  return p;
}

MolecularIntegrals active_space_integrals(const MolecularIntegrals &ints,
                                          const Eigen::MatrixXd &rotation,
                                          const std::vector<std::size_t> &core,
                                          const std::vector<std::size_t> &active) {
  const std::size_t n = ints.n_orb;
  if (rotation.rows() != ix(n) || rotation.cols() != ix(n))
    throw std::invalid_argument("rotation must be n_orb x n_orb");
  check_index_set(core, n, "core");
  check_index_set(active, n, "active");
  for (auto c : core)
    if (std::find(active.begin(), active.end(), c) != active.end())
      throw std::invalid_argument("core and active sets overlap at orbital " +
                                  std::to_string(c));
  const int n_elec = ints.n_elec - 2 * static_cast<int>(core.size());
  if (n_elec < 0 || n_elec > 2 * static_cast<int>(active.size()) ||
      std::abs(ints.ms2) > n_elec)
    throw std::invalid_argument("core/active partition incompatible with electron count");

  std::vector<std::size_t> cols = active;
  cols.insert(cols.end(), core.begin(), core.end());
  const Eigen::MatrixXd c = columns(rotation, cols);
  const Eigen::MatrixXd h = c.transpose() * ints.h1 * c;
  const auto g = transform_eri(ints.h2, n, c);
  const std::size_t m = cols.size(), na = active.size();
  auto eri = [&](std::size_t p, std::size_t q, std::size_t r, std::size_t s) {
    return g[((p * m + q) * m + r) * m + s];
  };

  auto out = MolecularIntegrals::zeros(na, n_elec, ints.ms2);
  double e = ints.e_core;
  for (std::size_t i = na; i < m; ++i) {
    e += 2.0 * h(ix(i), ix(i));
    for (std::size_t j = na; j < m; ++j)
      e += 2.0 * eri(i, i, j, j) - eri(i, j, j, i);
  }
  out.e_core = e;
  for (std::size_t t = 0; t < na; ++t)
    for (std::size_t u = 0; u < na; ++u) {
      double v = h(ix(t), ix(u));
      for (std::size_t i = na; i < m; ++i)
        v += 2.0 * eri(t, u, i, i) - eri(t, i, i, u);
      out.h1(ix(t), ix(u)) = v;
    }
  out.h1 = 0.5 * (out.h1 + out.h1.transpose()).eval();
  // canonical representative fills all eight equivalent slots
  for (std::size_t p = 0; p < na; ++p)
    for (std::size_t q = 0; q <= p; ++q)
      for (std::size_t r = 0; r <= p; ++r)
        for (std::size_t s = 0; s <= (r == p ? q : r); ++s)
          out.set_eri(p, q, r, s, eri(p, q, r, s));
  return out;
}

MolecularIntegrals active_space_integrals(const MolecularIntegrals &ints,
                                          const AvasResult &avas) {
  return active_space_integrals(ints, avas.rotation, avas.core, avas.active());
}

TwoStepResult two_step_reduction(const MolecularIntegrals &ints, const OrbitalBundle &bundle,
                                 const ActiveSpaceSpec &large_spec,
                                 const ActiveSpaceSpec &small_spec,
                                 const TwoStepThresholds &thresholds,
                                 const std::optional<Eigen::MatrixXd> &first_projectors,
                                 const std::optional<Eigen::MatrixXd> &second_projectors) {
  large_spec.validate();
  small_spec.validate();
  if (small_spec.n_active_orbitals > large_spec.n_active_orbitals ||
      small_spec.n_active_electrons > large_spec.n_active_electrons ||
      (large_spec.n_active_electrons - small_spec.n_active_electrons) % 2 != 0)
    throw std::invalid_argument("small active space does not fit inside the large one");
  if (bundle.n_mo() != ints.n_orb)
    throw std::invalid_argument("bundle and integrals disagree on the orbital count");

  TwoStepResult out;
  out.first = avas_for_spec(bundle, first_projectors.value_or(bundle.projector_coeff),
                            large_spec, thresholds.large);
  out.intermediate = active_space_integrals(ints, out.first);

  const auto active = out.first.active();
  out.intermediate_bundle.ao_overlap = bundle.ao_overlap;
  out.intermediate_bundle.mo_coeff = columns(bundle.mo_coeff * out.first.rotation, active);
  out.intermediate_bundle.mo_occ = Eigen::VectorXd::Zero(ix(active.size()));
  out.intermediate_bundle.mo_occ.head(ix(out.first.active_occ.size())).setConstant(2.0);
  out.intermediate_bundle.projector_coeff =
      second_projectors.value_or(bundle.projector_coeff);

  if (small_spec == large_spec) {
    out.second = out.first;
    out.final = out.intermediate;
    return out;
  }
  out.second = avas_for_spec(out.intermediate_bundle,
                             out.intermediate_bundle.projector_coeff, small_spec,
                             thresholds.small);
  out.final = active_space_integrals(out.intermediate, out.second);
  return out;
}

nlohmann::json avas_report(const AvasResult &result) {
  auto vec = [](const Eigen::VectorXd &v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  const auto spec = result.spec();
  return {{"threshold", result.threshold},
          {"sigma_occupied", vec(result.sigma_occ)},
          {"sigma_virtual", vec(result.sigma_virt)},
          {"active_occupied", result.active_occ},
          {"active_virtual", result.active_virt},
          {"core", result.core},
          {"frozen_virtual", result.frozen_virt},
          {"n_active_electrons", spec.n_active_electrons},
          {"n_active_orbitals", spec.n_active_orbitals}};
}

} // namespace qew
