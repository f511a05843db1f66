/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/pt2.h"

#include "qew/active_space.h"
#include "qew/fermion_operator.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qew {

namespace {

using Eigen::Index;
using cplx = std::complex<double>;

Index ix(std::size_t i) { return static_cast<Index>(i); }

const std::vector<std::string> class_names = {"0h1p", "0h2p", "1h0p", "1h1p",
                                              "1h2p", "2h0p", "2h1p", "2h2p"};

// Spin-orbital view of spatial integrals (interleaved, so = 2p + spin).
struct SpinIntegrals {
  const MolecularIntegrals &ints;

  double h(std::size_t p, std::size_t q) const {
    return (p % 2 == q % 2) ? ints.h1(ix(p / 2), ix(q / 2)) : 0.0;
  }
  // <pq|rs> = (pr|qs)
  double g(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const {
    if (p % 2 != r % 2 || q % 2 != s % 2)
      return 0.0;
    return ints.eri(p / 2, r / 2, q / 2, s / 2);
  }
  double anti(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const {
    return g(p, q, r, s) - g(p, q, s, r);
  }
};

std::vector<std::size_t> bits_of(std::uint64_t m) {
  std::vector<std::size_t> out;
  for (; m; m &= m - 1)
    out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
  return out;
}

int ladder_sign(const LadderProduct &product, std::uint64_t det) {
  const auto r = apply_ladder_product(product, det);
  if (!r)
    throw std::logic_error("excitation annihilated its determinant");
  return r->first;
}

// <bra|H|ket> without the constant term.
double slater_condon(const SpinIntegrals &si, std::uint64_t bra, std::uint64_t ket) {
  const std::uint64_t holes = ket & ~bra, parts = bra & ~ket;
  const int n = std::popcount(holes);
  if (n != std::popcount(parts) || n > 2)
    return 0.0;
  const auto occ = bits_of(ket);
  if (n == 0) {
    double e = 0.0;
    for (std::size_t a = 0; a < occ.size(); ++a) {
      e += si.h(occ[a], occ[a]);
      for (std::size_t b = 0; b < a; ++b)
        e += si.anti(occ[a], occ[b], occ[a], occ[b]);
    }
    return e;
  }
  if (n == 1) {
    const auto i = static_cast<std::size_t>(std::countr_zero(holes));
    const auto a = static_cast<std::size_t>(std::countr_zero(parts));
    double v = si.h(a, i);
    for (auto j : occ)
      v += si.anti(a, j, i, j);
    return v == 0.0 ? 0.0 : v * ladder_sign({{a, true}, {i, false}}, ket);
  }
  const auto h = bits_of(holes), p = bits_of(parts);
  const double v = si.anti(p[0], p[1], h[0], h[1]);
  return v == 0.0
             ? 0.0
             : v * ladder_sign({{p[0], true}, {p[1], true}, {h[1], false}, {h[0], false}}, ket);
}

struct SectorSpectrum {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;
  std::map<std::uint64_t, std::size_t> position;
};

Eigen::MatrixXd sector_matrix(const SpinIntegrals &si, const std::vector<std::uint64_t> &dets) {
  const Index d = ix(dets.size());
  Eigen::MatrixXd h(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j <= i; ++j) {
      h(i, j) = slater_condon(si, dets[static_cast<std::size_t>(i)],
                              dets[static_cast<std::size_t>(j)]);
      h(j, i) = h(i, j);
    }
  return h;
}

int alpha_count(std::uint64_t m) { return std::popcount(m & 0x5555555555555555ULL); }

void check_sizes(const MolecularIntegrals &full, const OrbitalPartition &partition) {
  partition.validate(full.n_orb);
  if (2 * full.n_orb > 64)
    throw std::invalid_argument("second-order correction supports at most 32 orbitals");
}

} // namespace

void OrbitalPartition::validate(std::size_t n_orb) const {
  std::vector<int> seen(n_orb, 0);
  for (const auto *set : {&core, &active, &virtual_orbitals})
    for (auto p : *set) {
      if (p >= n_orb)
        throw std::invalid_argument("orbital " + std::to_string(p) + " out of range");
      if (seen[p]++)
        throw std::invalid_argument("orbital " + std::to_string(p) +
                                    " appears in more than one role");
    }
  if (std::count(seen.begin(), seen.end(), 0) != 0)
    throw std::invalid_argument("orbital partition does not cover every orbital");
  if (active.empty())
    throw std::invalid_argument("orbital partition has no active orbitals");
}

MolecularIntegrals partition_active_integrals(const MolecularIntegrals &full,
                                              const OrbitalPartition &partition) {
  partition.validate(full.n_orb);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(ix(full.n_orb), ix(full.n_orb));
  return active_space_integrals(full, identity, partition.core, partition.active);
}

void check_effective_integrals(const MolecularIntegrals &effective,
                               const MolecularIntegrals &full,
                               const OrbitalPartition &partition, double tol) {
  const auto derived = partition_active_integrals(full, partition);
  if (effective.n_orb != derived.n_orb || effective.n_elec != derived.n_elec ||
      effective.ms2 != derived.ms2)
    throw std::invalid_argument("effective integrals do not match the partition");
  double diff = std::abs(effective.e_core - derived.e_core);
  diff = std::max(diff, (effective.h1 - derived.h1).cwiseAbs().maxCoeff());
  for (std::size_t k = 0; k < derived.h2.size(); ++k)
    diff = std::max(diff, std::abs(effective.h2[k] - derived.h2[k]));
  if (diff > tol)
    throw std::invalid_argument("effective integrals differ from the partition's by " +
                                format_real(diff));
}

Pt2Result pt2_from_density(const Eigen::MatrixXcd &rho, const MolecularIntegrals &full,
                           const OrbitalPartition &partition, const Pt2Options &options) {
  check_sizes(full, partition);
  const std::size_t na = partition.active.size(), nc = partition.core.size();
  const int n_act_elec = full.n_elec - 2 * static_cast<int>(nc);
  if (n_act_elec < 0 || n_act_elec > 2 * static_cast<int>(na) || std::abs(full.ms2) > n_act_elec)
    throw std::invalid_argument("partition incompatible with the electron count");

  // Reordered basis: active, core, virtual.
  std::vector<std::size_t> order = partition.active;
  order.insert(order.end(), partition.core.begin(), partition.core.end());
  order.insert(order.end(), partition.virtual_orbitals.begin(), partition.virtual_orbitals.end());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(ix(full.n_orb), ix(full.n_orb));
  const auto ints = active_space_integrals(full, identity, {}, order);
  auto eff = partition_active_integrals(full, partition);
  eff.e_core = 0.0;
  const SpinIntegrals si{ints}, sa{eff};

  const auto dets = sector_determinants(2 * na, n_act_elec, full.ms2);
  const Index d = ix(dets.size());
  if (rho.rows() != d || rho.cols() != d)
    throw std::invalid_argument("density dimension does not match the active sector");
  if (!rho.allFinite())
    throw std::invalid_argument("density has non-finite entries");

  Pt2Result out;
  const Eigen::MatrixXd h_act = sector_matrix(sa, dets);
  out.reference_active_energy = (rho * h_act).trace().real();

  // Spatial active one-body density.
  std::map<std::uint64_t, Index> det_pos;
  for (Index i = 0; i < d; ++i)
    det_pos[dets[static_cast<std::size_t>(i)]] = i;
  Eigen::MatrixXd d_act = Eigen::MatrixXd::Zero(ix(na), ix(na));
  for (std::size_t t = 0; t < na; ++t)
    for (std::size_t u = 0; u < na; ++u)
      for (std::size_t s = 0; s < 2; ++s)
        for (Index j = 0; j < d; ++j) {
          const auto r = apply_ladder_product({{2 * t + s, true}, {2 * u + s, false}},
                                              dets[static_cast<std::size_t>(j)]);
          if (r)
            d_act(ix(t), ix(u)) += r->first * rho(j, det_pos.at(r->second)).real();
        }

  // Generalized Fock diagonal in the reordered basis.
  const std::size_t n = full.n_orb;
  Eigen::MatrixXd dens = Eigen::MatrixXd::Zero(ix(n), ix(n));
  dens.topLeftCorner(ix(na), ix(na)) = d_act;
  for (std::size_t c = na; c < na + nc; ++c)
    dens(ix(c), ix(c)) = 2.0;
  Eigen::VectorXd eps(ix(n));
  for (std::size_t p = 0; p < n; ++p) {
    double f = ints.h1(ix(p), ix(p));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s)
        if (dens(ix(r), ix(s)) != 0.0)
          f += dens(ix(r), ix(s)) * (ints.eri(p, p, r, s) - 0.5 * ints.eri(p, r, s, p));
    eps[ix(p)] = f;
  }
  out.orbital_energies.resize(ix(n));
  for (std::size_t p = 0; p < n; ++p)
    out.orbital_energies[ix(order[p])] = eps[ix(p)];

  const std::uint64_t act_mask = (std::uint64_t{1} << (2 * na)) - 1;
  const std::uint64_t core_mask = ((std::uint64_t{1} << (2 * (na + nc))) - 1) & ~act_mask;
  auto is_core = [&](std::size_t m) { return m >= 2 * na && m < 2 * (na + nc); };
  auto is_virt = [&](std::size_t m) { return m >= 2 * (na + nc); };
  auto full_mode = [&](std::size_t m) { return 2 * order[m / 2] + m % 2; };

  // Couplings <G|H|F_d> to determinants outside the reference space,
  // grouped by their core/virtual occupation.
  std::map<std::uint64_t, std::map<std::uint64_t, Eigen::VectorXd>> blocks;
  const std::size_t n_modes = 2 * n;
  for (Index di = 0; di < d; ++di) {
    const std::uint64_t f = dets[static_cast<std::size_t>(di)] | core_mask;
    const auto occ = bits_of(f);
    std::vector<std::size_t> empty;
    for (std::size_t m = 0; m < n_modes; ++m)
      if (!((f >> m) & 1))
        empty.push_back(m);
    auto add = [&](std::uint64_t g, double v) {
      if (v == 0.0)
        return;
      auto &vec = blocks[g & ~act_mask][g & act_mask];
      if (vec.size() == 0)
        vec = Eigen::VectorXd::Zero(d);
      vec[di] += v;
    };
    for (auto i : occ)
      for (auto a : empty) {
        if (i % 2 != a % 2 || !(is_core(i) || is_virt(a)))
          continue;
        const std::uint64_t g = (f & ~(std::uint64_t{1} << i)) | (std::uint64_t{1} << a);
        add(g, slater_condon(si, g, f));
      }
    for (std::size_t x = 0; x < occ.size(); ++x)
      for (std::size_t y = x + 1; y < occ.size(); ++y)
        for (std::size_t u = 0; u < empty.size(); ++u)
          for (std::size_t w = u + 1; w < empty.size(); ++w) {
            const auto i = occ[x], j = occ[y], a = empty[u], b = empty[w];
            if (!(is_core(i) || is_core(j) || is_virt(a) || is_virt(b)))
              continue;
            if ((i % 2) + (j % 2) != (a % 2) + (b % 2))
              continue;
            const std::uint64_t g = (f & ~(std::uint64_t{1} << i) & ~(std::uint64_t{1} << j)) |
                                    (std::uint64_t{1} << a) | (std::uint64_t{1} << b);
            add(g, slater_condon(si, g, f));
          }
  }

  std::map<std::pair<int, int>, SectorSpectrum> spectra;
  std::map<std::string, Pt2ClassTotal> totals;
  for (const auto &name : class_names)
    totals[name] = {name, 0.0, 0};
  const double coupling_floor = 1e-14;
  for (const auto &[key, rows] : blocks) {
    const std::uint64_t g_act = rows.begin()->first;
    const int n_prime = std::popcount(g_act);
    const int sz_prime = 2 * alpha_count(g_act) - n_prime;
    auto it = spectra.find({n_prime, sz_prime});
    if (it == spectra.end()) {
      SectorSpectrum s;
      const auto sdets = sector_determinants(2 * na, n_prime, sz_prime);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sector_matrix(sa, sdets));
      s.energies = es.eigenvalues();
      s.vectors = es.eigenvectors();
      for (std::size_t k = 0; k < sdets.size(); ++k)
        s.position[sdets[k]] = k;
      it = spectra.emplace(std::make_pair(n_prime, sz_prime), std::move(s)).first;
    }
    const auto &spec = it->second;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(spec.vectors.rows(), d);
    for (const auto &[ga, vec] : rows)
      m.row(ix(spec.position.at(ga))) = vec.transpose();
    const Eigen::MatrixXcd w = (spec.vectors.transpose() * m).cast<cplx>();
    const Eigen::MatrixXcd wr = w * rho;

    std::vector<std::size_t> holes, particles;
    double shift = 0.0;
    for (auto mode : bits_of(core_mask & ~key)) {
      holes.push_back(full_mode(mode));
      shift -= eps[ix(mode / 2)];
    }
    for (auto mode : bits_of(key & ~core_mask)) {
      particles.push_back(full_mode(mode));
      shift += eps[ix(mode / 2)];
    }
    const std::string cls =
        std::to_string(holes.size()) + "h" + std::to_string(particles.size()) + "p";
    for (Index k = 0; k < w.rows(); ++k) {
      const double coupling = wr.row(k).dot(w.row(k)).real();
      if (std::abs(coupling) <= coupling_floor)
        continue;
      const double denom = spec.energies[k] + shift - out.reference_active_energy;
      if (std::abs(denom) < options.denominator_cutoff) {
        ++out.skipped;
        continue;
      }
      const double e = -coupling / denom;
      out.delta_e += e;
      auto &t = totals.at(cls);
      t.energy += e;
      ++t.perturbers;
      out.perturbers.push_back(
          {cls, holes, particles, static_cast<std::size_t>(k), coupling, denom, e});
    }
  }
  for (const auto &name : class_names)
    out.classes.push_back(totals.at(name));
  if (out.skipped > 0)
    out.warnings.push_back(std::to_string(out.skipped) +
                           " perturbers skipped: |denominator| below " +
                           format_real(options.denominator_cutoff));
  return out;
}

Pt2Result pt2_correction(const StateVector &active_state, const MolecularIntegrals &full,
                         const OrbitalPartition &partition, const Pt2Options &options) {
  check_sizes(full, partition);
  const std::size_t na = partition.active.size();
  if (active_state.qubit_count() != 2 * na)
    throw std::invalid_argument("active state qubit count does not match the partition");
  const int n_act_elec = full.n_elec - 2 * static_cast<int>(partition.core.size());
  if (n_act_elec < 0)
    throw std::invalid_argument("partition incompatible with the electron count");
  const auto dets = sector_determinants(2 * na, n_act_elec, full.ms2);
  Eigen::VectorXcd c(ix(dets.size()));
  for (std::size_t i = 0; i < dets.size(); ++i)
    c[ix(i)] = active_state.amplitudes()[static_cast<Index>(dets[i])];
  const double inside = c.squaredNorm();
  if (std::abs(inside - active_state.amplitudes().squaredNorm()) > 1e-10 || inside == 0.0)
    throw std::invalid_argument("active state has weight outside its particle sector");
  c /= std::sqrt(inside);
  return pt2_from_density(c * c.adjoint(), full, partition, options);
}

Pt2Result pt2_correction(const RdmSet &rdms, const MolecularIntegrals &full,
                         const OrbitalPartition &partition, double validation_tol,
                         const Pt2Options &options) {
  check_sizes(full, partition);
  const std::size_t na = partition.active.size();
  if (rdms.mode_count() != 2 * na)
    throw std::invalid_argument("RDM mode count does not match the partition");
  const int n_act_elec = full.n_elec - 2 * static_cast<int>(partition.core.size());
  const auto rho = sector_density(rdms, n_act_elec, full.ms2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  const Eigen::VectorXcd c = es.eigenvectors().col(es.eigenvalues().size() - 1);
  const auto dets = sector_determinants(2 * na, n_act_elec, full.ms2);
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(Index{1} << (2 * na));
  for (std::size_t i = 0; i < dets.size(); ++i)
    amps[static_cast<Index>(dets[i])] = c[ix(i)];
  const StateVector state(2 * na, amps);
  const double diff = max_rdm_difference(rdm_from_statevector(state, rdms.max_order()), rdms);
  if (diff > validation_tol)
    throw std::runtime_error("RDMs are not those of a pure state: largest deviation " +
                             format_real(diff) + " exceeds " + format_real(validation_tol));
  return pt2_from_density(c * c.adjoint(), full, partition, options);
}

Pt2Result pt2_from_measured_rdms(const RdmSet &rdms, const MolecularIntegrals &full,
                                 const OrbitalPartition &partition, const Pt2Options &options) {
  check_sizes(full, partition);
  if (rdms.mode_count() != 2 * partition.active.size())
    throw std::invalid_argument("RDM mode count does not match the partition");
  const int n_act_elec = full.n_elec - 2 * static_cast<int>(partition.core.size());
  return pt2_from_density(sector_density(rdms, n_act_elec, full.ms2), full, partition, options);
}

double total_energy(double e_vqe, const Pt2Result &pt2) { return e_vqe + pt2.delta_e; }

nlohmann::json pt2_report(const Pt2Result &result) {
  nlohmann::json j;
  j["delta_e"] = result.delta_e;
  j["reference_active_energy"] = result.reference_active_energy;
  j["skipped"] = result.skipped;
  j["warnings"] = result.warnings;
  j["orbital_energies"] = std::vector<double>(result.orbital_energies.data(),
                                              result.orbital_energies.data() +
                                                  result.orbital_energies.size());
  auto &classes = j["classes"] = nlohmann::json::array();
  for (const auto &c : result.classes)
    classes.push_back({{"class", c.name}, {"energy", c.energy}, {"perturbers", c.perturbers}});
  auto &list = j["perturbers"] = nlohmann::json::array();
  for (const auto &p : result.perturbers)
    list.push_back({{"class", p.excitation_class},
                    {"core_holes", p.core_holes},
                    {"virtual_particles", p.virtual_particles},
                    {"active_root", p.active_root},
                    {"coupling", p.coupling},
                    {"denominator", p.denominator},
                    {"energy", p.energy}});
  return j;
}

} // namespace qew
