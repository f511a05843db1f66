/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/rdm.h"

#include "qew/fermion_operator.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qew {

namespace {

using cplx = std::complex<double>;

inline constexpr std::size_t max_rdm_modes = 20;

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

// JW sign of a_q / a+_q on `det`: parity of occupied modes below q.
int sign_below(std::uint64_t det, std::size_t q) {
  return (std::popcount(det & ((std::uint64_t{1} << q) - 1)) & 1) ? -1 : 1;
}

// Sorts `idx` ascending and returns the permutation parity, or 0 on a repeat.
int sort_with_parity(std::vector<std::size_t> &idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
      if (idx[j - 1] == idx[j])
        return 0;
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  return sign;
}

std::uint64_t mask_of(const std::vector<std::size_t> &idx) {
  std::uint64_t m = 0;
  for (auto i : idx)
    m |= std::uint64_t{1} << i;
  return m;
}

std::vector<std::size_t> modes_of(std::uint64_t mask) {
  std::vector<std::size_t> out;
  for (; mask; mask &= mask - 1)
    out.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
  return out;
}

int alpha_count(std::uint64_t mask) {
  return std::popcount(mask & 0x5555555555555555ULL);
}

// Pauli expectations of a plan from per-group outcome weights.
RdmSet assemble(const RdmMeasurementPlan &plan, const std::vector<double> &expect,
                const std::vector<bool> &valid) {
  RdmSet out(plan.n_modes, plan.max_order);
  for (const auto &e : plan.elements) {
    cplx v = 0.0;
    bool ok = true;
    for (const auto &[j, c] : e.terms) {
      if (!valid[plan.pauli_group[j]]) {
        ok = false;
        break;
      }
      v += c * expect[j];
    }
    if (!ok) {
      out.invalid_elements += (e.row == e.col) ? 1 : 2;
      v = 0.0;
    }
    out.block(e.order)(ix(e.row), ix(e.col)) = v;
    if (e.row != e.col)
      out.block(e.order)(ix(e.col), ix(e.row)) = std::conj(v);
    else
      out.block(e.order)(ix(e.row), ix(e.col)) = v.real();
  }
  return out;
}

template <class Weights>
void group_expectations(const RdmMeasurementPlan &plan, std::size_t g, const Weights &weights,
                        double total, std::vector<double> &expect) {
  std::vector<std::size_t> members;
  for (std::size_t j = 0; j < plan.paulis.size(); ++j)
    if (plan.pauli_group[j] == g)
      members.push_back(j);
  std::vector<double> acc(members.size(), 0.0);
  for (const auto &[outcome, w] : weights)
    for (std::size_t m = 0; m < members.size(); ++m) {
      const auto s = plan.paulis[members[m]].support();
      acc[m] += static_cast<double>(w) * ((std::popcount(outcome & s) & 1) ? -1.0 : 1.0);
    }
  for (std::size_t m = 0; m < members.size(); ++m)
    expect[members[m]] = plan.paulis[members[m]].is_identity() ? 1.0 : acc[m] / total;
}

} // namespace

std::vector<std::uint64_t> mode_subsets(std::size_t n_modes, int k) {
  if (n_modes > max_rdm_modes)
    throw std::invalid_argument("too many modes for RDM storage");
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n_modes); ++m)
    if (std::popcount(m) == k)
      out.push_back(m);
  return out;
}

RdmSet::RdmSet(std::size_t n_modes, int max_order) : n_(n_modes) {
  if (max_order < 1 || max_order > max_rdm_order)
    throw std::invalid_argument("RDM order must be between 1 and 4, got " +
                                std::to_string(max_order));
  for (int k = 1; k <= max_order; ++k) {
    subsets_.push_back(mode_subsets(n_modes, k));
    const auto m = ix(subsets_.back().size());
    blocks_.push_back(Eigen::MatrixXcd::Zero(m, m));
  }
}

std::size_t RdmSet::index(int k) const {
  if (k < 1 || k > max_order())
    throw std::out_of_range("RDM order " + std::to_string(k) + " not available");
  return static_cast<std::size_t>(k - 1);
}

std::size_t RdmSet::position(int k, std::uint64_t subset) const {
  const auto &s = subsets(k);
  auto it = std::lower_bound(s.begin(), s.end(), subset);
  if (it == s.end() || *it != subset)
    throw std::out_of_range("subset is not of the requested order");
  return static_cast<std::size_t>(it - s.begin());
}

cplx RdmSet::element(const std::vector<std::size_t> &creators,
                     const std::vector<std::size_t> &annihilators) const {
  if (creators.size() != annihilators.size())
    throw std::invalid_argument("RDM element needs equal creator and annihilator counts");
  const int k = static_cast<int>(creators.size());
  auto c = creators, a = annihilators;
  for (auto i : c)
    if (i >= n_)
      throw std::out_of_range("RDM index out of range");
  for (auto i : a)
    if (i >= n_)
      throw std::out_of_range("RDM index out of range");
  const int sign = sort_with_parity(c) * sort_with_parity(a);
  if (sign == 0)
    return 0.0;
  return static_cast<double>(sign) *
         block(k)(ix(position(k, mask_of(c))), ix(position(k, mask_of(a))));
}

cplx RdmSet::trace(int k) const {
  double fact = 1.0;
  for (int i = 2; i <= k; ++i)
    fact *= i;
  return fact * block(k).trace();
}

RdmSet rdm_from_statevector(const StateVector &state, int max_order) {
  if (max_order < 1 || max_order > max_rdm_order)
    throw std::invalid_argument("RDM order must be between 1 and 4, got " +
                                std::to_string(max_order));
  const std::size_t n = state.qubit_count();
  RdmSet out(n, max_order);
  const auto &amps = state.amplitudes();
  for (int k = 1; k <= max_order; ++k) {
    const auto &subsets = out.subsets(k);
    auto &block = out.block(k);
    std::vector<std::size_t> pos(std::size_t{1} << n, 0);
    for (std::size_t i = 0; i < subsets.size(); ++i)
      pos[subsets[i]] = i;
    for (Eigen::Index d = 0; d < amps.size(); ++d) {
      if (amps[d] == 0.0)
        continue;
      const auto det = static_cast<std::uint64_t>(d);
      if (std::popcount(det) < k)
        continue;
      for (std::size_t qi = 0; qi < subsets.size(); ++qi) {
        const auto q = subsets[qi];
        if ((q & det) != q)
          continue;
        // a_qk .. a_q1, smallest mode first
        int s_q = 1;
        std::uint64_t mid = det;
        for (auto m : modes_of(q)) {
          s_q *= sign_below(mid, m);
          mid &= ~(std::uint64_t{1} << m);
        }
        for (std::size_t pi = 0; pi < subsets.size(); ++pi) {
          const auto p = subsets[pi];
          if (p & mid)
            continue;
          // a+_p1 .. a+_pk, largest mode first
          int s_p = 1;
          std::uint64_t fin = mid;
          const auto pm = modes_of(p);
          for (auto it = pm.rbegin(); it != pm.rend(); ++it) {
            s_p *= sign_below(fin, *it);
            fin |= std::uint64_t{1} << *it;
          }
          const cplx bra = std::conj(amps[static_cast<Eigen::Index>(fin)]);
          if (bra != 0.0)
            block(ix(pi), ix(qi)) += static_cast<double>(s_q * s_p) * bra * amps[d];
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXcd contract_last_index(const RdmSet &rdms, int k) {
  if (k < 2)
    throw std::invalid_argument("contraction needs order >= 2");
  const auto &lower = rdms.subsets(k - 1);
  const std::size_t n = rdms.mode_count();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(ix(lower.size()), ix(lower.size()));
  for (std::size_t i = 0; i < lower.size(); ++i)
    for (std::size_t j = 0; j < lower.size(); ++j) {
      auto c = modes_of(lower[i]), a = modes_of(lower[j]);
      c.push_back(0);
      a.push_back(0);
      cplx sum = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        c.back() = q;
        a.back() = q;
        sum += rdms.element(c, a);
      }
      out(ix(i), ix(j)) = sum;
    }
  return out;
}

double max_rdm_difference(const RdmSet &a, const RdmSet &b) {
  if (a.mode_count() != b.mode_count())
    throw std::invalid_argument("RDM sets have different mode counts");
  double m = 0.0;
  for (int k = 1; k <= std::min(a.max_order(), b.max_order()); ++k)
    m = std::max(m, (a.block(k) - b.block(k)).cwiseAbs().maxCoeff());
  return m;
}

void hermitize(RdmSet &rdms) {
  for (int k = 1; k <= rdms.max_order(); ++k) {
    auto &b = rdms.block(k);
    b = (0.5 * (b + b.adjoint())).eval();
  }
}

std::string write_rdm_text(const RdmSet &rdms) {
  std::string out;
  for (int k = 1; k <= rdms.max_order(); ++k) {
    const auto &s = rdms.subsets(k);
    const auto &b = rdms.block(k);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j) {
        const cplx v = b(ix(i), ix(j));
        if (v == 0.0)
          continue;
        out += std::to_string(k);
        for (auto m : modes_of(s[i]))
          out += " " + std::to_string(m);
        for (auto m : modes_of(s[j]))
          out += " " + std::to_string(m);
        out += " " + format_real(v.real());
        if (v.imag() != 0.0)
          out += " " + format_real(v.imag());
        out += "\n";
      }
  }
  return out;
}

RdmSet parse_rdm_text(std::string_view text, std::size_t n_modes) {
  struct Entry {
    int k;
    std::vector<std::size_t> c, a;
    cplx v;
  };
  std::vector<Entry> entries;
  int max_k = 1;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;)
      tok.push_back(t);
    auto fail = [&](const std::string &why) {
      return std::invalid_argument("RDM text line " + std::to_string(line_no) + ": " + why);
    };
    Entry e;
    try {
      e.k = std::stoi(tok.at(0));
      if (e.k < 1 || e.k > max_rdm_order)
        throw fail("order out of range");
      const std::size_t k = static_cast<std::size_t>(e.k);
      if (tok.size() != 2 * k + 2 && tok.size() != 2 * k + 3)
        throw fail("wrong field count");
      for (std::size_t i = 0; i < k; ++i) {
        e.c.push_back(std::stoul(tok[1 + i]));
        e.a.push_back(std::stoul(tok[1 + k + i]));
      }
      const double re = std::stod(tok[2 * k + 1]);
      const double im = tok.size() == 2 * k + 3 ? std::stod(tok[2 * k + 2]) : 0.0;
      e.v = {re, im};
    } catch (const std::invalid_argument &err) {
      if (std::string(err.what()).rfind("RDM text", 0) == 0)
        throw;
      throw fail("malformed number");
    } catch (const std::out_of_range &) {
      throw fail("malformed line");
    }
    for (std::size_t i = 0; i + 1 < e.c.size(); ++i)
      if (e.c[i] >= e.c[i + 1] || e.a[i] >= e.a[i + 1])
        throw fail("indices must be strictly ascending");
    for (std::size_t i = 0; i < e.c.size(); ++i)
      if (e.c[i] >= n_modes || e.a[i] >= n_modes)
        throw fail("index out of range");
    max_k = std::max(max_k, e.k);
    entries.push_back(std::move(e));
  }
  RdmSet out(n_modes, max_k);
  for (const auto &e : entries)
    out.block(e.k)(ix(out.position(e.k, mask_of(e.c))), ix(out.position(e.k, mask_of(e.a)))) =
        e.v;
  return out;
}

RdmMeasurementPlan plan_rdm_measurement(std::size_t n_modes, int max_order,
                                        bool spin_conserving) {
  if (max_order < 1 || max_order > max_rdm_order)
    throw std::invalid_argument("RDM order must be between 1 and 4, got " +
                                std::to_string(max_order));
  RdmMeasurementPlan plan;
  plan.n_modes = n_modes;
  plan.max_order = max_order;
  std::map<PauliString, std::size_t> index;
  for (int k = 1; k <= max_order; ++k) {
    const auto subsets = mode_subsets(n_modes, k);
    for (std::size_t i = 0; i < subsets.size(); ++i)
      for (std::size_t j = i; j < subsets.size(); ++j) {
        if (spin_conserving && alpha_count(subsets[i]) != alpha_count(subsets[j]))
          continue;
        LadderProduct product;
        for (auto m : modes_of(subsets[i]))
          product.push_back({m, true});
        const auto an = modes_of(subsets[j]);
        for (auto it = an.rbegin(); it != an.rend(); ++it)
          product.push_back({*it, false});
        FermionOperator op;
        op.add_term(1.0, product);
        RdmMeasurementPlan::Element e{k, i, j, {}};
        const auto qubit_op = jordan_wigner(op, n_modes);
        for (const auto &[p, c] : qubit_op.terms()) {
          auto [it, fresh] = index.emplace(p, plan.paulis.size());
          if (fresh)
            plan.paulis.push_back(p);
          e.terms.emplace_back(it->second, c);
        }
        plan.elements.push_back(std::move(e));
      }
  }
  QubitOperator all(n_modes);
  for (const auto &p : plan.paulis)
    all.add_term(p, 1.0);
  plan.groups = group_pauli_terms(all);
  std::map<PauliString, std::size_t> group_of;
  for (std::size_t g = 0; g < plan.groups.size(); ++g)
    for (const auto &t : plan.groups[g].terms)
      group_of[t.pauli] = g;
  for (const auto &p : plan.paulis)
    plan.pauli_group.push_back(group_of.at(p));
  return plan;
}

RdmSet rdm_from_shots(const RdmMeasurementPlan &plan, const std::vector<ShotTable> &tables,
                      const SymmetrySpec *symmetry) {
  if (tables.size() != plan.groups.size())
    throw std::invalid_argument("one shot table per RDM measurement group is required");
  std::vector<double> expect(plan.paulis.size(), 0.0);
  std::vector<bool> valid(plan.groups.size(), true);
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const ShotTable table =
        symmetry ? pmsv_filter(tables[g], plan.groups[g], *symmetry).table : tables[g];
    if (table.shots_kept <= 0) {
      valid[g] = false;
      continue;
    }
    group_expectations(plan, g, table.counts, static_cast<double>(table.shots_kept), expect);
  }
  return assemble(plan, expect, valid);
}

RdmSet rdm_from_shots(const RdmMeasurementPlan &plan, const StateVector &state,
                      std::int64_t shots_per_group, const SymmetrySpec *symmetry,
                      const NoiseSpec *noise, std::uint64_t seed) {
  if (shots_per_group <= 0)
    throw std::invalid_argument("shot budget must be positive");
  auto tables = measure_groups(state, plan.groups, allocate_shots(plan.groups, shots_per_group),
                               noise, seed);
  return rdm_from_shots(plan, tables, symmetry);
}

ExpectationEstimate rdm_trace_estimate(const RdmMeasurementPlan &plan,
                                       const std::vector<ShotTable> &tables, int k,
                                       const SymmetrySpec *symmetry) {
  if (k < 1 || k > plan.max_order)
    throw std::invalid_argument("trace order not in plan");
  if (tables.size() != plan.groups.size())
    throw std::invalid_argument("one shot table per RDM measurement group is required");
  double fact = 1.0;
  for (int i = 2; i <= k; ++i)
    fact *= i;
  std::vector<double> weight(plan.paulis.size(), 0.0);
  for (const auto &e : plan.elements)
    if (e.order == k && e.row == e.col)
      for (const auto &[j, c] : e.terms)
        weight[j] += fact * c.real();
  std::vector<MeasurementGroup> groups;
  std::vector<ShotTable> kept;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    MeasurementGroup mg{plan.groups[g].id, plan.groups[g].basis, {}};
    for (std::size_t j = 0; j < plan.paulis.size(); ++j)
      if (plan.pauli_group[j] == g && weight[j] != 0.0)
        mg.terms.push_back({plan.paulis[j], weight[j]});
    if (mg.terms.empty())
      continue;
    kept.push_back(symmetry ? pmsv_filter(tables[g], plan.groups[g], *symmetry).table
                            : tables[g]);
    groups.push_back(std::move(mg));
  }
  return estimate_expectation(groups, kept);
}

RdmSet rdm_from_probabilities(const RdmMeasurementPlan &plan, const StateVector &state) {
  std::vector<double> expect(plan.paulis.size(), 0.0);
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const auto probs = outcome_probabilities(state, plan.groups[g].basis);
    std::vector<std::pair<std::uint64_t, double>> weights;
    for (std::size_t j = 0; j < probs.size(); ++j)
      weights.emplace_back(j, probs[j]);
    group_expectations(plan, g, weights, 1.0, expect);
  }
  return assemble(plan, expect, std::vector<bool>(plan.groups.size(), true));
}

std::vector<std::uint64_t> sector_determinants(std::size_t n_modes, int n_elec, int sz2) {
  std::vector<std::uint64_t> out;
  for (auto m : mode_subsets(n_modes, n_elec))
    if (2 * alpha_count(m) - n_elec == sz2)
      out.push_back(m);
  return out;
}

Eigen::MatrixXcd sector_density(const RdmSet &rdms, int n_elec, int sz2) {
  if (n_elec < 1 || n_elec > rdms.max_order())
    throw std::invalid_argument("sector density needs the " + std::to_string(n_elec) +
                                "-body RDM");
  const auto dets = sector_determinants(rdms.mode_count(), n_elec, sz2);
  const auto d = ix(dets.size());
  Eigen::MatrixXcd rho(d, d);
  const auto &block = rdms.block(n_elec);
  std::vector<std::size_t> pos;
  for (auto det : dets)
    pos.push_back(rdms.position(n_elec, det));
  // gamma_N[P; Q] = c_P^* c_Q: annihilating a full determinant smallest
  // mode first never crosses an occupied mode, so no sign arises.
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      rho(i, j) = block(ix(pos[static_cast<std::size_t>(j)]), ix(pos[static_cast<std::size_t>(i)]));
  rho = (0.5 * (rho + rho.adjoint())).eval();
  const double tr = rho.trace().real();
  if (!(tr > 0.0))
    throw std::invalid_argument("sector density has non-positive trace");
  return rho / tr;
}

} // namespace qew
