/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/measurement.h"

#include "qew/fermion_operator.h"
#include "qew/parallel.h"
#include "qew/rng.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace qew {

namespace {

bool fits_basis(const PauliString &basis, const PauliString &p) {
  for (std::size_t q = 0; q < p.qubit_count(); ++q) {
    const auto l = p.letter(q);
    if (l != PauliLetter::I && basis.letter(q) != PauliLetter::I && basis.letter(q) != l)
      return false;
  }
  return true;
}

int parity_sign(std::uint64_t outcome, std::uint64_t mask) {
  return (std::popcount(outcome & mask) & 1) ? -1 : 1;
}

double shot_value(const MeasurementGroup &g, std::uint64_t outcome) {
  double v = 0.0;
  for (const auto &t : g.terms)
    if (!t.pauli.is_identity())
      v += t.coefficient * parity_sign(outcome, t.pauli.support());
  return v;
}

bool has_measured_terms(const MeasurementGroup &g) {
  return std::any_of(g.terms.begin(), g.terms.end(),
                     [](const MeasurementTerm &t) { return !t.pauli.is_identity(); });
}

double identity_part(const MeasurementGroup &g) {
  double c = 0.0;
  for (const auto &t : g.terms)
    if (t.pauli.is_identity())
      c += t.coefficient;
  return c;
}

// Weighted outcome distribution -> group contribution (identity excluded).
template <class Weights>
GroupEstimate weighted_estimate(const MeasurementGroup &g, const Weights &weights,
                                double total, std::int64_t shots) {
  GroupEstimate e;
  e.shots = shots;
  if (!has_measured_terms(g))
    return e;
  if (!(total > 0.0)) {
    e.valid = false;
    return e;
  }
  double s1 = 0.0, s2 = 0.0;
  for (const auto &[outcome, w] : weights) {
    const double f = shot_value(g, outcome);
    s1 += static_cast<double>(w) * f;
    s2 += static_cast<double>(w) * f * f;
  }
  e.value = s1 / total;
  if (shots > 0)
    e.variance = std::max(0.0, s2 / total - e.value * e.value) / static_cast<double>(shots);
  return e;
}

ExpectationEstimate combine(const std::vector<MeasurementGroup> &groups,
                            std::vector<GroupEstimate> per_group) {
  ExpectationEstimate out;
  double variance = 0.0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    out.value += identity_part(groups[k]);
    if (!per_group[k].valid) {
      out.invalid_groups.push_back(k);
      continue;
    }
    out.value += per_group[k].value;
    variance += per_group[k].variance;
  }
  out.standard_error = std::sqrt(variance);
  out.groups = std::move(per_group);
  return out;
}

} // namespace

double MeasurementGroup::weight() const {
  double w = 0.0;
  for (const auto &t : terms)
    w += std::abs(t.coefficient);
  return w;
}

std::vector<MeasurementGroup> group_pauli_terms(const QubitOperator &op) {
  if (op.empty())
    throw std::invalid_argument("cannot group an empty operator");
  std::vector<MeasurementTerm> terms;
  for (const auto &[p, c] : op.terms()) {
    if (std::abs(c.imag()) > 1e-10)
      throw std::invalid_argument("grouping requires real coefficients, got " +
                                  format_coefficient(c) + " on " + p.to_string());
    terms.push_back({p, c.real()});
  }
  std::stable_sort(terms.begin(), terms.end(), [](const auto &a, const auto &b) {
    const double ca = std::abs(a.coefficient), cb = std::abs(b.coefficient);
    if (ca != cb)
      return ca > cb;
    return a.pauli < b.pauli;
  });
  std::vector<MeasurementGroup> groups;
  for (const auto &t : terms) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const MeasurementGroup &g) { return fits_basis(g.basis, t.pauli); });
    if (it == groups.end()) {
      groups.push_back({groups.size(), PauliString(op.qubit_count()), {}});
      it = std::prev(groups.end());
    }
    for (std::size_t q = 0; q < t.pauli.qubit_count(); ++q)
      if (t.pauli.letter(q) != PauliLetter::I)
        it->basis.set(q, t.pauli.letter(q));
    it->terms.push_back(t);
  }
  return groups;
}

bool is_valid_grouping(const std::vector<MeasurementGroup> &groups, const QubitOperator &op) {
  std::map<PauliString, double> seen;
  for (const auto &g : groups) {
    for (std::size_t a = 0; a < g.terms.size(); ++a) {
      if (!fits_basis(g.basis, g.terms[a].pauli))
        return false;
      for (std::size_t q = 0; q < g.basis.qubit_count(); ++q)
        if (g.terms[a].pauli.letter(q) != PauliLetter::I &&
            g.terms[a].pauli.letter(q) != g.basis.letter(q))
          return false;
      for (std::size_t b = a + 1; b < g.terms.size(); ++b)
        if (!qubit_wise_commutes(g.terms[a].pauli, g.terms[b].pauli))
          return false;
      if (!seen.emplace(g.terms[a].pauli, g.terms[a].coefficient).second)
        return false;
    }
  }
  if (seen.size() != op.size())
    return false;
  for (const auto &[p, c] : op.terms()) {
    auto it = seen.find(p);
    if (it == seen.end() || it->second != c.real())
      return false;
  }
  return true;
}

void SymmetrySpec::validate(const QubitOperator &h) const {
  for (const auto &s : constraints) {
    if (!s.pauli.is_diagonal())
      throw std::invalid_argument("symmetry " + s.name + " is not a Z-type string");
    if (s.eigenvalue != 1 && s.eigenvalue != -1)
      throw std::invalid_argument("symmetry " + s.name + " eigenvalue must be +1 or -1");
    if (s.pauli.qubit_count() != h.qubit_count())
      throw std::invalid_argument("symmetry " + s.name + " has the wrong qubit count");
    for (const auto &[p, c] : h.terms())
      if (!commutes(s.pauli, p))
        throw std::invalid_argument("symmetry " + s.name + " does not commute with " +
                                    p.to_string());
  }
}

SymmetrySpec parity_symmetries(std::size_t n_spatial, int n_alpha, int n_beta) {
  const std::size_t n = 2 * n_spatial;
  PauliString alpha(n), beta(n), total(n);
  for (std::size_t p = 0; p < n_spatial; ++p) {
    alpha.set(spin_orbital(p, 0), PauliLetter::Z);
    beta.set(spin_orbital(p, 1), PauliLetter::Z);
  }
  for (std::size_t q = 0; q < n; ++q)
    total.set(q, PauliLetter::Z);
  auto sign = [](int count) { return (count % 2 == 0) ? 1 : -1; };
  return {{{"alpha_parity", alpha, sign(n_alpha)},
           {"beta_parity", beta, sign(n_beta)},
           {"total_parity", total, sign(n_alpha + n_beta)}}};
}

PmsvResult pmsv_filter(const ShotTable &table, const MeasurementGroup &group,
                       const SymmetrySpec &symmetry) {
  PmsvResult out;
  for (std::size_t k = 0; k < symmetry.constraints.size(); ++k) {
    const auto &s = symmetry.constraints[k];
    bool diagonal = s.pauli.is_diagonal();
    for (std::size_t q = 0; diagonal && q < s.pauli.qubit_count(); ++q)
      if (s.pauli.letter(q) != PauliLetter::I && group.basis.letter(q) != PauliLetter::Z &&
          group.basis.letter(q) != PauliLetter::I)
        diagonal = false;
    (diagonal ? out.applied : out.skipped).push_back(k);
  }
  out.table.group_id = table.group_id;
  out.table.qubit_count = table.qubit_count;
  out.table.shots_total = table.shots_total;
  for (const auto &[outcome, count] : table.counts) {
    bool keep = true;
    for (auto k : out.applied) {
      const auto &s = symmetry.constraints[k];
      if (parity_sign(outcome, s.pauli.support()) != s.eigenvalue) {
        keep = false;
        break;
      }
    }
    if (keep) {
      out.table.counts[outcome] += count;
      out.table.shots_kept += count;
    } else {
      out.discarded += count;
    }
  }
  return out;
}

std::vector<std::int64_t> allocate_shots(const std::vector<MeasurementGroup> &groups,
                                         std::int64_t shots_per_group, ShotAllocation mode) {
  if (shots_per_group <= 0)
    throw std::invalid_argument("shots per group must be positive");
  const auto n = static_cast<std::int64_t>(groups.size());
  std::vector<std::int64_t> out(groups.size(), shots_per_group);
  double total_weight = 0.0;
  for (const auto &g : groups)
    total_weight += g.weight();
  if (mode == ShotAllocation::uniform || !(total_weight > 0.0))
    return out;
  const std::int64_t spare = shots_per_group * n - n;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t used = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const double exact = static_cast<double>(spare) * groups[k].weight() / total_weight;
    const auto base = static_cast<std::int64_t>(std::floor(exact));
    out[k] = 1 + base;
    used += base;
    remainders.emplace_back(exact - static_cast<double>(base), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (std::int64_t r = 0; r < spare - used; ++r)
    ++out[remainders[static_cast<std::size_t>(r) % remainders.size()].second];
  return out;
}

std::vector<ShotTable> measure_groups(const StateVector &state,
                                      const std::vector<MeasurementGroup> &groups,
                                      const std::vector<std::int64_t> &shots,
                                      const NoiseSpec *noise, std::uint64_t seed) {
  if (shots.size() != groups.size())
    throw std::invalid_argument("one shot count per group is required");
  std::vector<ShotTable> tables(groups.size());
  parallel_for(groups.size(), [&](std::size_t k) {
    tables[k] = sample_bitstrings(state, groups[k].basis, shots[k], noise,
                                  derive_seed(seed, "group", groups[k].id));
    tables[k].group_id = groups[k].id;
  });
  return tables;
}

ExpectationEstimate estimate_expectation(const std::vector<MeasurementGroup> &groups,
                                         const std::vector<ShotTable> &tables) {
  if (tables.size() != groups.size())
    throw std::invalid_argument("one shot table per group is required");
  std::vector<GroupEstimate> per_group;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (!tables[k].consistent())
      throw std::invalid_argument("inconsistent shot table for group " + std::to_string(k));
    per_group.push_back(weighted_estimate(groups[k], tables[k].counts,
                                          static_cast<double>(tables[k].shots_kept),
                                          tables[k].shots_kept));
  }
  return combine(groups, std::move(per_group));
}

ExpectationEstimate estimate_expectation(const std::vector<MeasurementGroup> &groups,
                                         const StateVector &state) {
  std::vector<GroupEstimate> per_group;
  for (const auto &g : groups) {
    std::vector<std::pair<std::uint64_t, double>> weights;
    if (has_measured_terms(g)) {
      const auto probs = outcome_probabilities(state, g.basis);
      for (std::size_t j = 0; j < probs.size(); ++j)
        weights.emplace_back(j, probs[j]);
    }
    per_group.push_back(weighted_estimate(g, weights, 1.0, 0));
  }
  return combine(groups, std::move(per_group));
}

BootstrapResult bootstrap_statistics(
    const std::vector<ShotData> &data, std::size_t batches,
    const std::function<double(const std::vector<ShotData> &)> &evaluator, std::uint64_t seed) {
  if (batches < 2)
    throw std::invalid_argument("bootstrap needs at least two batches");
  for (const auto &set : data)
    for (const auto &t : set)
      if (t.shots_kept <= 0)
        throw std::invalid_argument("bootstrap needs shots in every table");
  BootstrapResult out;
  out.samples.resize(batches);
  parallel_for(batches, [&](std::size_t b) {
    Rng rng(derive_seed(seed, "bootstrap", b));
    std::vector<ShotData> resampled(data.size());
    for (std::size_t d = 0; d < data.size(); ++d)
      for (const auto &t : data[d]) {
        std::vector<std::uint64_t> outcomes;
        std::vector<std::int64_t> cumulative;
        std::int64_t acc = 0;
        for (const auto &[o, c] : t.counts) {
          outcomes.push_back(o);
          cumulative.push_back(acc += c);
        }
        ShotTable r;
        r.group_id = t.group_id;
        r.qubit_count = t.qubit_count;
        for (std::int64_t s = 0; s < t.shots_kept; ++s) {
          const auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(acc)));
          const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
          r.counts[outcomes[static_cast<std::size_t>(it - cumulative.begin())]] += 1;
        }
        r.shots_kept = t.shots_kept;
        r.shots_total = t.shots_total;
        resampled[d].push_back(std::move(r));
      }
    out.samples[b] = evaluator(resampled);
  });
  double m2 = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    const double delta = out.samples[b] - out.mean;
    out.mean += delta / static_cast<double>(b + 1);
    m2 += delta * (out.samples[b] - out.mean);
  }
  out.stddev = std::sqrt(m2 / static_cast<double>(batches));
  return out;
}

EnergyDifferences energy_differences(double e_reactant, double e_ts, double e_product) {
  if (!std::isfinite(e_reactant) || !std::isfinite(e_ts) || !std::isfinite(e_product))
    throw std::invalid_argument("energy differences need finite energies");
  return {e_ts - e_reactant, e_product - e_reactant};
}

} // namespace qew
