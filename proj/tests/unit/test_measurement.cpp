/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include <gtest/gtest.h>

#include "oracles.h"
#include "qew/integrals.h"
#include "qew/measurement.h"
#include "qew/parallel.h"

#include <cmath>
#include <numeric>

using namespace qew;

namespace {

std::string data(const std::string &name) { return std::string(QEW_DATA_DIR) + "/" + name; }

struct Fixture {
  MolecularIntegrals ints;
  QubitOperator h;
  StateVector ground;
  double energy = 0.0;
};

const Fixture &h3p() {
  static const Fixture f = [] {
    Fixture f;
    f.ints = read_fcidump(data("h3p_sto3g.fcidump"));
    f.h = simplify(jordan_wigner(build_hamiltonian(f.ints), 6));
    auto gs = exact_ground_state(f.h, Sector{2, 0});
    f.ground = gs.state;
    f.energy = gs.energy;
    return f;
  }();
  return f;
}

QubitOperator from_sparse(std::size_t n, std::initializer_list<std::pair<const char *, double>> t) {
  QubitOperator op(n);
  for (const auto &[s, c] : t)
    op.add_term(PauliString::from_sparse(n, s), c);
  return op;
}

// Smallest number of colors for the qubit-wise incompatibility graph, by
// dynamic programming over vertex subsets.
std::size_t chromatic_number(const std::vector<PauliString> &terms) {
  const std::size_t n = terms.size();
  const std::uint32_t full = (1U << n) - 1;
  std::vector<bool> independent(full + 1, true);
  for (std::uint32_t m = 1; m <= full; ++m)
    for (std::size_t i = 0; i < n && independent[m]; ++i)
      for (std::size_t j = i + 1; j < n && independent[m]; ++j)
        if (((m >> i) & 1U) && ((m >> j) & 1U) && !qubit_wise_commutes(terms[i], terms[j]))
          independent[m] = false;
  std::vector<std::size_t> colors(full + 1, n);
  colors[0] = 0;
  for (std::uint32_t m = 1; m <= full; ++m) {
    const std::uint32_t low = m & (~m + 1);
    for (std::uint32_t sub = m; sub; sub = (sub - 1) & m)
      if ((sub & low) && independent[sub])
        colors[m] = std::min(colors[m], colors[m ^ sub] + 1);
  }
  return colors[full];
}

std::vector<ShotTable> filtered(const std::vector<ShotTable> &raw,
                                const std::vector<MeasurementGroup> &groups,
                                const SymmetrySpec &sym) {
  std::vector<ShotTable> out;
  for (std::size_t k = 0; k < raw.size(); ++k)
    out.push_back(pmsv_filter(raw[k], groups[k], sym).table);
  return out;
}

} // namespace

TEST(Grouping, SmallExample) {
  auto op = from_sparse(2, {{"Z0", 1.0}, {"Z1", 1.0}, {"Z0 Z1", 1.0}, {"X0 X1", 1.0}});
  auto groups = group_pauli_terms(op);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].terms.size(), 3u);
  EXPECT_EQ(groups[0].basis.letters(), "ZZ");
  ASSERT_EQ(groups[1].terms.size(), 1u);
  EXPECT_EQ(groups[1].terms[0].pauli.letters(), "XX");
  EXPECT_TRUE(is_valid_grouping(groups, op));
}

TEST(Grouping, IdentityOnlyAndEmpty) {
  auto op = from_sparse(3, {{"", 0.75}});
  auto groups = group_pauli_terms(op);
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].basis.letters(), "III");
  EXPECT_THROW(group_pauli_terms(QubitOperator(3)), std::invalid_argument);
  QubitOperator complex_coeff(1);
  complex_coeff.add_term(PauliString::from_sparse(1, "Z0"), {0.0, 1.0});
  EXPECT_THROW(group_pauli_terms(complex_coeff), std::invalid_argument);
}

TEST(Grouping, OrderedByMagnitudeThenPauli) {
  auto op = from_sparse(2, {{"X0", 0.1}, {"Z0", -2.0}, {"Y1", 0.5}, {"Z1", 0.5}});
  auto groups = group_pauli_terms(op);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].terms[0].pauli.letters(), "ZI");
  EXPECT_EQ(groups[0].terms[1].pauli.letters(), "IY");
  EXPECT_EQ(groups[1].terms[0].pauli.letters(), "IZ");
  EXPECT_EQ(groups[1].terms[1].pauli.letters(), "XI");
}

TEST(Grouping, RandomOperatorsAgainstExhaustiveColoring) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 40; ++trial) {
    QubitOperator op(6);
    const int count = 2 + trial % 11;
    while (static_cast<int>(op.size()) < count)
      op.add_term(PauliString::from_letters(oracle::random_letters(rng, 6)), u(rng));
    auto groups = group_pauli_terms(op);
    ASSERT_TRUE(is_valid_grouping(groups, op));
    std::vector<PauliString> terms;
    for (const auto &[p, c] : op.terms())
      terms.push_back(p);
    std::size_t max_degree = 0;
    for (const auto &a : terms) {
      std::size_t d = 0;
      for (const auto &b : terms)
        d += !qubit_wise_commutes(a, b);
      max_degree = std::max(max_degree, d);
    }
    EXPECT_GE(groups.size(), chromatic_number(terms));
    EXPECT_LE(groups.size(), max_degree + 1);
    EXPECT_LE(groups.size(), op.size());
  }
}

TEST(Grouping, ValidityCheckRejectsBrokenPartitions) {
  auto op = from_sparse(2, {{"Z0", 1.0}, {"X0 X1", 0.5}, {"Z1", 0.25}});
  auto groups = group_pauli_terms(op);
  ASSERT_TRUE(is_valid_grouping(groups, op));
  auto missing = groups;
  missing.back().terms.pop_back();
  EXPECT_FALSE(is_valid_grouping(missing, op));
  auto merged = groups;
  merged[0].terms.insert(merged[0].terms.end(), groups[1].terms.begin(), groups[1].terms.end());
  merged.pop_back();
  EXPECT_FALSE(is_valid_grouping(merged, op));
}

TEST(Grouping, FixtureHamiltonianIsPartitionedDeterministically) {
  auto ints = read_fcidump(data("h4_chain_sto3g.fcidump"));
  auto h = simplify(jordan_wigner(build_hamiltonian(ints), 8));
  auto a = group_pauli_terms(h);
  auto b = group_pauli_terms(h);
  EXPECT_TRUE(is_valid_grouping(a, h));
  EXPECT_LT(a.size(), h.size());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_EQ(a[k].basis, b[k].basis);
}

TEST(Symmetry, ParityStringsCommuteWithHamiltonian) {
  const auto &f = h3p();
  auto sym = parity_symmetries(3, 1, 1);
  ASSERT_EQ(sym.constraints.size(), 3u);
  EXPECT_EQ(sym.constraints[0].pauli.letters(), "ZIZIZI");
  EXPECT_EQ(sym.constraints[1].pauli.letters(), "IZIZIZ");
  EXPECT_EQ(sym.constraints[0].eigenvalue, -1);
  EXPECT_EQ(sym.constraints[2].eigenvalue, 1);
  EXPECT_NO_THROW(sym.validate(f.h));
  SymmetrySpec single{{{"z0", PauliString::from_sparse(6, "Z0"), 1}}};
  EXPECT_THROW(single.validate(f.h), std::invalid_argument);
  SymmetrySpec x{{{"x", PauliString::from_sparse(6, "X0"), 1}}};
  EXPECT_THROW(x.validate(f.h), std::invalid_argument);
}

TEST(Pmsv, EvenParityDefinition) {
  MeasurementGroup g{0, PauliString::from_letters("ZZZZ"), {}};
  SymmetrySpec sym{{{"parity", PauliString::from_letters("ZZZZ"), 1}}};
  ShotTable t;
  t.qubit_count = 4;
  t.add(parse_bitstring("1100"), 7);
  t.add(parse_bitstring("1000"), 3);
  auto r = pmsv_filter(t, g, sym);
  EXPECT_EQ(r.discarded, 3);
  EXPECT_EQ(r.table.shots_kept, 7);
  EXPECT_EQ(r.table.shots_total, 10);
  EXPECT_EQ(r.table.counts.count(parse_bitstring("1000")), 0u);
  EXPECT_TRUE(r.table.consistent());
  EXPECT_EQ(r.applied, std::vector<std::size_t>{0});
}

TEST(Pmsv, SymmetriesOutsideTheBasisAreSkipped) {
  MeasurementGroup g{0, PauliString::from_letters("XZIY"), {}};
  SymmetrySpec sym{{{"a", PauliString::from_letters("ZZII"), 1},
                    {"b", PauliString::from_letters("IZZI"), 1},
                    {"c", PauliString::from_letters("IIZZ"), 1}}};
  ShotTable t;
  t.qubit_count = 4;
  t.add(parse_bitstring("0110"), 5);
  auto r = pmsv_filter(t, g, sym);
  EXPECT_EQ(r.applied, std::vector<std::size_t>{1});
  EXPECT_EQ((r.skipped), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(r.discarded, 0);
}

TEST(Pmsv, NoiselessSymmetricStateLosesNothing) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  auto sym = parity_symmetries(3, 1, 1);
  auto raw = measure_groups(f.ground, groups, allocate_shots(groups, 2000), nullptr, 17);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    auto r = pmsv_filter(raw[k], groups[k], sym);
    EXPECT_EQ(r.discarded, 0);
    checked += r.applied.size();
  }
  EXPECT_GT(checked, 0u);
}

TEST(Pmsv, FilteringReducesReadoutErrorInMostTrials) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  auto sym = parity_symmetries(3, 1, 1);
  const auto shots = allocate_shots(groups, 10000);
  NoiseSpec noise;
  noise.measurement_flip_prob = 0.02;
  int better = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    auto raw = measure_groups(f.ground, groups, shots, &noise, derive_seed(99, "pmsv", trial));
    const double e_raw = estimate_expectation(groups, raw).value;
    const double e_pmsv = estimate_expectation(groups, filtered(raw, groups, sym)).value;
    better += std::abs(e_pmsv - f.energy) <= std::abs(e_raw - f.energy);
  }
  EXPECT_GE(better, 95);
}

TEST(Estimate, IdentityTermIsExact) {
  auto op = from_sparse(2, {{"", -1.2345}});
  auto groups = group_pauli_terms(op);
  std::vector<ShotTable> none(1);
  auto e = estimate_expectation(groups, none);
  EXPECT_EQ(e.value, -1.2345);
  EXPECT_TRUE(e.valid());
  auto op2 = from_sparse(2, {{"", 0.3}, {"Z0", 1.0}});
  auto g2 = group_pauli_terms(op2);
  auto t = measure_groups(fock_state(2, "10"), g2, {100}, nullptr, 1);
  EXPECT_EQ(estimate_expectation(g2, t).value, 0.3 - 1.0);
}

TEST(Estimate, AnalyticLimitMatchesStatevector) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  EXPECT_NEAR(estimate_expectation(groups, f.ground).value, expectation(f.ground, f.h), 1e-12);
  std::mt19937_64 rng(4);
  auto ints = read_fcidump(data("h4_chain_sto3g.fcidump"));
  auto h = simplify(jordan_wigner(build_hamiltonian(ints), 8));
  StateVector psi(8, oracle::random_state(rng, 8));
  EXPECT_NEAR(estimate_expectation(group_pauli_terms(h), psi).value, expectation(psi, h), 1e-12);
}

TEST(Estimate, HundredThousandShotsWithinFiveStandardErrors) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  auto tables = measure_groups(f.ground, groups, allocate_shots(groups, 100000), nullptr, 5);
  auto e = estimate_expectation(groups, tables);
  ASSERT_TRUE(e.valid());
  EXPECT_GT(e.standard_error, 0.0);
  EXPECT_LT(std::abs(e.value - f.energy), 5 * e.standard_error);
  ASSERT_EQ(e.groups.size(), groups.size());
}

TEST(Estimate, EmptyGroupIsFlagged) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  auto tables = measure_groups(f.ground, groups, allocate_shots(groups, 50), nullptr, 5);
  SymmetrySpec impossible{{{"wrong", parity_symmetries(3, 1, 1).constraints[2].pauli, -1}}};
  auto zero = pmsv_filter(tables[0], groups[0], impossible);
  ASSERT_EQ(zero.table.shots_kept, 0);
  tables[0] = zero.table;
  auto e = estimate_expectation(groups, tables);
  EXPECT_FALSE(e.valid());
  EXPECT_EQ(e.invalid_groups, std::vector<std::size_t>{0});
  EXPECT_FALSE(e.groups[0].valid);
}

TEST(Estimate, ErrorFallsAsInverseSquareRootOfShots) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  std::vector<double> xs, ys;
  for (std::int64_t shots : {1000, 10000, 100000}) {
    double sq = 0.0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
      auto t = measure_groups(f.ground, groups, allocate_shots(groups, shots), nullptr,
                              derive_seed(2024, "slope", static_cast<std::uint64_t>(s)));
      const double d = estimate_expectation(groups, t).value - f.energy;
      sq += d * d;
    }
    xs.push_back(std::log(static_cast<double>(shots)));
    ys.push_back(0.5 * std::log(sq / seeds));
  }
  const double mx = (xs[0] + xs[1] + xs[2]) / 3, my = (ys[0] + ys[1] + ys[2]) / 3;
  double num = 0, den = 0;
  for (int k = 0; k < 3; ++k) {
    num += (xs[k] - mx) * (ys[k] - my);
    den += (xs[k] - mx) * (xs[k] - mx);
  }
  EXPECT_NEAR(num / den, -0.5, 0.1);
}

TEST(Allocation, UniformAndWeighted) {
  auto op = from_sparse(2, {{"Z0", 3.0}, {"X0", 1.0}, {"Y1 X0", 0.0}});
  auto groups = group_pauli_terms(op);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(allocate_shots(groups, 100), (std::vector<std::int64_t>{100, 100}));
  auto w = allocate_shots(groups, 100, ShotAllocation::weighted);
  EXPECT_EQ(w[0] + w[1], 200);
  EXPECT_EQ(w[0], 1 + 149);
  EXPECT_THROW(allocate_shots(groups, 0), std::invalid_argument);
}

TEST(Sampling, GroupsIndependentOfThreadCountAndCsvRoundTrip) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  NoiseSpec noise;
  set_thread_count(1);
  auto a = measure_groups(f.ground, groups, allocate_shots(groups, 300), &noise, 8);
  set_thread_count(3);
  auto b = measure_groups(f.ground, groups, allocate_shots(groups, 300), &noise, 8);
  set_thread_count(1);
  const auto csv = write_shot_csv(a);
  EXPECT_EQ(csv, write_shot_csv(b));
  auto back = parse_shot_csv(csv);
  ASSERT_EQ(back.size(), a.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    EXPECT_EQ(back[k].counts, a[k].counts);
}

TEST(Bootstrap, ConstantEvaluatorAndValidation) {
  ShotTable t;
  t.qubit_count = 1;
  t.add(0, 10);
  t.add(1, 5);
  std::vector<ShotData> d{{t}};
  auto r = bootstrap_statistics(d, 10, [](const std::vector<ShotData> &) { return 0.1; }, 3);
  EXPECT_EQ(r.stddev, 0.0);
  EXPECT_EQ(r.mean, 0.1);
  EXPECT_EQ(r.samples.size(), 10u);
  auto noop = [](const std::vector<ShotData> &) { return 0.0; };
  EXPECT_THROW(bootstrap_statistics(d, 1, noop, 3), std::invalid_argument);
  std::vector<ShotData> empty{{ShotTable{}}};
  EXPECT_THROW(bootstrap_statistics(empty, 10, noop, 3), std::invalid_argument);
}

TEST(Bootstrap, DeterministicPerSeedAndThreadCount) {
  const auto &f = h3p();
  auto groups = group_pauli_terms(f.h);
  std::vector<ShotData> d{measure_groups(f.ground, groups, allocate_shots(groups, 500), nullptr, 2)};
  auto energy = [&](const std::vector<ShotData> &x) {
    return estimate_expectation(groups, x[0]).value;
  };
  set_thread_count(1);
  auto a = bootstrap_statistics(d, 10, energy, 42);
  set_thread_count(4);
  auto b = bootstrap_statistics(d, 10, energy, 42);
  set_thread_count(1);
  auto c = bootstrap_statistics(d, 10, energy, 43);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
  EXPECT_GT(a.stddev, 0.0);
}

TEST(Bootstrap, SingleQubitSpreadMatchesBinomial) {
  StateVector psi(1);
  apply_pauli_exponential(psi, PauliString::from_letters("Y"), 0.4);
  const double z = expectation(psi, from_sparse(1, {{"Z0", 1.0}}));
  const std::int64_t shots = 1000;
  const double analytic = std::sqrt(1 - z * z) / std::sqrt(static_cast<double>(shots));
  auto groups = group_pauli_terms(from_sparse(1, {{"Z0", 1.0}}));
  auto mean_z = [&](const std::vector<ShotData> &x) {
    return estimate_expectation(groups, x[0]).value;
  };
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::vector<ShotData> d{measure_groups(psi, groups, {shots}, nullptr, s)};
    sum += bootstrap_statistics(d, 10, mean_z, 1000 + s).stddev;
  }
  EXPECT_NEAR(sum / 50 / analytic, 1.0, 0.2);
}

TEST(EnergyDifferences, Arithmetic) {
  auto d = energy_differences(-1.0, -0.5, -1.2);
  EXPECT_NEAR(d.activation, 0.5, 1e-15);
  EXPECT_NEAR(d.reaction, -0.2, 1e-15);
  EXPECT_NEAR(d.activation_ev(), 0.5 * 27.211386245988, 1e-12);
  auto z = energy_differences(-2.0, -2.0, -2.0);
  EXPECT_EQ(z.activation, 0.0);
  EXPECT_EQ(z.reaction, 0.0);
  EXPECT_THROW(energy_differences(NAN, 0, 0), std::invalid_argument);
}

TEST(EnergyDifferences, BootstrapMatchesErrorPropagation) {
  // Three single-qubit "species" with energy c * <Z>.
  const double coeff[3] = {-0.8, -0.3, -1.1};
  const double angle[3] = {0.3, 0.7, 0.5};
  const std::int64_t shots = 2000;
  std::vector<std::vector<MeasurementGroup>> groups;
  std::vector<StateVector> states;
  double sigma2[3];
  for (int s = 0; s < 3; ++s) {
    groups.push_back(group_pauli_terms(from_sparse(1, {{"Z0", coeff[s]}})));
    StateVector psi(1);
    apply_pauli_exponential(psi, PauliString::from_letters("Y"), angle[s]);
    const double z = std::cos(2 * angle[s]);
    sigma2[s] = coeff[s] * coeff[s] * (1 - z * z) / static_cast<double>(shots);
    states.push_back(psi);
  }
  const double oracle_sigma = std::sqrt(sigma2[0] + sigma2[1]);
  auto ea = [&](const std::vector<ShotData> &x) {
    return energy_differences(estimate_expectation(groups[0], x[0]).value,
                              estimate_expectation(groups[1], x[1]).value,
                              estimate_expectation(groups[2], x[2]).value)
        .activation;
  };
  double sum = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    std::vector<ShotData> d;
    for (int s = 0; s < 3; ++s)
      d.push_back(measure_groups(states[s], groups[s], {shots}, nullptr,
                                 derive_seed(static_cast<std::uint64_t>(seed), "species", s)));
    sum += bootstrap_statistics(d, 10, ea, static_cast<std::uint64_t>(seed)).stddev;
  }
  EXPECT_NEAR(sum / seeds / oracle_sigma, 1.0, 0.25);
}
