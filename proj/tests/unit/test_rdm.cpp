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
#include "qew/parallel.h"
#include "qew/rdm.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

using namespace qew;

namespace {

std::string data(const std::string &name) { return std::string(QEW_DATA_DIR) + "/" + name; }

StateVector random_sector_state(std::mt19937_64 &rng, std::size_t n, int n_elec, int sz2) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << n);
  std::normal_distribution<double> g;
  for (auto det : sector_determinants(n, n_elec, sz2))
    v[static_cast<Eigen::Index>(det)] = {g(rng), g(rng)};
  return StateVector(n, v.normalized());
}

// <psi| a+_p1 .. a+_pk a_qk .. a_q1 |psi> with dense matrices.
std::complex<double> dense_element(const StateVector &s, const std::vector<std::size_t> &c,
                                   const std::vector<std::size_t> &a) {
  const std::size_t n = s.qubit_count();
  Eigen::VectorXcd v = s.amplitudes();
  for (auto q : a)
    v = (oracle::annihilator(q, n) * v).eval();
  for (auto it = c.rbegin(); it != c.rend(); ++it)
    v = (oracle::annihilator(*it, n).adjoint() * v).eval();
  return s.amplitudes().dot(v);
}

std::vector<std::size_t> modes(std::uint64_t m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; m; ++i, m >>= 1)
    if (m & 1)
      out.push_back(i);
  return out;
}

struct H3p {
  QubitOperator h;
  StateVector ground;
};

const H3p &h3p() {
  static const H3p f = [] {
    auto ints = read_fcidump(data("h3p_sto3g.fcidump"));
    H3p f;
    f.h = simplify(jordan_wigner(build_hamiltonian(ints), 6));
    f.ground = exact_ground_state(f.h, Sector{2, 0}).state;
    return f;
  }();
  return f;
}

double frobenius_error(const RdmSet &a, const RdmSet &b) {
  double s = 0.0;
  for (int k = 1; k <= std::min(a.max_order(), b.max_order()); ++k)
    s += (a.block(k) - b.block(k)).squaredNorm();
  return std::sqrt(s);
}

} // namespace

TEST(Rdm, HartreeFockOneBodyIsOccupation) {
  const auto s = fock_state(6, std::uint64_t{0b001011});
  const auto r = rdm_from_statevector(s, 2);
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t q = 0; q < 6; ++q) {
      const double expect = (p == q && ((0b001011 >> p) & 1)) ? 1.0 : 0.0;
      EXPECT_NEAR(std::abs(r.element({p}, {q}) - expect), 0.0, 1e-14);
    }
  EXPECT_NEAR(r.element({0, 1}, {0, 1}).real(), 1.0, 1e-14);
  EXPECT_NEAR(r.element({1, 0}, {0, 1}).real(), -1.0, 1e-14);
  EXPECT_NEAR(r.element({0, 2}, {0, 2}).real(), 0.0, 1e-14);
}

TEST(Rdm, MatchesDenseOracleForEveryIndexOrder) {
  std::mt19937_64 rng(11);
  const StateVector s(5, oracle::random_state(rng, 5));
  const auto r = rdm_from_statevector(s, 3);
  for (int k = 1; k <= 3; ++k)
    for (auto p : r.subsets(k))
      for (auto q : r.subsets(k)) {
        auto c = modes(p), a = modes(q);
        ASSERT_LT(std::abs(r.element(c, a) - dense_element(s, c, a)), 1e-10);
        std::shuffle(c.begin(), c.end(), rng);
        std::shuffle(a.begin(), a.end(), rng);
        ASSERT_LT(std::abs(r.element(c, a) - dense_element(s, c, a)), 1e-10);
      }
  EXPECT_EQ(r.element({1, 1}, {0, 2}), std::complex<double>(0.0));
}

TEST(Rdm, TracesCountParticles) {
  std::mt19937_64 rng(5);
  for (int n_elec : {2, 3, 4}) {
    const auto s = random_sector_state(rng, 8, n_elec, n_elec % 2);
    const auto r = rdm_from_statevector(s, 4);
    double expect = 1.0;
    for (int k = 1; k <= 4; ++k) {
      expect *= std::max(0, n_elec - k + 1);
      EXPECT_NEAR(r.trace(k).real(), expect, 1e-9) << n_elec << " " << k;
      EXPECT_NEAR(r.trace(k).imag(), 0.0, 1e-9);
    }
  }
}

TEST(Rdm, PartialTraceGivesLowerOrder) {
  std::mt19937_64 rng(6);
  const int n_elec = 3;
  const auto s = random_sector_state(rng, 8, n_elec, 1);
  const auto r = rdm_from_statevector(s, 4);
  for (int k = 2; k <= 4; ++k) {
    const Eigen::MatrixXcd lower = contract_last_index(r, k);
    const double diff = (lower - double(n_elec - k + 1) * r.block(k - 1)).cwiseAbs().maxCoeff();
    EXPECT_LT(diff, 1e-9) << k;
  }
  EXPECT_THROW(contract_last_index(r, 1), std::invalid_argument);
}

TEST(Rdm, BlocksAreHermitian) {
  std::mt19937_64 rng(7);
  const StateVector s(6, oracle::random_state(rng, 6));
  const auto r = rdm_from_statevector(s, 3);
  for (int k = 1; k <= 3; ++k)
    EXPECT_LT((r.block(k) - r.block(k).adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rdm, OrderValidation) {
  const auto s = fock_state(4, std::uint64_t{3});
  EXPECT_THROW(rdm_from_statevector(s, 0), std::invalid_argument);
  EXPECT_THROW(rdm_from_statevector(s, 5), std::invalid_argument);
  EXPECT_THROW(plan_rdm_measurement(4, 5), std::invalid_argument);
  const auto r = rdm_from_statevector(s, 2);
  EXPECT_THROW(r.block(3), std::out_of_range);
  EXPECT_THROW(r.element({4}, {0}), std::out_of_range);
  EXPECT_THROW(r.element({0, 1}, {0}), std::invalid_argument);
}

TEST(Rdm, TextRoundTrip) {
  std::mt19937_64 rng(8);
  const StateVector s(5, oracle::random_state(rng, 5));
  const auto r = rdm_from_statevector(s, 2);
  const auto text = write_rdm_text(r);
  const auto back = parse_rdm_text(text, 5);
  EXPECT_EQ(back.max_order(), 2);
  EXPECT_LT(max_rdm_difference(r, back), 1e-15);
  EXPECT_EQ(write_rdm_text(back), text);
  EXPECT_THROW(parse_rdm_text("1 0 7 0.5\n", 5), std::invalid_argument);
  EXPECT_THROW(parse_rdm_text("2 1 0 0 1 0.5\n", 5), std::invalid_argument);
  EXPECT_THROW(parse_rdm_text("1 0 1\n", 5), std::invalid_argument);
  EXPECT_THROW(parse_rdm_text("1 0 1 abc\n", 5), std::invalid_argument);
}

TEST(RdmPlan, SkippedElementsVanishForSzEigenstates) {
  std::mt19937_64 rng(9);
  const auto s = random_sector_state(rng, 6, 3, 1);
  const auto r = rdm_from_statevector(s, 3);
  const auto plan = plan_rdm_measurement(6, 3);
  for (int k = 1; k <= 3; ++k) {
    Eigen::MatrixXcd masked = r.block(k);
    for (const auto &e : plan.elements)
      if (e.order == k) {
        masked(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = 0.0;
        masked(static_cast<Eigen::Index>(e.col), static_cast<Eigen::Index>(e.row)) = 0.0;
      }
    EXPECT_LT(masked.cwiseAbs().maxCoeff(), 1e-14) << k;
  }
}

TEST(RdmPlan, GroupsAreQubitWiseCommuting) {
  const auto plan = plan_rdm_measurement(6, 2);
  ASSERT_EQ(plan.pauli_group.size(), plan.paulis.size());
  for (std::size_t j = 0; j < plan.paulis.size(); ++j) {
    const auto &basis = plan.groups[plan.pauli_group[j]].basis;
    for (std::size_t q = 0; q < 6; ++q)
      if (plan.paulis[j].letter(q) != PauliLetter::I)
        EXPECT_EQ(plan.paulis[j].letter(q), basis.letter(q));
  }
}

TEST(RdmShots, InfiniteShotLimitEqualsStatevector) {
  std::mt19937_64 rng(10);
  const auto s = random_sector_state(rng, 6, 3, 1);
  const auto plan = plan_rdm_measurement(6, 3);
  const auto exact = rdm_from_statevector(s, 3);
  const auto limit = rdm_from_probabilities(plan, s);
  EXPECT_LT(max_rdm_difference(exact, limit), 1e-12);
  EXPECT_EQ(limit.invalid_elements, 0u);
}

TEST(RdmShots, TracesWithinThreeStandardErrors) {
  const auto ints = read_fcidump(data("h4_chain_sto3g.fcidump"));
  const auto h = simplify(jordan_wigner(build_hamiltonian(ints), 8));
  const auto ground = exact_ground_state(h, Sector{4, 0}).state;
  const auto plan = plan_rdm_measurement(8, 2);
  const std::int64_t budget = 100000;
  const auto tables = measure_groups(ground, plan.groups, allocate_shots(plan.groups, budget),
                                     nullptr, 2024);
  const auto r = rdm_from_shots(plan, tables);
  for (int k = 1; k <= 2; ++k) {
    const double expect = k == 1 ? 4.0 : 12.0;
    const auto est = rdm_trace_estimate(plan, tables, k);
    EXPECT_NEAR(est.value, r.trace(k).real(), 1e-9);
    EXPECT_LE(std::abs(est.value - expect), 3.0 * est.standard_error + 1e-9) << k;
  }
}

TEST(RdmShots, ErrorFallsAsInverseSquareRootOfShots) {
  const auto &f = h3p();
  const auto plan = plan_rdm_measurement(6, 1);
  const auto exact = rdm_from_statevector(f.ground, 1);
  std::vector<double> logs, logn;
  for (std::int64_t shots : {1000, 10000, 100000}) {
    double ms = 0.0;
    const int seeds = 20;
    for (int t = 0; t < seeds; ++t) {
      const auto r = rdm_from_shots(plan, f.ground, shots, nullptr, nullptr,
                                    derive_seed(3, "rdm-slope", static_cast<std::uint64_t>(t)));
      ms += std::pow(frobenius_error(r, exact), 2);
    }
    logs.push_back(std::log10(std::sqrt(ms / seeds)));
    logn.push_back(std::log10(static_cast<double>(shots)));
  }
  const double mx = std::accumulate(logn.begin(), logn.end(), 0.0) / 3.0;
  const double my = std::accumulate(logs.begin(), logs.end(), 0.0) / 3.0;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (logn[i] - mx) * (logs[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.1);
}

TEST(RdmShots, SymmetryFilterReducesReadoutErrorInMostTrials) {
  const auto &f = h3p();
  const auto plan = plan_rdm_measurement(6, 2);
  const auto exact = rdm_from_statevector(f.ground, 2);
  const auto sym = parity_symmetries(3, 1, 1);
  NoiseSpec noise;
  noise.depolarizing_prob_per_exponential = 0.0;
  noise.measurement_flip_prob = 0.02;
  int better = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const auto tables =
        measure_groups(f.ground, plan.groups, allocate_shots(plan.groups, 10000), &noise,
                       derive_seed(17, "rdm-pmsv", static_cast<std::uint64_t>(t)));
    const double raw = frobenius_error(rdm_from_shots(plan, tables), exact);
    const double filtered = frobenius_error(rdm_from_shots(plan, tables, &sym), exact);
    better += filtered <= raw;
  }
  EXPECT_GE(better, 38);
}

TEST(RdmShots, EmptyGroupMarksElementsInvalid) {
  const auto &f = h3p();
  const auto plan = plan_rdm_measurement(6, 1);
  auto tables = measure_groups(f.ground, plan.groups, allocate_shots(plan.groups, 100), nullptr, 1);
  tables[0] = ShotTable{tables[0].group_id, 6, {}, 0, 0};
  const auto r = rdm_from_shots(plan, tables);
  EXPECT_GT(r.invalid_elements, 0u);
}

TEST(RdmShots, IndependentOfThreadCount) {
  const auto &f = h3p();
  const auto plan = plan_rdm_measurement(6, 2);
  set_thread_count(1);
  const auto a = write_rdm_text(rdm_from_shots(plan, f.ground, 500, nullptr, nullptr, 4));
  set_thread_count(4);
  const auto b = write_rdm_text(rdm_from_shots(plan, f.ground, 500, nullptr, nullptr, 4));
  set_thread_count(0);
  EXPECT_EQ(a, b);
}

TEST(SectorDensity, ReproducesPureState) {
  std::mt19937_64 rng(12);
  const auto s = random_sector_state(rng, 6, 3, -1);
  const auto r = rdm_from_statevector(s, 3);
  const auto dets = sector_determinants(6, 3, -1);
  const auto rho = sector_density(r, 3, -1);
  Eigen::VectorXcd c(static_cast<Eigen::Index>(dets.size()));
  for (std::size_t i = 0; i < dets.size(); ++i)
    c[static_cast<Eigen::Index>(i)] = s.amplitudes()[static_cast<Eigen::Index>(dets[i])];
  EXPECT_LT((rho - c * c.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(sector_density(rdm_from_statevector(s, 2), 3, -1), std::invalid_argument);
}

TEST(SectorDensity, DeterminantCounts) {
  EXPECT_EQ(sector_determinants(8, 4, 0).size(), 36u);
  EXPECT_EQ(sector_determinants(6, 3, 1).size(), 9u);
  for (auto d : sector_determinants(8, 3, -1))
    EXPECT_EQ(std::popcount(d), 3);
}
