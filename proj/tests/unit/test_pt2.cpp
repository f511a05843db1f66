/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include <gtest/gtest.h>

#include "oracles.h"
#include "pt2_oracle.h"
#include "qew/active_space.h"
#include "qew/adapt.h"
#include "qew/integrals.h"
#include "qew/pt2.h"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace qew;

using oracle::active_ground_state;
using oracle::dense_pt2;

namespace {

using Eigen::Index;

std::string data(const std::string &name) { return std::string(QEW_DATA_DIR) + "/" + name; }

Index ix(std::size_t i) { return static_cast<Index>(i); }

struct Case {
  std::size_t n;
  int n_elec;
  OrbitalPartition part;
  std::uint64_t seed;
};

MolecularIntegrals case_integrals(const Case &c) {
  std::mt19937_64 rng(c.seed);
  return oracle::random_integrals(rng, c.n, c.n_elec);
}

const std::vector<Case> &cases() {
  static const std::vector<Case> c = {
      {3, 2, {{}, {0, 1}, {2}}, 1},         {4, 4, {{0}, {1, 2}, {3}}, 2},
      {5, 4, {{0}, {1, 2}, {3, 4}}, 3},     {4, 3, {{0}, {1, 2}, {3}}, 4},
      {4, 4, {{2}, {0, 3}, {1}}, 5},        {4, 2, {{}, {0, 1}, {2, 3}}, 6},
      {5, 6, {{0, 1}, {2, 3}, {4}}, 7},     {4, 4, {{0}, {2, 1}, {3}}, 8},
  };
  return c;
}

// Weakens every integral that couples the core or virtual space to the rest.
MolecularIntegrals weakly_coupled(const MolecularIntegrals &ints, const OrbitalPartition &part,
                                  double lambda) {
  auto out = ints;
  std::vector<int> role(ints.n_orb, 1);
  for (auto c : part.core)
    role[c] = 0;
  for (auto v : part.virtual_orbitals)
    role[v] = 2;
  const std::size_t n = ints.n_orb;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      if (role[p] != role[q])
        out.h1(ix(p), ix(q)) *= lambda;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s)
          if (role[p] != role[q] || role[r] != role[s])
            out.h2[out.eri_index(p, q, r, s)] *= lambda;
  return out;
}

} // namespace

TEST(Partition, Validation) {
  EXPECT_NO_THROW((OrbitalPartition{{0}, {1, 2}, {3}}.validate(4)));
  EXPECT_THROW((OrbitalPartition{{0}, {1, 2}, {}}.validate(4)), std::invalid_argument);
  EXPECT_THROW((OrbitalPartition{{0}, {0, 2}, {1, 3}}.validate(4)), std::invalid_argument);
  EXPECT_THROW((OrbitalPartition{{0}, {1, 4}, {3, 2}}.validate(4)), std::invalid_argument);
  EXPECT_THROW((OrbitalPartition{{0, 1, 2, 3}, {}, {}}.validate(4)), std::invalid_argument);
}

TEST(Partition, EffectiveIntegralsCheck) {
  const auto &c = cases()[1];
  const auto full = case_integrals(c);
  auto eff = partition_active_integrals(full, c.part);
  EXPECT_NO_THROW(check_effective_integrals(eff, full, c.part));
  eff.h1(0, 0) += 1e-6;
  EXPECT_THROW(check_effective_integrals(eff, full, c.part), std::invalid_argument);
}

TEST(Pt2, MatchesDenseDyallOracle) {
  for (const auto &c : cases()) {
    const auto full = case_integrals(c);
    const auto r = pt2_correction(active_ground_state(full, c.part), full, c.part);
    EXPECT_NEAR(r.delta_e, dense_pt2(full, c.part), 1e-8) << c.seed;
    EXPECT_EQ(r.skipped, 0u);
  }
}

TEST(Pt2, MatchesDenseDyallOracleOnFixture) {
  const auto full = read_fcidump(data("h3p_sto3g.fcidump"));
  const OrbitalPartition part{{}, {0, 1}, {2}};
  const auto r = pt2_correction(active_ground_state(full, part), full, part);
  EXPECT_NEAR(r.delta_e, dense_pt2(full, part), 1e-8);
  EXPECT_LT(r.delta_e, 0.0);
}

TEST(Pt2, FullActiveSpaceGivesZero) {
  std::mt19937_64 rng(21);
  const auto full = oracle::random_integrals(rng, 3, 2);
  const OrbitalPartition part{{}, {0, 1, 2}, {}};
  const auto r = pt2_correction(active_ground_state(full, part), full, part);
  EXPECT_EQ(r.delta_e, 0.0);
  EXPECT_TRUE(r.perturbers.empty());
}

TEST(Pt2, NonPositiveWhenDenominatorsArePositive) {
  int checked = 0;
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    std::mt19937_64 rng(seed);
    const auto full = oracle::random_integrals(rng, 4, 4);
    const OrbitalPartition part{{0}, {1, 2}, {3}};
    const auto r = pt2_correction(active_ground_state(full, part), full, part);
    const bool positive = std::all_of(r.perturbers.begin(), r.perturbers.end(),
                                      [](const Pt2Perturber &p) { return p.denominator > 0.0; });
    for (const auto &p : r.perturbers)
      EXPECT_GE(p.coupling, 0.0);
    if (positive) {
      ++checked;
      EXPECT_LE(r.delta_e, 0.0) << seed;
    }
  }
  EXPECT_GE(checked, 10);
}

TEST(Pt2, InvariantUnderCoreAndVirtualRelabeling) {
  const auto &c = cases()[6];
  const auto full = case_integrals(c);
  const auto a = pt2_correction(active_ground_state(full, c.part), full, c.part);
  // Swap the two core orbitals in the integrals themselves.
  Eigen::MatrixXd perm = Eigen::MatrixXd::Identity(5, 5);
  perm.col(0).swap(perm.col(1));
  const auto swapped = active_space_integrals(full, perm, {}, {0, 1, 2, 3, 4});
  const auto b = pt2_correction(active_ground_state(swapped, c.part), swapped, c.part);
  EXPECT_NEAR(a.delta_e, b.delta_e, 1e-12);
  // Listing the core in a different order changes nothing either.
  const OrbitalPartition reordered{{1, 0}, {2, 3}, {4}};
  const auto d = pt2_correction(active_ground_state(full, reordered), full, reordered);
  EXPECT_NEAR(a.delta_e, d.delta_e, 1e-12);
}

TEST(Pt2, CutoffSkipsAndWarns) {
  const auto &c = cases()[1];
  const auto full = case_integrals(c);
  Pt2Options options;
  options.denominator_cutoff = 1e6;
  const auto r = pt2_correction(active_ground_state(full, c.part), full, c.part, options);
  EXPECT_EQ(r.delta_e, 0.0);
  EXPECT_GT(r.skipped, 0u);
  ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(Pt2, RdmRouteMatchesStateRoute) {
  for (std::size_t i : {1u, 3u, 6u}) {
    const auto &c = cases()[i];
    const auto full = case_integrals(c);
    const auto state = active_ground_state(full, c.part);
    const int n_act = full.n_elec - 2 * static_cast<int>(c.part.core.size());
    const auto rdms = rdm_from_statevector(state, std::max(2, n_act));
    const double ref = pt2_correction(state, full, c.part).delta_e;
    EXPECT_NEAR(pt2_correction(rdms, full, c.part).delta_e, ref, 1e-10);
    EXPECT_NEAR(pt2_from_measured_rdms(rdms, full, c.part).delta_e, ref, 1e-10);
  }
}

TEST(Pt2, RdmRouteRejectsMixedOrIncompleteRdms) {
  const auto &c = cases()[1];
  const auto full = case_integrals(c);
  const auto eff = partition_active_integrals(full, c.part);
  const auto h = jordan_wigner(build_hamiltonian(eff), 4);
  const auto ground = exact_ground_state(h, Sector{2, 0}).state;
  // A second sector state orthogonal to the ground state.
  auto other = fock_state(4, std::uint64_t{0b1100});
  Eigen::VectorXcd v = other.amplitudes();
  v -= ground.amplitudes().dot(v) * ground.amplitudes();
  other = StateVector(4, v.normalized());
  auto mixed = rdm_from_statevector(ground, 2);
  const auto second = rdm_from_statevector(other, 2);
  for (int k = 1; k <= 2; ++k)
    mixed.block(k) = 0.5 * (mixed.block(k) + second.block(k));
  EXPECT_THROW(pt2_correction(mixed, full, c.part), std::runtime_error);
  EXPECT_THROW(pt2_correction(rdm_from_statevector(ground, 1), full, c.part),
               std::invalid_argument);
  // The measured-RDM route accepts mixtures.
  EXPECT_TRUE(std::isfinite(pt2_from_measured_rdms(mixed, full, c.part).delta_e));
}

TEST(Pt2, RejectsStateOutsideSector) {
  const auto &c = cases()[1];
  const auto full = case_integrals(c);
  EXPECT_THROW(pt2_correction(fock_state(4, std::uint64_t{0b0111}), full, c.part),
               std::invalid_argument);
  EXPECT_THROW(pt2_correction(fock_state(6, std::uint64_t{0b0011}), full, c.part),
               std::invalid_argument);
}

TEST(Pt2, ReportTotalsAddUp) {
  const auto &c = cases()[2];
  const auto full = case_integrals(c);
  const auto r = pt2_correction(active_ground_state(full, c.part), full, c.part);
  const auto j = pt2_report(r);
  ASSERT_EQ(j["classes"].size(), 8u);
  double by_class = 0.0, by_perturber = 0.0;
  for (const auto &cls : j["classes"])
    by_class += cls["energy"].get<double>();
  for (const auto &p : j["perturbers"])
    by_perturber += p["energy"].get<double>();
  EXPECT_NEAR(by_class, r.delta_e, 1e-12);
  EXPECT_NEAR(by_perturber, r.delta_e, 1e-12);
  EXPECT_EQ(j["classes"][0]["class"], "0h1p");
  EXPECT_EQ(r.orbital_energies.size(), 5);
}

TEST(Pt2, TotalEnergyAddsCorrection) {
  Pt2Result r;
  r.delta_e = -0.0125;
  EXPECT_DOUBLE_EQ(total_energy(-1.5, r), -1.5125);
}

TEST(Pt2, WeaklyCoupledPipelineApproachesFullCi) {
  std::mt19937_64 rng(31);
  const OrbitalPartition part{{0}, {1, 2}, {3}};
  auto base = oracle::random_integrals(rng, 4, 4);
  base.h1(0, 0) -= 1.5;
  base.h1(3, 3) += 1.5;
  const auto full = weakly_coupled(base, part, 0.05);
  const double e_fci = oracle::fci_energy(full);

  const auto eff = partition_active_integrals(full, part);
  const auto h = simplify(jordan_wigner(build_hamiltonian(eff), 4));
  const auto pool = build_upccgsd_pool(2);
  const auto reference = hf_occupation(eff);
  AdaptConfig config;
  config.gradient_threshold = 1e-7;
  const auto vqe = adapt_vqe_loop(h, reference, pool, config);
  const auto state = prepare_state(vqe.ansatz, pool);
  const auto r = pt2_correction(state, full, part);
  const double e_hf = hf_energy(eff, reference);
  const double e_total = total_energy(vqe.energy, r);

  EXPECT_GE(e_hf, vqe.energy - 1e-12);
  EXPECT_GE(vqe.energy, e_total);
  EXPECT_LT(std::abs(e_total - e_fci), 1e-4);
  EXPECT_LT(std::abs(e_total - e_fci), std::abs(vqe.energy - e_fci));
}
