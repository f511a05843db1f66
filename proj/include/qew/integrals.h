/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/fermion_operator.h"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace qew {

/// Core energy, one-electron matrix and chemist-notation (ij|kl) two-electron
/// tensor over spatial orbitals, all in Hartree.
struct MolecularIntegrals {
  std::size_t n_orb = 0;
  int n_elec = 0;
  int ms2 = 0;
  double e_core = 0.0;
  Eigen::MatrixXd h1;
  std::vector<double> h2; // dense n^4, index ((i*n + j)*n + k)*n + l

  static MolecularIntegrals zeros(std::size_t n_orb, int n_elec, int ms2 = 0);

  std::size_t eri_index(std::size_t i, std::size_t j, std::size_t k,
                        std::size_t l) const {
    return ((i * n_orb + j) * n_orb + k) * n_orb + l;
  }
  double eri(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return h2[eri_index(i, j, k, l)];
  }
  /// Writes v into all eight permutation-equivalent slots.
  void set_eri(std::size_t i, std::size_t j, std::size_t k, std::size_t l,
               double v);

  int n_alpha() const { return (n_elec + ms2) / 2; }
  int n_beta() const { return (n_elec - ms2) / 2; }

  /// Throws std::invalid_argument when h1 is not symmetric, h2 breaks the
  /// 8-fold symmetry beyond tol, or the electron count does not fit.
  void validate(double tol = 1e-10) const;
};

MolecularIntegrals parse_fcidump(std::string_view text);
/// Canonical writer: one line per symmetry-unique nonzero value, 17
/// significant digits, two-electron block then one-electron block then core.
std::string write_fcidump(const MolecularIntegrals &ints);

MolecularIntegrals read_fcidump(const std::filesystem::path &path);
void save_fcidump(const std::filesystem::path &path,
                  const MolecularIntegrals &ints);

/// H = e_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q over
/// interleaved spin orbitals.
FermionOperator build_hamiltonian(const MolecularIntegrals &ints);

/// Lowest-energy closed/high-spin determinant: alpha and beta electrons fill
/// the lowest spatial orbitals.
std::uint64_t hf_occupation(const MolecularIntegrals &ints);

/// <D|H|D> for the determinant with the given spin-orbital occupation.
double hf_energy(const MolecularIntegrals &ints, std::uint64_t occupation);

/// Mean-field orbital data used for active-space selection.
struct OrbitalBundle {
  Eigen::MatrixXd ao_overlap;      // n_ao x n_ao
  Eigen::MatrixXd mo_coeff;        // n_ao x n_mo
  Eigen::VectorXd mo_occ;          // n_mo, values in {0, 1, 2}
  Eigen::MatrixXd projector_coeff; // n_ao x n_proj

  std::size_t n_ao() const { return static_cast<std::size_t>(ao_overlap.rows()); }
  std::size_t n_mo() const { return static_cast<std::size_t>(mo_coeff.cols()); }
  int electron_count() const;

  /// Checks dimensions, occupations and MO orthonormality (C^T S C = 1).
  void validate(double tol = 1e-8) const;
};

OrbitalBundle parse_orbital_bundle(std::string_view text);
std::string write_orbital_bundle(const OrbitalBundle &bundle);
OrbitalBundle read_orbital_bundle(const std::filesystem::path &path);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view text);

/// Bitstring helpers: character k is bit k ("1100" -> 0b0011).
std::uint64_t parse_bitstring(std::string_view bits);
std::string format_bitstring(std::uint64_t mask, std::size_t length);

} // namespace qew
