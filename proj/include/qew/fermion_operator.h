/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/qubit_operator.h"

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qew {

/// Spin-orbital index for spatial orbital `orbital` and spin (0 = alpha,
/// 1 = beta). Spin orbitals are interleaved: a0 b0 a1 b1 ...
constexpr std::size_t spin_orbital(std::size_t orbital, int spin) {
  return 2 * orbital + static_cast<std::size_t>(spin);
}

struct LadderOp {
  std::size_t mode = 0;
  bool dagger = false;

  friend bool operator==(const LadderOp &, const LadderOp &) = default;
};

using LadderProduct = std::vector<LadderOp>;

struct FermionTerm {
  std::complex<double> coefficient;
  LadderProduct product; // applied right to left
};

/// Sum of products of creation/annihilation operators. Terms are stored as
/// written; normal_ordered() gives the canonical form.
class FermionOperator {
public:
  FermionOperator() = default;

  static FermionOperator identity(std::complex<double> coefficient = 1.0);
  static FermionOperator creation(std::size_t mode);
  static FermionOperator annihilation(std::size_t mode);
  /// a+_p a_q
  static FermionOperator hopping(std::size_t p, std::size_t q,
                                 std::complex<double> coefficient = 1.0);
  static FermionOperator number(std::size_t mode);

  void add_term(std::complex<double> coefficient, LadderProduct product);

  const std::vector<FermionTerm> &terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  /// One past the highest mode index referenced (0 for scalar operators).
  std::size_t mode_count() const;

  FermionOperator &operator+=(const FermionOperator &other);
  FermionOperator &operator-=(const FermionOperator &other);
  FermionOperator &operator*=(std::complex<double> scalar);
  friend FermionOperator operator+(FermionOperator a, const FermionOperator &b) {
    return a += b;
  }
  friend FermionOperator operator-(FermionOperator a, const FermionOperator &b) {
    return a -= b;
  }
  friend FermionOperator operator*(std::complex<double> s, FermionOperator a) {
    return a *= s;
  }
  friend FermionOperator operator*(const FermionOperator &a,
                                   const FermionOperator &b);

  FermionOperator adjoint() const;

  /// Creation operators left of annihilation operators, each group sorted by
  /// descending mode; like terms merged and |c| <= tol dropped.
  FermionOperator normal_ordered(double tol = default_prune_tolerance) const;

  std::string to_string() const;

private:
  std::vector<FermionTerm> terms_;
};

/// Applies a ladder product to an occupation-number determinant (bit k set =
/// mode k occupied). Returns the sign and resulting determinant, or nothing
/// when the product annihilates it. Sign convention matches jordan_wigner().
std::optional<std::pair<int, std::uint64_t>>
apply_ladder_product(const LadderProduct &product, std::uint64_t determinant);

/// Jordan-Wigner image with |1> = occupied:
/// a_j = Z_0..Z_{j-1} (X_j + iY_j)/2, a+_j = Z_0..Z_{j-1} (X_j - iY_j)/2.
QubitOperator jordan_wigner(const FermionOperator &op, std::size_t n_modes,
                            double tol = default_prune_tolerance);

} // namespace qew
