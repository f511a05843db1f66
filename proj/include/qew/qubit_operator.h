/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include "qew/pauli.h"

#include <complex>
#include <map>
#include <string>

namespace qew {

inline constexpr double default_prune_tolerance = 1e-12;

/// Weighted sum of Pauli strings on a fixed number of qubits. Terms are kept
/// in lexicographic string order so iteration and rendering are
/// deterministic.
class QubitOperator {
public:
  using coefficient_type = std::complex<double>;
  using term_map = std::map<PauliString, coefficient_type>;

  QubitOperator() = default;
  explicit QubitOperator(std::size_t qubit_count);
  QubitOperator(const PauliString &string, coefficient_type coefficient = 1.0);

  static QubitOperator identity(std::size_t qubit_count,
                                coefficient_type coefficient = 1.0);

  std::size_t qubit_count() const { return n_; }
  const term_map &terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Adds into an existing term if present (duplicates merge immediately;
  /// zero coefficients survive until simplify()).
  void add_term(const PauliString &string, coefficient_type coefficient);
  coefficient_type coefficient(const PauliString &string) const;

  QubitOperator &operator+=(const QubitOperator &other);
  QubitOperator &operator-=(const QubitOperator &other);
  QubitOperator &operator*=(coefficient_type scalar);

  friend QubitOperator operator+(QubitOperator a, const QubitOperator &b) {
    return a += b;
  }
  friend QubitOperator operator-(QubitOperator a, const QubitOperator &b) {
    return a -= b;
  }
  friend QubitOperator operator*(QubitOperator a, coefficient_type s) {
    return a *= s;
  }
  friend QubitOperator operator*(coefficient_type s, QubitOperator a) {
    return a *= s;
  }
  friend QubitOperator operator*(const QubitOperator &a, const QubitOperator &b);

  QubitOperator adjoint() const;
  bool is_hermitian(double tol = default_prune_tolerance) const;
  bool is_anti_hermitian(double tol = default_prune_tolerance) const;

  /// One term per line, `(re+imj) [X0 Z1 Y3]`, in canonical term order.
  std::string to_string() const;

private:
  void adopt_size(std::size_t n);

  std::size_t n_ = 0;
  term_map terms_;
};

/// Drops terms whose |coefficient| <= tol.
QubitOperator simplify(const QubitOperator &op,
                       double tol = default_prune_tolerance);

QubitOperator commutator(const QubitOperator &a, const QubitOperator &b);

/// Shortest round-trip decimal text; -0 is written as 0.
std::string format_real(double v);

/// `(re+imj)` with shortest round-trip digits, e.g. `(-0.5+0j)`.
std::string format_coefficient(std::complex<double> c);

} // namespace qew
