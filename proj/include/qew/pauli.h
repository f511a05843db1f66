/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include <compare>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace qew {

enum class PauliLetter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(PauliLetter letter);
PauliLetter letter_from_char(char c);

/// Tensor product of single-qubit Paulis stored as x/z bitmasks (symplectic
/// form). Qubit q is bit q of both masks: X=(1,0), Y=(1,1), Z=(0,1).
class PauliString {
public:
  static constexpr std::size_t max_qubits = 64;

  PauliString() = default;
  explicit PauliString(std::size_t qubit_count);
  PauliString(std::size_t qubit_count, std::uint64_t x_mask,
              std::uint64_t z_mask);

  /// Dense letters, qubit 0 first, e.g. "XIZY".
  static PauliString from_letters(std::string_view letters);
  /// Sparse form used by the text rendering, e.g. "X0 Z1 Y3" ("" = identity).
  static PauliString from_sparse(std::size_t qubit_count,
                                 std::string_view sparse);

  std::size_t qubit_count() const { return n_; }
  std::uint64_t x_mask() const { return x_; }
  std::uint64_t z_mask() const { return z_; }
  std::uint64_t support() const { return x_ | z_; }
  std::size_t weight() const;
  std::size_t y_count() const;
  bool is_identity() const { return (x_ | z_) == 0; }
  bool is_diagonal() const { return x_ == 0; }

  PauliLetter letter(std::size_t qubit) const;
  void set(std::size_t qubit, PauliLetter letter);

  std::string letters() const;
  std::string to_string() const;

  friend bool operator==(const PauliString &, const PauliString &) = default;
  /// Lexicographic over letters (I < X < Y < Z), qubit 0 most significant.
  friend std::strong_ordering operator<=>(const PauliString &a,
                                          const PauliString &b);

private:
  std::size_t n_ = 0;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

/// Pauli string with a global phase i^i_power.
struct PhasedPauli {
  PauliString string;
  int i_power = 0;

  std::complex<double> phase() const;
};

PhasedPauli pauli_multiply(const PhasedPauli &a, const PhasedPauli &b);
PhasedPauli pauli_multiply(const PauliString &a, const PauliString &b);

/// True iff on every qubit the letters agree or one of them is I.
bool qubit_wise_commutes(const PauliString &a, const PauliString &b);
/// Ordinary (global) commutation.
bool commutes(const PauliString &a, const PauliString &b);

} // namespace qew

template <> struct std::hash<qew::PauliString> {
  std::size_t operator()(const qew::PauliString &p) const noexcept {
    std::uint64_t h = p.x_mask() * 0x9E3779B97F4A7C15ULL;
    h ^= p.z_mask() + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h ^ p.qubit_count());
  }
};
