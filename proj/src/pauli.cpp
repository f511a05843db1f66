/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/pauli.h"

#include <bit>
#include <charconv>
#include <stdexcept>

namespace qew {

namespace {

void require_same_size(const PauliString &a, const PauliString &b) {
  if (a.qubit_count() != b.qubit_count())
    throw std::invalid_argument("Pauli strings act on different qubit counts (" +
                                std::to_string(a.qubit_count()) + " vs " +
                                std::to_string(b.qubit_count()) + ")");
}

std::uint64_t low_mask(std::size_t n) {
  return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

} // namespace

char to_char(PauliLetter letter) {
  static constexpr char table[] = {'I', 'X', 'Y', 'Z'};
  return table[static_cast<int>(letter)];
}

PauliLetter letter_from_char(char c) {
  switch (c) {
  case 'I':
    return PauliLetter::I;
  case 'X':
    return PauliLetter::X;
  case 'Y':
    return PauliLetter::Y;
  case 'Z':
    return PauliLetter::Z;
  }
  throw std::invalid_argument(std::string("not a Pauli letter: '") + c + "'");
}

PauliString::PauliString(std::size_t qubit_count) : n_(qubit_count) {
  if (qubit_count > max_qubits)
    throw std::invalid_argument("PauliString supports at most 64 qubits");
}

PauliString::PauliString(std::size_t qubit_count, std::uint64_t x_mask,
                         std::uint64_t z_mask)
    : PauliString(qubit_count) {
  if (((x_mask | z_mask) & ~low_mask(qubit_count)) != 0)
    throw std::invalid_argument("Pauli mask has bits beyond qubit_count");
  x_ = x_mask;
  z_ = z_mask;
}

PauliString PauliString::from_letters(std::string_view letters) {
  PauliString p(letters.size());
  for (std::size_t q = 0; q < letters.size(); ++q)
    p.set(q, letter_from_char(letters[q]));
  return p;
}

PauliString PauliString::from_sparse(std::size_t qubit_count,
                                     std::string_view sparse) {
  PauliString p(qubit_count);
  std::size_t pos = 0;
  while (pos < sparse.size()) {
    if (sparse[pos] == ' ') {
      ++pos;
      continue;
    }
    auto letter = letter_from_char(sparse[pos++]);
    std::size_t qubit = 0;
    auto [end, ec] =
        std::from_chars(sparse.data() + pos, sparse.data() + sparse.size(), qubit);
    if (ec != std::errc())
      throw std::invalid_argument("malformed sparse Pauli string: " +
                                  std::string(sparse));
    pos = static_cast<std::size_t>(end - sparse.data());
    if (p.letter(qubit) != PauliLetter::I)
      throw std::invalid_argument("qubit repeated in sparse Pauli string");
    p.set(qubit, letter);
  }
  return p;
}

std::size_t PauliString::weight() const { return std::popcount(x_ | z_); }

std::size_t PauliString::y_count() const { return std::popcount(x_ & z_); }

PauliLetter PauliString::letter(std::size_t qubit) const {
  if (qubit >= n_)
    throw std::out_of_range("qubit index " + std::to_string(qubit) +
                            " out of range for " + std::to_string(n_) +
                            "-qubit Pauli string");
  int code = static_cast<int>((x_ >> qubit) & 1U) |
             (static_cast<int>((z_ >> qubit) & 1U) << 1);
  // code: 0=I 1=X 2=Z 3=Y
  static constexpr PauliLetter table[] = {PauliLetter::I, PauliLetter::X,
                                          PauliLetter::Z, PauliLetter::Y};
  return table[code];
}

void PauliString::set(std::size_t qubit, PauliLetter letter) {
  if (qubit >= n_)
    throw std::out_of_range("qubit index " + std::to_string(qubit) +
                            " out of range for " + std::to_string(n_) +
                            "-qubit Pauli string");
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  x_ &= ~bit;
  z_ &= ~bit;
  if (letter == PauliLetter::X || letter == PauliLetter::Y)
    x_ |= bit;
  if (letter == PauliLetter::Z || letter == PauliLetter::Y)
    z_ |= bit;
}

std::string PauliString::letters() const {
  std::string out(n_, 'I');
  for (std::size_t q = 0; q < n_; ++q)
    out[q] = to_char(letter(q));
  return out;
}

std::string PauliString::to_string() const {
  std::string out;
  for (std::size_t q = 0; q < n_; ++q) {
    auto l = letter(q);
    if (l == PauliLetter::I)
      continue;
    if (!out.empty())
      out += ' ';
    out += to_char(l);
    out += std::to_string(q);
  }
  return out;
}

std::strong_ordering operator<=>(const PauliString &a, const PauliString &b) {
  if (auto c = a.n_ <=> b.n_; c != 0)
    return c;
  const std::uint64_t diff = (a.x_ ^ b.x_) | (a.z_ ^ b.z_);
  if (diff == 0)
    return std::strong_ordering::equal;
  const auto q = static_cast<std::size_t>(std::countr_zero(diff));
  return static_cast<int>(a.letter(q)) <=> static_cast<int>(b.letter(q));
}

std::complex<double> PhasedPauli::phase() const {
  static const std::complex<double> table[] = {
      {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[((i_power % 4) + 4) % 4];
}

PhasedPauli pauli_multiply(const PhasedPauli &a, const PhasedPauli &b) {
  require_same_size(a.string, b.string);
  const auto &p = a.string;
  const auto &q = b.string;
  const std::uint64_t xa = p.x_mask() & ~p.z_mask();
  const std::uint64_t ya = p.x_mask() & p.z_mask();
  const std::uint64_t za = ~p.x_mask() & p.z_mask();
  const std::uint64_t xb = q.x_mask() & ~q.z_mask();
  const std::uint64_t yb = q.x_mask() & q.z_mask();
  const std::uint64_t zb = ~q.x_mask() & q.z_mask();
  // XY = iZ, YZ = iX, ZX = iY; reversed orders carry -i.
  const int plus = std::popcount((xa & yb) | (ya & zb) | (za & xb));
  const int minus = std::popcount((ya & xb) | (za & yb) | (xa & zb));
  PhasedPauli out{PauliString(p.qubit_count(), p.x_mask() ^ q.x_mask(),
                              p.z_mask() ^ q.z_mask()),
                  0};
  out.i_power = (((a.i_power + b.i_power + plus - minus) % 4) + 4) % 4;
  return out;
}

PhasedPauli pauli_multiply(const PauliString &a, const PauliString &b) {
  return pauli_multiply(PhasedPauli{a, 0}, PhasedPauli{b, 0});
}

bool qubit_wise_commutes(const PauliString &a, const PauliString &b) {
  require_same_size(a, b);
  const std::uint64_t both = a.support() & b.support();
  return ((a.x_mask() ^ b.x_mask()) & both) == 0 &&
         ((a.z_mask() ^ b.z_mask()) & both) == 0;
}

bool commutes(const PauliString &a, const PauliString &b) {
  require_same_size(a, b);
  const int anti = std::popcount((a.x_mask() & b.z_mask()) ^
                                 (a.z_mask() & b.x_mask()));
  return anti % 2 == 0;
}

} // namespace qew
