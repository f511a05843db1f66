/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/qubit_operator.h"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qew {

std::string format_real(double v) {
  if (v == 0.0)
    v = 0.0; // collapse -0
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string format_coefficient(std::complex<double> c) {
  std::string im = format_real(c.imag());
  if (im.front() != '-')
    im.insert(im.begin(), '+');
  return "(" + format_real(c.real()) + im + "j)";
}

QubitOperator::QubitOperator(std::size_t qubit_count) : n_(qubit_count) {}

QubitOperator::QubitOperator(const PauliString &string,
                             coefficient_type coefficient)
    : n_(string.qubit_count()) {
  terms_.emplace(string, coefficient);
}

QubitOperator QubitOperator::identity(std::size_t qubit_count,
                                      coefficient_type coefficient) {
  return QubitOperator(PauliString(qubit_count), coefficient);
}

void QubitOperator::adopt_size(std::size_t n) {
  if (n_ == n)
    return;
  if (n_ == 0 && terms_.empty()) {
    n_ = n;
    return;
  }
  throw std::invalid_argument("qubit count mismatch in QubitOperator (" +
                              std::to_string(n_) + " vs " + std::to_string(n) +
                              ")");
}

void QubitOperator::add_term(const PauliString &string,
                             coefficient_type coefficient) {
  adopt_size(string.qubit_count());
  auto [it, inserted] = terms_.try_emplace(string, coefficient);
  if (!inserted)
    it->second += coefficient;
}

QubitOperator::coefficient_type
QubitOperator::coefficient(const PauliString &string) const {
  auto it = terms_.find(string);
  return it == terms_.end() ? coefficient_type{} : it->second;
}

QubitOperator &QubitOperator::operator+=(const QubitOperator &other) {
  if (other.terms_.empty())
    return *this;
  adopt_size(other.n_);
  for (const auto &[p, c] : other.terms_)
    add_term(p, c);
  return *this;
}

QubitOperator &QubitOperator::operator-=(const QubitOperator &other) {
  if (other.terms_.empty())
    return *this;
  adopt_size(other.n_);
  for (const auto &[p, c] : other.terms_)
    add_term(p, -c);
  return *this;
}

QubitOperator &QubitOperator::operator*=(coefficient_type scalar) {
  for (auto &[p, c] : terms_)
    c *= scalar;
  return *this;
}

QubitOperator operator*(const QubitOperator &a, const QubitOperator &b) {
  if (a.empty() || b.empty())
    return QubitOperator(std::max(a.n_, b.n_));
  if (a.n_ != b.n_)
    throw std::invalid_argument("qubit count mismatch in operator product");
  QubitOperator out(a.n_);
  for (const auto &[pa, ca] : a.terms_)
    for (const auto &[pb, cb] : b.terms_) {
      auto prod = pauli_multiply(pa, pb);
      out.add_term(prod.string, prod.phase() * ca * cb);
    }
  return out;
}

QubitOperator QubitOperator::adjoint() const {
  QubitOperator out(n_);
  for (const auto &[p, c] : terms_)
    out.terms_.emplace_hint(out.terms_.end(), p, std::conj(c));
  return out;
}

bool QubitOperator::is_hermitian(double tol) const {
  for (const auto &[p, c] : terms_)
    if (std::abs(c.imag()) > tol)
      return false;
  return true;
}

bool QubitOperator::is_anti_hermitian(double tol) const {
  for (const auto &[p, c] : terms_)
    if (std::abs(c.real()) > tol)
      return false;
  return true;
}

std::string QubitOperator::to_string() const {
  std::string out;
  for (const auto &[p, c] : terms_) {
    out += format_coefficient(c);
    out += " [";
    out += p.to_string();
    out += "]\n";
  }
  return out;
}

QubitOperator simplify(const QubitOperator &op, double tol) {
  if (tol < 0)
    throw std::invalid_argument("simplify tolerance must be non-negative");
  QubitOperator out(op.qubit_count());
  for (const auto &[p, c] : op.terms())
    if (std::abs(c) > tol)
      out.add_term(p, c);
  return out;
}

QubitOperator commutator(const QubitOperator &a, const QubitOperator &b) {
  return simplify(a * b - b * a, 0.0);
}

} // namespace qew
