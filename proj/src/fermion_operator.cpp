/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/fermion_operator.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>

namespace qew {

namespace {

using Key = std::vector<std::pair<std::size_t, bool>>;

Key to_key(const LadderProduct &p) {
  Key k;
  k.reserve(p.size());
  for (const auto &op : p)
    k.emplace_back(op.mode, op.dagger);
  return k;
}

LadderProduct from_key(const Key &k) {
  LadderProduct p;
  p.reserve(k.size());
  for (const auto &[mode, dagger] : k)
    p.push_back({mode, dagger});
  return p;
}

// Bubble sort into normal order, spawning contraction terms whenever an
// annihilator moves past a creator on the same mode.
void normal_order_into(std::complex<double> coefficient, LadderProduct product,
                       std::map<Key, std::complex<double>> &out) {
  for (std::size_t i = 1; i < product.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      auto &left = product[j - 1];
      auto &right = product[j];
      if (right.dagger && !left.dagger) {
        if (left.mode == right.mode) {
          LadderProduct contracted;
          contracted.reserve(product.size() - 2);
          for (std::size_t k = 0; k < product.size(); ++k)
            if (k != j - 1 && k != j)
              contracted.push_back(product[k]);
          normal_order_into(coefficient, std::move(contracted), out);
        }
        std::swap(left, right);
        coefficient = -coefficient;
      } else if (right.dagger == left.dagger) {
        if (right.mode == left.mode)
          return; // a a = a+ a+ = 0
        if (right.mode > left.mode) {
          std::swap(left, right);
          coefficient = -coefficient;
        }
      }
    }
  }
  out[to_key(product)] += coefficient;
}

const QubitOperator &ladder_image(std::size_t mode, bool dagger,
                                  std::size_t n_modes,
                                  std::map<std::pair<std::size_t, bool>,
                                           QubitOperator> &cache) {
  auto key = std::make_pair(mode, dagger);
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  const std::uint64_t parity =
      mode == 0 ? 0 : ((std::uint64_t{1} << mode) - 1);
  const std::uint64_t bit = std::uint64_t{1} << mode;
  QubitOperator op(n_modes);
  op.add_term(PauliString(n_modes, bit, parity), 0.5);
  op.add_term(PauliString(n_modes, bit, parity | bit),
              dagger ? std::complex<double>(0, -0.5)
                     : std::complex<double>(0, 0.5));
  return cache.emplace(key, std::move(op)).first->second;
}

} // namespace

FermionOperator FermionOperator::identity(std::complex<double> coefficient) {
  FermionOperator op;
  op.add_term(coefficient, {});
  return op;
}

FermionOperator FermionOperator::creation(std::size_t mode) {
  FermionOperator op;
  op.add_term(1.0, {{mode, true}});
  return op;
}

FermionOperator FermionOperator::annihilation(std::size_t mode) {
  FermionOperator op;
  op.add_term(1.0, {{mode, false}});
  return op;
}

FermionOperator FermionOperator::hopping(std::size_t p, std::size_t q,
                                         std::complex<double> coefficient) {
  FermionOperator op;
  op.add_term(coefficient, {{p, true}, {q, false}});
  return op;
}

FermionOperator FermionOperator::number(std::size_t mode) {
  return hopping(mode, mode);
}

void FermionOperator::add_term(std::complex<double> coefficient,
                               LadderProduct product) {
  terms_.push_back({coefficient, std::move(product)});
}

std::size_t FermionOperator::mode_count() const {
  std::size_t n = 0;
  for (const auto &t : terms_)
    for (const auto &op : t.product)
      n = std::max(n, op.mode + 1);
  return n;
}

FermionOperator &FermionOperator::operator+=(const FermionOperator &other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  return *this;
}

FermionOperator &FermionOperator::operator-=(const FermionOperator &other) {
  terms_.reserve(terms_.size() + other.terms_.size());
  for (const auto &t : other.terms_)
    terms_.push_back({-t.coefficient, t.product});
  return *this;
}

FermionOperator &FermionOperator::operator*=(std::complex<double> scalar) {
  for (auto &t : terms_)
    t.coefficient *= scalar;
  return *this;
}

FermionOperator operator*(const FermionOperator &a, const FermionOperator &b) {
  FermionOperator out;
  out.terms_.reserve(a.terms_.size() * b.terms_.size());
  for (const auto &ta : a.terms_)
    for (const auto &tb : b.terms_) {
      LadderProduct p = ta.product;
      p.insert(p.end(), tb.product.begin(), tb.product.end());
      out.terms_.push_back({ta.coefficient * tb.coefficient, std::move(p)});
    }
  return out;
}

FermionOperator FermionOperator::adjoint() const {
  FermionOperator out;
  out.terms_.reserve(terms_.size());
  for (const auto &t : terms_) {
    LadderProduct p(t.product.rbegin(), t.product.rend());
    for (auto &op : p)
      op.dagger = !op.dagger;
    out.terms_.push_back({std::conj(t.coefficient), std::move(p)});
  }
  return out;
}

FermionOperator FermionOperator::normal_ordered(double tol) const {
  std::map<Key, std::complex<double>> acc;
  for (const auto &t : terms_)
    normal_order_into(t.coefficient, t.product, acc);
  FermionOperator out;
  for (const auto &[key, c] : acc)
    if (std::abs(c) > tol)
      out.add_term(c, from_key(key));
  return out;
}

std::string FermionOperator::to_string() const {
  std::string out;
  for (const auto &t : terms_) {
    out += format_coefficient(t.coefficient);
    out += " [";
    for (std::size_t i = 0; i < t.product.size(); ++i) {
      if (i)
        out += ' ';
      out += std::to_string(t.product[i].mode);
      if (t.product[i].dagger)
        out += '^';
    }
    out += "]\n";
  }
  return out;
}

std::optional<std::pair<int, std::uint64_t>>
apply_ladder_product(const LadderProduct &product, std::uint64_t determinant) {
  int sign = 1;
  for (auto it = product.rbegin(); it != product.rend(); ++it) {
    const std::uint64_t bit = std::uint64_t{1} << it->mode;
    const bool occupied = (determinant & bit) != 0;
    if (occupied == it->dagger)
      return std::nullopt;
    if (std::popcount(determinant & (bit - 1)) % 2)
      sign = -sign;
    determinant ^= bit;
  }
  return std::make_pair(sign, determinant);
}

QubitOperator jordan_wigner(const FermionOperator &op, std::size_t n_modes,
                            double tol) {
  if (op.mode_count() > n_modes)
    throw std::out_of_range("fermion mode index " +
                            std::to_string(op.mode_count() - 1) +
                            " out of range for " + std::to_string(n_modes) +
                            " modes");
  std::map<std::pair<std::size_t, bool>, QubitOperator> cache;
  QubitOperator out(n_modes);
  for (const auto &t : op.terms()) {
    QubitOperator image = QubitOperator::identity(n_modes, t.coefficient);
    for (const auto &ladder : t.product)
      image = image * ladder_image(ladder.mode, ladder.dagger, n_modes, cache);
    out += image;
  }
  return simplify(out, tol);
}

} // namespace qew
