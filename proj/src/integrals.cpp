/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/integrals.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qew {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return s;
}

double parse_fortran_double(std::string token) {
  std::replace(token.begin(), token.end(), 'D', 'E');
  std::replace(token.begin(), token.end(), 'd', 'e');
  double v = 0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size())
    throw std::invalid_argument("FCIDUMP: malformed number '" + token + "'");
  return v;
}

// Reads KEY=value pairs (NORB, NELEC, MS2) out of the namelist header.
long header_value(const std::string &header, const std::string &key,
                  bool required, long fallback) {
  std::size_t pos = 0;
  while ((pos = header.find(key, pos)) != std::string::npos) {
    const bool boundary =
        pos == 0 || !std::isalnum(static_cast<unsigned char>(header[pos - 1]));
    std::size_t p = pos + key.size();
    while (p < header.size() && header[p] == ' ')
      ++p;
    if (boundary && p < header.size() && header[p] == '=') {
      ++p;
      while (p < header.size() && header[p] == ' ')
        ++p;
      long v = 0;
      auto [end, ec] =
          std::from_chars(header.data() + p, header.data() + header.size(), v);
      if (ec != std::errc())
        throw std::invalid_argument("FCIDUMP: malformed value for " + key);
      return v;
    }
    pos += key.size();
  }
  if (required)
    throw std::invalid_argument("FCIDUMP: header is missing " + key + "=");
  return fallback;
}

std::string format_value(double v) {
  char buf[40];
  auto [end, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
  return std::string(buf, end);
}

} // namespace

MolecularIntegrals MolecularIntegrals::zeros(std::size_t n_orb, int n_elec,
                                             int ms2) {
  MolecularIntegrals ints;
  ints.n_orb = n_orb;
  ints.n_elec = n_elec;
  ints.ms2 = ms2;
  ints.h1 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_orb),
                                  static_cast<Eigen::Index>(n_orb));
  ints.h2.assign(n_orb * n_orb * n_orb * n_orb, 0.0);
  return ints;
}

void MolecularIntegrals::set_eri(std::size_t i, std::size_t j, std::size_t k,
                                 std::size_t l, double v) {
  for (auto [a, b, c, d] :
       {std::array{i, j, k, l}, std::array{j, i, k, l}, std::array{i, j, l, k},
        std::array{j, i, l, k}, std::array{k, l, i, j}, std::array{l, k, i, j},
        std::array{k, l, j, i}, std::array{l, k, j, i}})
    h2[eri_index(a, b, c, d)] = v;
}

void MolecularIntegrals::validate(double tol) const {
  const auto n = static_cast<Eigen::Index>(n_orb);
  if (h1.rows() != n || h1.cols() != n)
    throw std::invalid_argument("h1 must be n_orb x n_orb");
  if (h2.size() != n_orb * n_orb * n_orb * n_orb)
    throw std::invalid_argument("h2 must hold n_orb^4 entries");
  if (n_elec < 0 || static_cast<std::size_t>(n_elec) > 2 * n_orb)
    throw std::invalid_argument("electron count " + std::to_string(n_elec) +
                                " does not fit in " + std::to_string(n_orb) +
                                " orbitals");
  if ((n_elec + ms2) % 2 != 0 || std::abs(ms2) > n_elec)
    throw std::invalid_argument("MS2 inconsistent with electron count");
  if ((h1 - h1.transpose()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("h1 is not symmetric");
  for (std::size_t i = 0; i < n_orb; ++i)
    for (std::size_t j = 0; j < n_orb; ++j)
      for (std::size_t k = 0; k < n_orb; ++k)
        for (std::size_t l = 0; l < n_orb; ++l) {
          const double v = eri(i, j, k, l);
          if (std::abs(v - eri(j, i, k, l)) > tol ||
              std::abs(v - eri(i, j, l, k)) > tol ||
              std::abs(v - eri(k, l, i, j)) > tol)
            throw std::invalid_argument("h2 breaks 8-fold permutational symmetry");
        }
}

MolecularIntegrals parse_fcidump(std::string_view text) {
  const auto upper_text = upper(std::string(text));
  const auto start = upper_text.find("&FCI");
  if (start == std::string::npos)
    throw std::invalid_argument("FCIDUMP: missing &FCI header");
  std::size_t stop = upper_text.find("&END", start);
  std::size_t body = std::string::npos;
  if (stop != std::string::npos) {
    body = upper_text.find('\n', stop);
  } else {
    // Namelist may be closed by a lone '/' line.
    std::size_t line = upper_text.find('\n', start);
    while (line != std::string::npos) {
      auto next = upper_text.find('\n', line + 1);
      if (trim(upper_text.substr(line + 1, next - line - 1)) == "/") {
        stop = line + 1;
        body = next;
        break;
      }
      line = next;
    }
    if (stop == std::string::npos)
      throw std::invalid_argument("FCIDUMP: unterminated header");
  }
  const std::string header = upper_text.substr(start, stop - start);
  const long norb = header_value(header, "NORB", true, 0);
  const long nelec = header_value(header, "NELEC", true, 0);
  const long ms2 = header_value(header, "MS2", false, 0);
  if (norb <= 0)
    throw std::invalid_argument("FCIDUMP: NORB must be positive");

  auto ints = MolecularIntegrals::zeros(static_cast<std::size_t>(norb),
                                        static_cast<int>(nelec),
                                        static_cast<int>(ms2));
  const std::size_t n = ints.n_orb;
  std::vector<char> seen_eri(ints.h2.size(), 0);
  std::vector<char> seen_h1(n * n, 0);
  bool seen_core = false;

  std::istringstream in(body == std::string::npos ? std::string()
                                                  : std::string(text.substr(body)));
  std::string line;
  std::size_t line_no = 0;
  auto conflict = [](double a, double b) { return std::abs(a - b) > 1e-10; };
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty())
      continue;
    std::istringstream fields(t);
    std::string value_token;
    long idx[4];
    if (!(fields >> value_token >> idx[0] >> idx[1] >> idx[2] >> idx[3]))
      throw std::invalid_argument("FCIDUMP: malformed data line: " + t);
    const double v = parse_fortran_double(value_token);
    for (long x : idx)
      if (x < 0 || x > norb)
        throw std::invalid_argument("FCIDUMP: index out of range in line: " + t);
    const auto i = static_cast<std::size_t>(idx[0]);
    const auto j = static_cast<std::size_t>(idx[1]);
    const auto k = static_cast<std::size_t>(idx[2]);
    const auto l = static_cast<std::size_t>(idx[3]);
    if (i && j && k && l) {
      auto slot = ints.eri_index(i - 1, j - 1, k - 1, l - 1);
      if (seen_eri[slot] && conflict(ints.h2[slot], v))
        throw std::invalid_argument("FCIDUMP: conflicting duplicate integral: " + t);
      ints.set_eri(i - 1, j - 1, k - 1, l - 1, v);
      for (auto s : {ints.eri_index(i - 1, j - 1, k - 1, l - 1),
                     ints.eri_index(j - 1, i - 1, k - 1, l - 1),
                     ints.eri_index(i - 1, j - 1, l - 1, k - 1),
                     ints.eri_index(j - 1, i - 1, l - 1, k - 1),
                     ints.eri_index(k - 1, l - 1, i - 1, j - 1),
                     ints.eri_index(l - 1, k - 1, i - 1, j - 1),
                     ints.eri_index(k - 1, l - 1, j - 1, i - 1),
                     ints.eri_index(l - 1, k - 1, j - 1, i - 1)})
        seen_eri[s] = 1;
    } else if (i && j && !k && !l) {
      if (seen_h1[(i - 1) * n + (j - 1)] && conflict(ints.h1(i - 1, j - 1), v))
        throw std::invalid_argument("FCIDUMP: conflicting duplicate integral: " + t);
      ints.h1(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = v;
      ints.h1(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(i - 1)) = v;
      seen_h1[(i - 1) * n + (j - 1)] = seen_h1[(j - 1) * n + (i - 1)] = 1;
    } else if (!i && !j && !k && !l) {
      if (seen_core && conflict(ints.e_core, v))
        throw std::invalid_argument("FCIDUMP: conflicting core energies");
      ints.e_core = v;
      seen_core = true;
    } else if (i && !j && !k && !l) {
      // orbital energy record; not part of the Hamiltonian
    } else {
      throw std::invalid_argument("FCIDUMP: unsupported index pattern: " + t);
    }
  }
  ints.validate();
  return ints;
}

std::string write_fcidump(const MolecularIntegrals &ints) {
  const std::size_t n = ints.n_orb;
  std::string out = " &FCI NORB=" + std::to_string(n) +
                    ",NELEC=" + std::to_string(ints.n_elec) +
                    ",MS2=" + std::to_string(ints.ms2) + ",\n  ORBSYM=";
  for (std::size_t i = 0; i < n; ++i)
    out += "1,";
  out += "\n  ISYM=1,\n &END\n";
  auto line = [&out](double v, std::size_t i, std::size_t j, std::size_t k,
                     std::size_t l) {
    out += format_value(v);
    for (auto x : {i, j, k, l}) {
      out += ' ';
      out += std::to_string(x);
    }
    out += '\n';
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t k = 0; k <= i; ++k)
        for (std::size_t l = 0; l <= k; ++l) {
          if (k == i && l > j)
            continue;
          const double v = ints.eri(i, j, k, l);
          if (v != 0.0)
            line(v, i + 1, j + 1, k + 1, l + 1);
        }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = ints.h1(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(j));
      if (v != 0.0)
        line(v, i + 1, j + 1, 0, 0);
    }
  line(ints.e_core, 0, 0, 0, 0);
  return out;
}

MolecularIntegrals read_fcidump(const std::filesystem::path &path) {
  return parse_fcidump(read_text_file(path));
}

void save_fcidump(const std::filesystem::path &path,
                  const MolecularIntegrals &ints) {
  write_text_file(path, write_fcidump(ints));
}

FermionOperator build_hamiltonian(const MolecularIntegrals &ints) {
  const std::size_t n = ints.n_orb;
  FermionOperator h = FermionOperator::identity(ints.e_core);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      const double v = ints.h1(static_cast<Eigen::Index>(p),
                               static_cast<Eigen::Index>(q));
      if (v == 0.0)
        continue;
      for (int s = 0; s < 2; ++s)
        h.add_term(v, {{spin_orbital(p, s), true}, {spin_orbital(q, s), false}});
    }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = 0; s < n; ++s) {
          const double v = ints.eri(p, q, r, s);
          if (v == 0.0)
            continue;
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
              const auto ps = spin_orbital(p, a), qs = spin_orbital(q, a);
              const auto rs = spin_orbital(r, b), ss = spin_orbital(s, b);
              if (ps == rs || qs == ss)
                continue;
              h.add_term(0.5 * v, {{ps, true}, {rs, true}, {ss, false}, {qs, false}});
            }
        }
  return h;
}

std::uint64_t hf_occupation(const MolecularIntegrals &ints) {
  std::uint64_t occ = 0;
  for (int i = 0; i < ints.n_alpha(); ++i)
    occ |= std::uint64_t{1} << spin_orbital(static_cast<std::size_t>(i), 0);
  for (int i = 0; i < ints.n_beta(); ++i)
    occ |= std::uint64_t{1} << spin_orbital(static_cast<std::size_t>(i), 1);
  return occ;
}

double hf_energy(const MolecularIntegrals &ints, std::uint64_t occupation) {
  if (std::popcount(occupation) != ints.n_elec)
    throw std::invalid_argument("occupation has " +
                                std::to_string(std::popcount(occupation)) +
                                " electrons, expected " +
                                std::to_string(ints.n_elec));
  if (2 * ints.n_orb < 64 && (occupation >> (2 * ints.n_orb)) != 0)
    throw std::invalid_argument("occupation references orbitals beyond n_orb");
  std::vector<std::size_t> occ;
  for (std::size_t so = 0; so < 2 * ints.n_orb; ++so)
    if ((occupation >> so) & 1U)
      occ.push_back(so);
  double e = ints.e_core;
  for (auto a : occ)
    e += ints.h1(static_cast<Eigen::Index>(a / 2), static_cast<Eigen::Index>(a / 2));
  for (auto a : occ)
    for (auto b : occ) {
      const std::size_t i = a / 2, j = b / 2;
      e += 0.5 * ints.eri(i, i, j, j);
      if (a % 2 == b % 2)
        e -= 0.5 * ints.eri(i, j, j, i);
    }
  return e;
}

int OrbitalBundle::electron_count() const {
  return static_cast<int>(std::lround(mo_occ.sum()));
}

void OrbitalBundle::validate(double tol) const {
  const auto nao = ao_overlap.rows();
  if (ao_overlap.cols() != nao || nao == 0)
    throw std::invalid_argument("AO_OVERLAP must be square and non-empty");
  if (mo_coeff.rows() != nao)
    throw std::invalid_argument("MO_COEFF row count must equal n_ao");
  if (mo_occ.size() != mo_coeff.cols())
    throw std::invalid_argument("MO_OCC length must equal n_mo");
  if (projector_coeff.size() > 0 && projector_coeff.rows() != nao)
    throw std::invalid_argument("PROJECTORS row count must equal n_ao");
  if ((ao_overlap - ao_overlap.transpose()).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("AO_OVERLAP is not symmetric");
  for (Eigen::Index i = 0; i < mo_occ.size(); ++i) {
    const double o = mo_occ(i);
    if (std::abs(o) > tol && std::abs(o - 1) > tol && std::abs(o - 2) > tol)
      throw std::invalid_argument("MO_OCC entries must be 0, 1 or 2");
  }
  const Eigen::MatrixXd metric = mo_coeff.transpose() * ao_overlap * mo_coeff;
  const auto nmo = mo_coeff.cols();
  if ((metric - Eigen::MatrixXd::Identity(nmo, nmo)).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("MO_COEFF is not orthonormal in the AO metric");
}

OrbitalBundle parse_orbital_bundle(std::string_view text) {
  OrbitalBundle bundle;
  std::istringstream in{std::string(text)};
  std::string token;
  bool have[4] = {false, false, false, false};
  while (in >> token) {
    if (token.front() == '#') {
      std::getline(in, token);
      continue;
    }
    long rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0)
      throw std::invalid_argument("orbital bundle: bad dimensions for " + token);
    Eigen::MatrixXd m(rows, cols);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) {
        std::string v;
        if (!(in >> v))
          throw std::invalid_argument("orbital bundle: truncated block " + token);
        m(r, c) = parse_fortran_double(v);
      }
    if (token == "AO_OVERLAP") {
      bundle.ao_overlap = std::move(m);
      have[0] = true;
    } else if (token == "MO_COEFF") {
      bundle.mo_coeff = std::move(m);
      have[1] = true;
    } else if (token == "MO_OCC") {
      if (rows != 1 && cols != 1)
        throw std::invalid_argument("orbital bundle: MO_OCC must be a vector");
      bundle.mo_occ = Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
      have[2] = true;
    } else if (token == "PROJECTORS") {
      bundle.projector_coeff = std::move(m);
      have[3] = true;
    } else {
      throw std::invalid_argument("orbital bundle: unknown block " + token);
    }
  }
  static constexpr const char *names[] = {"AO_OVERLAP", "MO_COEFF", "MO_OCC",
                                          "PROJECTORS"};
  for (int i = 0; i < 4; ++i)
    if (!have[i])
      throw std::invalid_argument(std::string("orbital bundle: missing ") +
                                  names[i]);
  bundle.validate();
  return bundle;
}

std::string write_orbital_bundle(const OrbitalBundle &bundle) {
  std::string out;
  auto block = [&out](const char *name, const Eigen::MatrixXd &m) {
    out += name;
    out += ' ' + std::to_string(m.rows()) + ' ' + std::to_string(m.cols()) + '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c)
          out += ' ';
        out += format_value(m(r, c));
      }
      out += '\n';
    }
  };
  block("AO_OVERLAP", bundle.ao_overlap);
  block("MO_COEFF", bundle.mo_coeff);
  block("MO_OCC", bundle.mo_occ.transpose());
  block("PROJECTORS", bundle.projector_coeff);
  return out;
}

OrbitalBundle read_orbital_bundle(const std::filesystem::path &path) {
  return parse_orbital_bundle(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view text) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::uint64_t parse_bitstring(std::string_view bits) {
  if (bits.size() > 64)
    throw std::invalid_argument("bitstrings longer than 64 are not supported");
  std::uint64_t mask = 0;
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k] == '1')
      mask |= std::uint64_t{1} << k;
    else if (bits[k] != '0')
      throw std::invalid_argument("bitstring must contain only 0/1: " +
                                  std::string(bits));
  }
  return mask;
}

std::string format_bitstring(std::uint64_t mask, std::size_t length) {
  std::string s(length, '0');
  for (std::size_t k = 0; k < length; ++k)
    if ((mask >> k) & 1U)
      s[k] = '1';
  return s;
}

} // namespace qew
