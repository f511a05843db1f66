/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/shot_table.h"

#include "qew/integrals.h"

#include <sstream>
#include <stdexcept>

namespace qew {

bool ShotTable::consistent() const {
  std::int64_t sum = 0;
  for (const auto &[outcome, n] : counts) {
    if (n < 0)
      return false;
    sum += n;
  }
  return sum == shots_kept && shots_kept <= shots_total;
}

std::string write_shot_csv(const std::vector<ShotTable> &tables) {
  std::string out = "group,bitstring,count\n";
  for (const auto &t : tables) {
    out += "# group " + std::to_string(t.group_id) + " qubits " +
           std::to_string(t.qubit_count) + " total " +
           std::to_string(t.shots_total) + "\n";
    for (const auto &[outcome, n] : t.counts) {
      out += std::to_string(t.group_id);
      out += ',';
      out += format_bitstring(outcome, t.qubit_count);
      out += ',';
      out += std::to_string(n);
      out += '\n';
    }
  }
  return out;
}

std::vector<ShotTable> parse_shot_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<ShotTable> tables;
  std::vector<std::int64_t> declared_total;
  auto table_for = [&](std::size_t group) -> ShotTable & {
    if (tables.empty() || tables.back().group_id != group) {
      tables.push_back(ShotTable{});
      tables.back().group_id = group;
      declared_total.push_back(-1);
    }
    return tables.back();
  };
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    if (header) {
      if (line != "group,bitstring,count")
        throw std::invalid_argument("shot CSV: unexpected header '" + line + "'");
      header = false;
      continue;
    }
    if (line.front() == '#') {
      std::istringstream meta(line.substr(1));
      std::string kw1, kw2, kw3;
      std::size_t group = 0, qubits = 0;
      std::int64_t total = 0;
      if (!(meta >> kw1 >> group >> kw2 >> qubits >> kw3 >> total) ||
          kw1 != "group" || kw2 != "qubits" || kw3 != "total")
        throw std::invalid_argument("shot CSV: malformed comment '" + line + "'");
      auto &t = table_for(group);
      t.qubit_count = qubits;
      declared_total.back() = total;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::invalid_argument("shot CSV: malformed row '" + line + "'");
    const auto group = static_cast<std::size_t>(std::stoull(line.substr(0, c1)));
    const auto bits = line.substr(c1 + 1, c2 - c1 - 1);
    const auto count = std::stoll(line.substr(c2 + 1));
    auto &t = table_for(group);
    if (t.qubit_count == 0)
      t.qubit_count = bits.size();
    else if (t.qubit_count != bits.size())
      throw std::invalid_argument("shot CSV: bitstring length mismatch");
    t.add(parse_bitstring(bits), count);
  }
  for (std::size_t i = 0; i < tables.size(); ++i)
    if (declared_total[i] >= 0) {
      if (declared_total[i] < tables[i].shots_kept)
        throw std::invalid_argument("shot CSV: total below kept shots");
      tables[i].shots_total = declared_total[i];
    }
  return tables;
}

} // namespace qew
