/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qew {

/// Measured bitstring counts for one measurement group. Keys are basis
/// indices (bit k = qubit k). Invariant: sum(counts) == shots_kept <=
/// shots_total.
struct ShotTable {
  std::size_t group_id = 0;
  std::size_t qubit_count = 0;
  std::map<std::uint64_t, std::int64_t> counts;
  std::int64_t shots_total = 0;
  std::int64_t shots_kept = 0;

  void add(std::uint64_t outcome, std::int64_t n = 1) {
    counts[outcome] += n;
    shots_total += n;
    shots_kept += n;
  }
  bool consistent() const;
};

/// CSV `group,bitstring,count` (header line included), tables in order.
std::string write_shot_csv(const std::vector<ShotTable> &tables);
/// Inverse of write_shot_csv. shots_total is restored from the optional
/// `# group <id> total <n>` comment lines; otherwise equals shots_kept.
std::vector<ShotTable> parse_shot_csv(std::string_view text);

} // namespace qew
