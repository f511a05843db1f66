/*******************************************************************************
 * Copyright (c) 2026 The qew Authors.                                         *
 * All rights reserved.                                                        *
 *                                                                             *
 * This source code and the accompanying materials are made available under    *
 * the terms of the Apache License 2.0 which accompanies this distribution.    *
 ******************************************************************************/
#include "qew/parallel.h"

#include <cstdlib>
#include <string>

namespace qew {

namespace {

std::atomic<std::size_t> &configured() {
  static std::atomic<std::size_t> value = [] {
    if (const char *env = std::getenv("QEW_THREADS")) {
      try {
        const auto n = std::stoul(env);
        if (n > 0)
          return static_cast<std::size_t>(n);
      } catch (...) {
      }
    }
    return std::size_t{1};
  }();
  return value;
}

} // namespace

std::size_t thread_count() { return configured().load(); }

void set_thread_count(std::size_t n) { configured() = n == 0 ? 1 : n; }

} // namespace qew
