/*
 * Copyright 2026 The hetbo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hetbo {

using Rng = std::mt19937_64;

/// Counter-based stream splitting: every (master, stream) pair maps to an
/// independent 64-bit seed, so parallel seeds never share generator state.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

inline Rng make_rng(std::uint64_t master, std::uint64_t stream = 0) {
  return Rng(split_seed(master, stream));
}

/// FNV-1a over raw bytes; used to derive content-keyed streams.
std::uint64_t hash_bytes(const void* data, std::size_t size, std::uint64_t h = 1469598103934665603ULL);

}  // namespace hetbo
