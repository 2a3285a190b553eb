// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Stream identifiers passed to derive_seed so that every random decision of a
// run draws from its own sequence.

#pragma once

#include <cstdint>

namespace replaylab::streams {

inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kRetrievalPool = 3;
inline constexpr std::uint64_t kInitialBuffer = 4;
inline constexpr std::uint64_t kResample = 5;
inline constexpr std::uint64_t kAgemReference = 6;
inline constexpr std::uint64_t kGssCoordinates = 7;
inline constexpr std::uint64_t kOldDomain = 8;
inline constexpr std::uint64_t kNewDomain = 9;
inline constexpr std::uint64_t kOldSplit = 10;
inline constexpr std::uint64_t kNewSplit = 11;

}  // namespace replaylab::streams
