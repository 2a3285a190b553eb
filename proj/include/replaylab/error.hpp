// Copyright (c) 2026, The replaylab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exception types shared by every replaylab module.

#pragma once

#include <stdexcept>
#include <string>

namespace replaylab {

/// Mismatched shapes, layouts or an unusable experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates an operation's precondition.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace replaylab
