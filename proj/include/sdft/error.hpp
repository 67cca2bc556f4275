// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sdft {

/// Error categories shared by the C++ core and the C API status codes.
/// The numeric values are part of the C ABI (see sdft.h).
enum class ErrorCode : int {
    kInvalidArgument = 1,
    kIo = 2,
    kBadMagic = 3,
    kVersionMismatch = 4,
    kTruncated = 5,
    kNonFinite = 6,
    kDimension = 7,
    kDegenerateVector = 8,
    kEmptyGroup = 9,
    kCannotSampleNegatives = 10,
    kMissingEmbedding = 11,
    kSoftLabel = 12,
    kDiverged = 13,
    kCollapsedEmbedding = 14,
    kParse = 15,
    kEmptyInput = 16,
    kInternal = 99,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace sdft
