// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>

namespace sdft {

/// Path of the in-progress file for `path` (`<path>.partial`).
std::filesystem::path partial_path(const std::filesystem::path& path);

/// Writes through `<path>.partial` and renames on success. If `writer`
/// throws, the partial file is left on disk and the exception propagates.
void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& writer, bool binary = false);

/// Opens for reading; throws ErrorCode::kIo naming the path when missing.
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);

}  // namespace sdft
