// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/fileio.hpp"

#include <system_error>

#include "sdft/error.hpp"

namespace sdft {

std::filesystem::path partial_path(const std::filesystem::path& path) {
    auto p = path;
    p += ".partial";
    return p;
}

void write_file(const std::filesystem::path& path,
                const std::function<void(std::ostream&)>& writer, bool binary) {
    const auto tmp = partial_path(path);
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    {
        std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!out) {
            fail(ErrorCode::kIo, "cannot open for writing: " + tmp.string());
        }
        writer(out);
        out.flush();
        if (!out) {
            fail(ErrorCode::kIo, "write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        fail(ErrorCode::kIo, "cannot rename " + tmp.string() + " to " + path.string() + ": " +
                                 ec.message());
    }
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        fail(ErrorCode::kIo, "no such file: " + path.string());
    }
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) {
        fail(ErrorCode::kIo, "cannot open for reading: " + path.string());
    }
    return in;
}

}  // namespace sdft
