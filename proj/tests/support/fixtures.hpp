// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "sdft/corpus.hpp"
#include "sdft/random.hpp"

namespace fixture {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("sdft_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

inline std::vector<float> random_vector(sdft::Rng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

inline sdft::EmbeddingMatrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t dim) {
    sdft::Rng rng(seed);
    sdft::EmbeddingMatrix m("random", dim);
    for (std::size_t r = 0; r < rows; ++r) {
        m.add_row("t" + std::to_string(r), random_vector(rng, dim));
    }
    return m;
}

/// G groups with `train` train questions, `heldout` held-out questions and one
/// passage each; ids follow the synthetic naming scheme.
inline std::pair<sdft::TextCollection, sdft::DatasetSplit> uniform_world(std::size_t groups,
                                                                         std::size_t train,
                                                                         std::size_t heldout = 0) {
    sdft::TextCollection c;
    sdft::DatasetSplit s;
    for (std::size_t g = 0; g < groups; ++g) {
        sdft::GroupSplit gs;
        gs.group_id = static_cast<std::int64_t>(g);
        const std::string pre = "g" + std::to_string(g);
        for (std::size_t i = 0; i < train + heldout; ++i) {
            const std::string id = pre + "_q" + std::to_string(i);
            c.add({id, "question " + std::to_string(i) + " of " + pre, gs.group_id});
            (i < train ? gs.train : gs.heldout).push_back(id);
        }
        gs.passage_id = pre + "_passage";
        c.add({gs.passage_id, "passage of " + pre, gs.group_id});
        s.groups.push_back(gs);
    }
    return {std::move(c), std::move(s)};
}

}  // namespace fixture
