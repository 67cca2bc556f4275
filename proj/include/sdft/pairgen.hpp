// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sdft/corpus.hpp"

namespace sdft::pairgen {

inline constexpr std::string_view kConcatSeparator = ". ";

/// Synthetic id for the concatenation of two questions: `<idA>+<idB>`.
std::string concat_id(std::string_view left, std::string_view right);
std::string concat_text(std::string_view left, std::string_view right);

struct PairStats {
    std::size_t direct = 0;
    std::size_t concat_left = 0;
    std::size_t concat_right = 0;
    std::size_t negative = 0;

    std::size_t positives() const { return direct + concat_left + concat_right; }
    std::size_t total() const { return positives() + negative; }
};

struct PairDataset {
    std::vector<PairRecord> records;
    std::uint64_t seed = 0;
    PairStats stats;
};

PairStats count_origins(const std::vector<PairRecord>& records);

/// Adds every `<a>+<b>` concatenation of the split's train questions to the
/// collection (group of a and b). Idempotent for identical texts.
void add_concatenations(TextCollection& collection, const DatasetSplit& split);

/// All T x T ordered train pairs per group (diagonal included), each followed
/// by its (a+b, a) and (a+b, b) records. Appends the concatenated texts.
/// Throws kEmptyGroup for a group without train questions.
std::vector<PairRecord> build_positive_pairs(TextCollection& collection,
                                             const DatasetSplit& split);

/// One cross-group negative per positive, keeping the positive's query.
/// The passage is drawn uniformly from the train questions of all other
/// groups, with a per-group stream derived from (seed, group_id).
/// Throws kCannotSampleNegatives with fewer than two groups.
std::vector<PairRecord> build_negative_pairs(const TextCollection& collection,
                                             const DatasetSplit& split,
                                             const std::vector<PairRecord>& positives,
                                             std::uint64_t seed);

/// Positives followed by negatives.
PairDataset build_pair_dataset(TextCollection& collection, const DatasetSplit& split,
                               std::uint64_t seed);

}  // namespace sdft::pairgen
