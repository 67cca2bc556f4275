// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sdft/corpus.hpp"

namespace sdft::synth {

/// Seeded stand-in for a paraphrased Q&A collection and its embedding models.
///
/// Noise magnitudes are expected vector norms: a term `sigma * z / sqrt(dim)`
/// with z ~ N(0, I) is added before re-normalizing.
struct SyntheticWorld {
    std::size_t groups = 8;    // G >= 2
    std::size_t train = 12;    // T >= 1 per group
    std::size_t heldout = 6;   // H >= 0 per group
    std::size_t dim = 32;      // >= G
    std::size_t experts = 4;   // K >= 1
    double question_jitter = 0.8;
    double passage_jitter = 0.3;
    double expert_noise = 0.15;
    double base_noise = 0.6;
    double base_anisotropy = 1.5;  // weight of a shared direction in the base model
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    TextCollection collection;  // questions and passages, without concatenations
    DatasetSplit split;
    EmbeddingMatrix truth;
    EmbeddingMatrix base;
    std::vector<EmbeddingMatrix> experts;
};

/// Matrices cover the collection plus every train-question concatenation
/// pairgen will create. Throws kDimension when dim < groups.
SyntheticData generate(const SyntheticWorld& world);

/// collection.jsonl, split.json, truth.bin, base.bin, expert_<k>.bin.
void save(const SyntheticData& data, const std::filesystem::path& dir);

}  // namespace sdft::synth
