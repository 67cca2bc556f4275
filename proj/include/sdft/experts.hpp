// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "sdft/corpus.hpp"

namespace sdft::experts {

/// Ordered list of expert models. Dims may differ between experts; position
/// in the panel is the expert's identity in scores and active-set reports.
class ExpertPanel {
public:
    explicit ExpertPanel(std::vector<EmbeddingMatrix> experts);

    std::size_t size() const noexcept { return experts_.size(); }
    const EmbeddingMatrix& operator[](std::size_t k) const { return experts_.at(k); }
    const std::vector<EmbeddingMatrix>& experts() const noexcept { return experts_; }

private:
    std::vector<EmbeddingMatrix> experts_;
};

/// scores[k] = cosine(E_k(q), E_k(p)) for every pair, panel order.
/// Throws kMissingEmbedding naming the id and the expert.
std::vector<LabeledPair> score_pairs(const ExpertPanel& panel, std::span<const PairRecord> pairs);

/// max(scores) for a positive, min(scores) for a negative.
double soft1(std::span<const double> scores, int hard_label);
/// Arithmetic mean.
double soft2(std::span<const double> scores);
/// Mean of the two largest (positive) or two smallest (negative) scores.
/// Throws kSoftLabel when fewer than two scores are given.
double soft3(std::span<const double> scores, int hard_label);

/// Fills soft1/soft2 for every record, and soft3 when K >= 2.
void assign_soft_labels(std::vector<LabeledPair>& labeled);

/// fraction[k] = share of records whose k-th score equals soft1.
/// Ties credit every expert reaching the extreme, so fractions can sum past 1.
std::vector<double> active_set_fractions(std::span<const LabeledPair> labeled);

}  // namespace sdft::experts
