// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/experts.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "sdft/error.hpp"

namespace sdft::experts {

namespace {

void require_scores(std::span<const double> scores, const char* what) {
    if (scores.empty()) {
        fail(ErrorCode::kSoftLabel, std::string(what) + " requires at least one expert score");
    }
}

void require_label(int hard_label) {
    if (hard_label != 0 && hard_label != 1) {
        fail(ErrorCode::kInvalidArgument, "hard label must be 0 or 1");
    }
}

}  // namespace

ExpertPanel::ExpertPanel(std::vector<EmbeddingMatrix> experts) : experts_(std::move(experts)) {
    if (experts_.empty()) {
        fail(ErrorCode::kInvalidArgument, "expert panel needs K >= 1 experts");
    }
}

std::vector<LabeledPair> score_pairs(const ExpertPanel& panel, std::span<const PairRecord> pairs) {
    std::vector<LabeledPair> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs) {
        LabeledPair lp;
        lp.pair = pair;
        lp.scores.reserve(panel.size());
        for (std::size_t k = 0; k < panel.size(); ++k) {
            const auto& expert = panel[k];
            const auto q = expert.find(pair.query_id);
            const auto p = expert.find(pair.passage_id);
            if (!q || !p) {
                fail(ErrorCode::kMissingEmbedding,
                     "missing embedding for text_id '" + (q ? pair.passage_id : pair.query_id) +
                         "' in expert " + std::to_string(k) + " ('" + expert.model_id() + "')");
            }
            lp.scores.push_back(cosine(*q, *p));
        }
        out.push_back(std::move(lp));
    }
    return out;
}

double soft1(std::span<const double> scores, int hard_label) {
    require_scores(scores, "soft1");
    require_label(hard_label);
    return hard_label == 1 ? *std::max_element(scores.begin(), scores.end())
                           : *std::min_element(scores.begin(), scores.end());
}

double soft2(std::span<const double> scores) {
    require_scores(scores, "soft2");
    // Summed in sorted order: bitwise invariant under expert permutation.
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (const double s : sorted) {
        sum += s;
    }
    return sum / static_cast<double>(sorted.size());
}

double soft3(std::span<const double> scores, int hard_label) {
    require_label(hard_label);
    if (scores.size() < 2) {
        fail(ErrorCode::kSoftLabel, "soft3 requires K >= 2");
    }
    // Two extremes in one pass; summed in ascending order so the result does
    // not depend on expert order.
    double lo1 = std::numeric_limits<double>::infinity();
    double lo2 = lo1;
    double hi1 = -lo1;
    double hi2 = -lo1;
    for (const double s : scores) {
        if (s < lo1) {
            lo2 = lo1;
            lo1 = s;
        } else if (s < lo2) {
            lo2 = s;
        }
        if (s > hi1) {
            hi2 = hi1;
            hi1 = s;
        } else if (s > hi2) {
            hi2 = s;
        }
    }
    return hard_label == 1 ? (hi2 + hi1) / 2.0 : (lo1 + lo2) / 2.0;
}

void assign_soft_labels(std::vector<LabeledPair>& labeled) {
    for (auto& lp : labeled) {
        lp.soft1 = soft1(lp.scores, lp.pair.hard_label);
        lp.soft2 = soft2(lp.scores);
        if (lp.scores.size() >= 2) {
            lp.soft3 = soft3(lp.scores, lp.pair.hard_label);
        } else {
            lp.soft3.reset();
        }
    }
}

std::vector<double> active_set_fractions(std::span<const LabeledPair> labeled) {
    if (labeled.empty()) {
        fail(ErrorCode::kEmptyInput, "active_set_fractions of an empty dataset");
    }
    const std::size_t k_count = labeled.front().scores.size();
    std::vector<std::size_t> hits(k_count, 0);
    for (const auto& lp : labeled) {
        if (lp.scores.size() != k_count) {
            fail(ErrorCode::kInvalidArgument, "records have different expert counts");
        }
        const double target = lp.soft1 ? *lp.soft1 : soft1(lp.scores, lp.pair.hard_label);
        for (std::size_t k = 0; k < k_count; ++k) {
            if (lp.scores[k] == target) {
                ++hits[k];
            }
        }
    }
    std::vector<double> fractions(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        fractions[k] = static_cast<double>(hits[k]) / static_cast<double>(labeled.size());
    }
    return fractions;
}

}  // namespace sdft::experts
