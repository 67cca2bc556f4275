// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/pairgen.hpp"

#include <map>
#include <string>
#include <vector>

#include "sdft/error.hpp"
#include "sdft/random.hpp"

namespace sdft::pairgen {

std::string concat_id(std::string_view left, std::string_view right) {
    std::string id;
    id.reserve(left.size() + right.size() + 1);
    id.append(left).append("+").append(right);
    return id;
}

std::string concat_text(std::string_view left, std::string_view right) {
    std::string text;
    text.reserve(left.size() + right.size() + kConcatSeparator.size());
    text.append(left).append(kConcatSeparator).append(right);
    return text;
}

PairStats count_origins(const std::vector<PairRecord>& records) {
    PairStats stats;
    for (const auto& r : records) {
        switch (r.origin) {
            case PairOrigin::kDirect:
                ++stats.direct;
                break;
            case PairOrigin::kConcatLeft:
                ++stats.concat_left;
                break;
            case PairOrigin::kConcatRight:
                ++stats.concat_right;
                break;
            case PairOrigin::kNegative:
                ++stats.negative;
                break;
        }
    }
    return stats;
}

void add_concatenations(TextCollection& collection, const DatasetSplit& split) {
    for (const auto& g : split.groups) {
        // Copies: adding items may reallocate the collection's storage.
        std::vector<std::string> texts;
        texts.reserve(g.train.size());
        for (const auto& a : g.train) {
            texts.push_back(collection.at(a).text);
        }
        for (std::size_t i = 0; i < g.train.size(); ++i) {
            const auto& a = g.train[i];
            for (std::size_t j = 0; j < g.train.size(); ++j) {
                const auto& b = g.train[j];
                auto id = concat_id(a, b);
                auto text = concat_text(texts[i], texts[j]);
                if (const auto* existing = collection.find(id)) {
                    if (existing->text != text || existing->group_id != g.group_id) {
                        fail(ErrorCode::kInvalidArgument,
                             "text_id '" + id + "' already exists with different content");
                    }
                    continue;
                }
                collection.add({std::move(id), std::move(text), g.group_id});
            }
        }
    }
}

std::vector<PairRecord> build_positive_pairs(TextCollection& collection,
                                             const DatasetSplit& split) {
    split.validate(collection);
    std::size_t total = 0;
    for (const auto& g : split.groups) {
        if (g.train.empty()) {
            fail(ErrorCode::kEmptyGroup, "empty group: group " + std::to_string(g.group_id) +
                                             " has no train questions");
        }
        total += 3 * g.train.size() * g.train.size();
    }
    add_concatenations(collection, split);

    std::vector<PairRecord> records;
    records.reserve(total);
    for (const auto& g : split.groups) {
        for (const auto& a : g.train) {
            for (const auto& b : g.train) {
                const auto ab = concat_id(a, b);
                records.push_back({a, b, 1, PairOrigin::kDirect});
                records.push_back({ab, a, 1, PairOrigin::kConcatLeft});
                records.push_back({ab, b, 1, PairOrigin::kConcatRight});
            }
        }
    }
    return records;
}

std::vector<PairRecord> build_negative_pairs(const TextCollection& collection,
                                             const DatasetSplit& split,
                                             const std::vector<PairRecord>& positives,
                                             std::uint64_t seed) {
    if (split.groups.size() < 2) {
        fail(ErrorCode::kCannotSampleNegatives,
             "cannot sample negatives: need at least 2 groups, split has " +
                 std::to_string(split.groups.size()));
    }

    // Pooled train questions; each group owns the range [begin, begin + size).
    std::vector<const std::string*> pool;
    struct Range {
        std::size_t begin = 0;
        std::size_t size = 0;
    };
    // Built in group-id order so sampling does not depend on split order.
    std::map<std::int64_t, const std::vector<std::string>*> by_id;
    for (const auto& g : split.groups) by_id[g.group_id] = &g.train;
    std::map<std::int64_t, Range> ranges;
    for (const auto& [gid, train] : by_id) {
        ranges[gid] = {pool.size(), train->size()};
        for (const auto& id : *train) {
            pool.push_back(&id);
        }
    }

    std::map<std::int64_t, Rng> streams;
    std::vector<PairRecord> negatives;
    negatives.reserve(positives.size());
    for (const auto& pos : positives) {
        const auto group = collection.at(pos.query_id).group_id;
        auto it = streams.find(group);
        if (it == streams.end()) {
            it = streams
                     .emplace(group,
                              Rng(derive_seed(seed, "pairgen.negatives",
                                              static_cast<std::uint64_t>(group))))
                     .first;
        }
        Range own;
        if (const auto r = ranges.find(group); r != ranges.end()) {
            own = r->second;
        }
        const std::size_t foreign = pool.size() - own.size;
        if (foreign == 0) {
            fail(ErrorCode::kCannotSampleNegatives,
                 "cannot sample negatives: no train questions outside group " +
                     std::to_string(group));
        }
        auto idx = static_cast<std::size_t>(it->second.uniform_index(foreign));
        if (idx >= own.begin) {
            idx += own.size;
        }
        negatives.push_back({pos.query_id, *pool[idx], 0, PairOrigin::kNegative});
    }
    return negatives;
}

PairDataset build_pair_dataset(TextCollection& collection, const DatasetSplit& split,
                               std::uint64_t seed) {
    PairDataset dataset;
    dataset.seed = seed;
    dataset.records = build_positive_pairs(collection, split);
    auto negatives = build_negative_pairs(collection, split, dataset.records, seed);
    dataset.records.insert(dataset.records.end(), std::make_move_iterator(negatives.begin()),
                           std::make_move_iterator(negatives.end()));
    dataset.stats = count_origins(dataset.records);
    return dataset;
}

}  // namespace sdft::pairgen
