// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sdft/error.hpp"
#include "sdft/pairgen.hpp"

using namespace sdft;
using namespace sdft::pairgen;

namespace {

std::int64_t group_of(const TextCollection& c, const std::string& id) { return c.at(id).group_id; }

std::string serialize(const std::vector<PairRecord>& records) {
    std::vector<LabeledPair> lp;
    for (const auto& r : records) lp.push_back({r, {}, {}, {}, {}});
    std::ostringstream out;
    write_records(lp, out);
    return out.str();
}

}  // namespace

TEST_CASE("one group with T=2 gives 12 positives", "[pairgen]") {
    auto [c, s] = fixture::uniform_world(1, 2);
    const auto pos = build_positive_pairs(c, s);
    const auto stats = count_origins(pos);
    CHECK(pos.size() == 12);
    CHECK(stats.direct == 4);
    CHECK(stats.concat_left + stats.concat_right == 8);
}

TEST_CASE("one group with T=1 gives the self pair plus two concatenations", "[pairgen]") {
    auto [c, s] = fixture::uniform_world(1, 1);
    const auto pos = build_positive_pairs(c, s);
    REQUIRE(pos.size() == 3);
    CHECK(pos[0] == PairRecord{"g0_q0", "g0_q0", 1, PairOrigin::kDirect});
    CHECK(pos[1] == PairRecord{"g0_q0+g0_q0", "g0_q0", 1, PairOrigin::kConcatLeft});
    CHECK(pos[2] == PairRecord{"g0_q0+g0_q0", "g0_q0", 1, PairOrigin::kConcatRight});
}

TEST_CASE("concatenated texts are added to the collection", "[pairgen]") {
    auto [c, s] = fixture::uniform_world(2, 2);
    const auto before = c.size();
    (void)build_positive_pairs(c, s);
    CHECK(c.size() == before + 2 * 4);
    const auto& item = c.at("g1_q0+g1_q1");
    CHECK(item.group_id == 1);
    CHECK(item.text == c.at("g1_q0").text + ". " + c.at("g1_q1").text);
    // Adding the same concatenations again is a no-op.
    add_concatenations(c, s);
    CHECK(c.size() == before + 8);
}

TEST_CASE("G=26, T=40 yields 124,800 positives and 249,600 records", "[pairgen][count]") {
    auto [c, s] = fixture::uniform_world(26, 40);
    const auto ds = build_pair_dataset(c, s, 1234);
    CHECK(ds.stats.positives() == 124800);
    CHECK(ds.stats.negative == 124800);
    CHECK(ds.records.size() == 249600);
    CHECK(ds.records.size() == oracle::pair_count(std::vector<std::size_t>(26, 40)));
}

TEST_CASE("count law, balance and closure on uneven groups", "[pairgen][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t groups = 2 + rng.uniform_index(5);
        TextCollection c;
        DatasetSplit s;
        std::vector<std::size_t> sizes;
        for (std::size_t g = 0; g < groups; ++g) {
            GroupSplit gs;
            gs.group_id = static_cast<std::int64_t>(10 * g + 3);
            const std::size_t t = 1 + rng.uniform_index(6);
            sizes.push_back(t);
            for (std::size_t i = 0; i < t; ++i) {
                const std::string id = "x" + std::to_string(g) + "_" + std::to_string(i);
                c.add({id, "text " + id, gs.group_id});
                gs.train.push_back(id);
            }
            s.groups.push_back(gs);
        }
        const auto ds = build_pair_dataset(c, s, seed);
        REQUIRE(ds.records.size() == oracle::pair_count(sizes));
        REQUIRE(ds.stats.positives() == ds.stats.negative);
        std::size_t negatives_seen = 0;
        for (std::size_t i = 0; i < ds.records.size(); ++i) {
            const auto& r = ds.records[i];
            const auto gq = group_of(c, r.query_id);
            const auto gp = group_of(c, r.passage_id);
            if (r.hard_label == 1) {
                REQUIRE(gq == gp);
            } else {
                REQUIRE(gq != gp);
                // The negative keeps the query of the positive it pairs with.
                REQUIRE(r.query_id == ds.records[negatives_seen].query_id);
                ++negatives_seen;
            }
        }
        CHECK(negatives_seen == ds.stats.negative);
    }
}

TEST_CASE("negatives come from other groups' train questions", "[pairgen]") {
    auto [c, s] = fixture::uniform_world(3, 3, 2);
    std::set<std::string> train_ids;
    for (const auto& g : s.groups) train_ids.insert(g.train.begin(), g.train.end());
    const auto ds = build_pair_dataset(c, s, 9);
    for (const auto& r : ds.records) {
        if (r.hard_label == 0) CHECK(train_ids.count(r.passage_id) == 1);
    }
}

TEST_CASE("12 positives give exactly 12 cross-group negatives", "[pairgen]") {
    auto [c, s] = fixture::uniform_world(2, 2);
    auto one_group = s;
    one_group.groups.resize(1);
    const auto pos = build_positive_pairs(c, one_group);
    REQUIRE(pos.size() == 12);
    const auto neg = build_negative_pairs(c, s, pos, 5);
    REQUIRE(neg.size() == 12);
    for (const auto& r : neg) {
        CHECK(r.hard_label == 0);
        CHECK(r.origin == PairOrigin::kNegative);
        CHECK(group_of(c, r.passage_id) == 1);
    }
}

TEST_CASE("same seed gives byte-identical output, different seed differs", "[pairgen]") {
    auto [c1, s] = fixture::uniform_world(4, 5);
    auto c2 = c1;
    auto c3 = c1;
    const auto a = serialize(build_pair_dataset(c1, s, 77).records);
    const auto b = serialize(build_pair_dataset(c2, s, 77).records);
    const auto d = serialize(build_pair_dataset(c3, s, 78).records);
    CHECK(a == b);
    CHECK(a != d);
}

TEST_CASE("group streams are independent of group order", "[pairgen]") {
    auto [c, s] = fixture::uniform_world(3, 2);
    auto reversed = s;
    std::reverse(reversed.groups.begin(), reversed.groups.end());
    auto c2 = c;
    const auto a = build_pair_dataset(c, s, 3);
    const auto b = build_pair_dataset(c2, reversed, 3);
    std::multiset<std::pair<std::string, std::string>> na, nb;
    for (const auto& r : a.records) if (!r.hard_label) na.emplace(r.query_id, r.passage_id);
    for (const auto& r : b.records) if (!r.hard_label) nb.emplace(r.query_id, r.passage_id);
    CHECK(na == nb);
}

TEST_CASE("pairgen errors", "[pairgen][errors]") {
    SECTION("empty group") {
        auto [c, s] = fixture::uniform_world(2, 2);
        s.groups[1].train.clear();
        try {
            (void)build_pair_dataset(c, s, 0);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kEmptyGroup);
        }
    }
    SECTION("single group cannot sample negatives") {
        auto [c, s] = fixture::uniform_world(1, 3);
        try {
            (void)build_pair_dataset(c, s, 0);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kCannotSampleNegatives);
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("cannot sample negatives"));
        }
    }
    SECTION("split references an unknown id") {
        auto [c, s] = fixture::uniform_world(2, 2);
        s.groups[0].train.push_back("ghost");
        CHECK_THROWS_AS(build_pair_dataset(c, s, 0), Error);
    }
}
