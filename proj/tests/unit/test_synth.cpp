// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "sdft/error.hpp"
#include "sdft/pairgen.hpp"
#include "sdft/synth.hpp"

using namespace sdft;
using namespace sdft::synth;

TEST_CASE("world shape and naming", "[synth]") {
    SyntheticWorld w;
    w.groups = 3;
    w.train = 2;
    w.heldout = 1;
    w.dim = 8;
    w.experts = 2;
    const auto d = generate(w);
    CHECK(d.collection.size() == 3 * (2 + 1 + 1));
    CHECK(d.split.groups.size() == 3);
    CHECK(d.split.groups[1].train == std::vector<std::string>{"g1_q0", "g1_q1"});
    CHECK(d.split.groups[1].heldout == std::vector<std::string>{"g1_q2"});
    CHECK(d.split.groups[1].passage_id == "g1_passage");
    REQUIRE(d.experts.size() == 2);
    // Collection plus every train concatenation.
    const std::size_t rows = d.collection.size() + 3 * 2 * 2;
    CHECK(d.truth.rows() == rows);
    CHECK(d.base.rows() == rows);
    CHECK(d.experts[0].rows() == rows);
    CHECK(d.experts[1].model_id() == "expert_1");
    CHECK_NOTHROW(d.split.validate(d.collection));
    for (std::size_t r = 0; r < rows; ++r) {
        CHECK(std::abs(cosine(d.base.row_at(r), d.base.row_at(r)) - 1.0) < 1e-12);
    }
}

TEST_CASE("noise-free experts preserve ground-truth cosines", "[synth]") {
    SyntheticWorld w;
    w.groups = 4;
    w.train = 3;
    w.heldout = 2;
    w.dim = 12;
    w.experts = 3;
    w.expert_noise = 0.0;
    const auto d = generate(w);
    const auto& ids = d.truth.ids();
    for (const auto& e : d.experts) {
        for (std::size_t i = 0; i < ids.size(); i += 3) {
            for (std::size_t j = 0; j < ids.size(); j += 5) {
                const double t = cosine(d.truth.row(ids[i]), d.truth.row(ids[j]));
                REQUIRE(std::abs(cosine(e.row(ids[i]), e.row(ids[j])) - t) < 1e-6);
            }
        }
    }
}

TEST_CASE("groups are separated in the ground truth", "[synth]") {
    const auto d = generate(SyntheticWorld{});
    double intra = 0.0, inter = 0.0;
    std::size_t ni = 0, nx = 0;
    for (const auto& g : d.split.groups) {
        for (const auto& h : d.split.groups) {
            const double c = cosine(d.truth.row(g.train[0]), d.truth.row(h.passage_id));
            if (g.group_id == h.group_id) {
                intra += c;
                ++ni;
            } else {
                inter += c;
                ++nx;
            }
        }
    }
    CHECK(intra / ni > inter / nx + 0.3);
}

TEST_CASE("same seed gives byte-identical files", "[synth]") {
    fixture::TempDir a("synth_a"), b("synth_b"), c("synth_c");
    SyntheticWorld w;
    w.seed = 17;
    save(generate(w), a.path());
    save(generate(w), b.path());
    w.seed = 18;
    save(generate(w), c.path());
    for (const char* f : {"collection.jsonl", "split.json", "truth.bin", "base.bin", "expert_0.bin",
                          "expert_3.bin"}) {
        INFO(f);
        CHECK(fixture::read_bytes(a / f) == fixture::read_bytes(b / f));
    }
    CHECK(fixture::read_bytes(a / "base.bin") != fixture::read_bytes(c / "base.bin"));
}

TEST_CASE("world validation", "[synth][errors]") {
    SyntheticWorld w;
    w.dim = 4;
    w.groups = 5;
    try {
        (void)generate(w);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kDimension);
    }
    w = SyntheticWorld{};
    w.groups = 1;
    CHECK_THROWS_AS(generate(w), Error);
    w = SyntheticWorld{};
    w.experts = 0;
    CHECK_THROWS_AS(generate(w), Error);
    w = SyntheticWorld{};
    w.train = 0;
    CHECK_THROWS_AS(generate(w), Error);
}

TEST_CASE("G=26, T=40 world produces 249,600 pair records", "[synth][pairgen][count]") {
    SyntheticWorld w;
    w.groups = 26;
    w.train = 40;
    w.heldout = 0;
    w.dim = 32;
    w.experts = 1;
    auto d = generate(w);
    const auto ds = pairgen::build_pair_dataset(d.collection, d.split, 1);
    CHECK(ds.records.size() == 249600);
    // Every record's texts have embeddings in every matrix.
    for (std::size_t i = 0; i < ds.records.size(); i += 997) {
        CHECK(d.base.find(ds.records[i].query_id).has_value());
        CHECK(d.experts[0].find(ds.records[i].passage_id).has_value());
    }
}
