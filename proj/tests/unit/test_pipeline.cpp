// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <fstream>

#include "fixtures.hpp"
#include "sdft/error.hpp"
#include "sdft/pipeline.hpp"

using namespace sdft;
using namespace sdft::pipeline;
namespace fs = std::filesystem;

namespace {

PipelineConfig smoke_config(const fs::path& out, std::uint64_t seed) {
    PipelineConfig c;
    c.world.groups = 4;
    c.world.train = 6;
    c.world.heldout = 3;
    c.world.experts = 3;
    c.world.dim = 16;
    c.dist_pairs = 2000;
    c.seed = seed;
    c.out_dir = out;
    return c;
}

}  // namespace

TEST_CASE("synthetic smoke run writes every artifact", "[pipeline]") {
    fixture::TempDir dir("pipe");
    const auto r = run_pipeline(smoke_config(dir.path(), 3));
    CHECK(r.pair_stats.total() == 6 * 4 * 36);
    CHECK(r.active_sets.size() == 3);
    REQUIRE(r.models.size() == 5);
    CHECK(r.models[0].name == "base");
    CHECK_FALSE(r.models[0].report.has_value());
    for (const char* f : {"pairs.jsonl", "collection_aug.jsonl", "labeled.jsonl", "metrics.csv",
                          "kl.csv", "active_sets.csv", "heldout_qrels.trec"}) {
        INFO(f);
        CHECK(fs::exists(dir / f));
    }
    for (const char* t : {"hard", "soft1", "soft2", "soft3"}) {
        INFO(t);
        CHECK(fs::exists(dir / ("adapter_" + std::string(t) + ".bin")));
        CHECK(fs::exists(dir / ("adapter_" + std::string(t) + ".bin.json")));
        CHECK(fs::exists(dir / ("pr_curve_" + std::string(t) + ".csv")));
        const auto* m = r.find(t);
        REQUIRE(m != nullptr);
        REQUIRE(m->report.has_value());
        CHECK(m->report->final_loss < m->report->initial_loss);
    }
    CHECK(r.kl.size() == 10);
    for (const auto& entry : fs::directory_iterator(dir.path())) {
        CHECK(entry.path().extension() != ".partial");
    }

    std::ifstream in(dir / "metrics.csv");
    const auto rows = eval::read_metrics_csv(in);
    std::size_t heldout_auprc = 0;
    for (const auto& row : rows) heldout_auprc += row.metric == "auprc" && row.dataset == "heldout";
    CHECK(heldout_auprc == 5);
}

TEST_CASE("rerunning with the same config reproduces the reports", "[pipeline]") {
    fixture::TempDir a("pipe_a"), b("pipe_b");
    (void)run_pipeline(smoke_config(a.path(), 11));
    (void)run_pipeline(smoke_config(b.path(), 11));
    for (const auto& entry : fs::directory_iterator(a.path())) {
        const auto name = entry.path().filename().string();
        INFO(name);
        CHECK(fixture::read_bytes(entry.path()) == fixture::read_bytes(b / name));
    }
}

TEST_CASE("pipeline from user-supplied files", "[pipeline]") {
    fixture::TempDir inputs("pipe_in"), out("pipe_out");
    synth::SyntheticWorld w;
    w.groups = 3;
    w.train = 3;
    w.heldout = 2;
    w.dim = 8;
    w.experts = 2;
    synth_stage(w, inputs.path());
    PipelineConfig c;
    c.collection = inputs / "collection.jsonl";
    c.split = inputs / "split.json";
    c.base = inputs / "base.bin";
    c.experts = {inputs / "expert_0.bin", inputs / "expert_1.bin"};
    c.targets = {adapter::TargetKind::kSoft1};
    c.dist_pairs = 500;
    c.out_dir = out.path();
    const auto r = run_pipeline(c);
    CHECK(r.models.size() == 2);
    CHECK(fs::exists(out / "adapter_soft1.bin"));
}

TEST_CASE("stage failures name the stage and keep the error code", "[pipeline][errors]") {
    fixture::TempDir out("pipe_err");
    SECTION("missing input file") {
        PipelineConfig c;
        c.collection = out / "nope.jsonl";
        c.split = out / "split.json";
        c.base = out / "base.bin";
        c.experts = {out / "e.bin"};
        c.out_dir = out.path();
        try {
            (void)run_pipeline(c);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kIo);
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("nope.jsonl"));
        }
    }
    SECTION("invalid world") {
        auto c = smoke_config(out.path(), 0);
        c.world.dim = 2;
        try {
            (void)run_pipeline(c);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kDimension);
            CHECK_THAT(e.what(), Catch::Matchers::StartsWith("stage 'synth'"));
        }
    }
    SECTION("soft3 with a single expert") {
        auto c = smoke_config(out.path(), 0);
        c.world.experts = 1;
        try {
            (void)run_pipeline(c);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kSoftLabel);
            CHECK_THAT(e.what(), Catch::Matchers::StartsWith("stage 'train'"));
        }
    }
}

TEST_CASE("file-level stages compose", "[pipeline]") {
    fixture::TempDir dir("stages");
    synth::SyntheticWorld w;
    w.groups = 3;
    w.train = 2;
    w.heldout = 2;
    w.dim = 6;
    w.experts = 2;
    synth_stage(w, dir.path());
    const auto stats = pairgen_stage(dir / "collection.jsonl", dir / "split.json", 4,
                                     dir / "pairs.jsonl", dir / "aug.jsonl");
    CHECK(stats.total() == 6 * 3 * 4);
    CHECK(load_collection(dir / "aug.jsonl").size() == 3 * (2 + 2 + 1) + 3 * 4);
    const auto fr = label_stage(dir / "pairs.jsonl", {dir / "expert_0.bin", dir / "expert_1.bin"},
                                dir / "labeled.jsonl", dir / "active.csv");
    CHECK(fr.size() == 2);
    const auto labeled = load_records(dir / "labeled.jsonl");
    REQUIRE(labeled.size() == stats.total());
    CHECK(labeled[0].soft3.has_value());
    adapter::TrainConfig cfg;
    cfg.target_kind = adapter::TargetKind::kSoft2;
    const auto report = train_stage(dir / "base.bin", dir / "labeled.jsonl", cfg, dir / "a.bin");
    CHECK(report.steps == 2 * 2);
    const auto emb = load_model_embeddings(dir / "base.bin", dir / "a.bin", "soft2");
    const auto r = evaluate_heldout(emb, load_split(dir / "split.json"), 10);
    CHECK(r.samples == 3 * 2 * 3);
    CHECK(r.intra == 6);
    CHECK(r.map == r.mrr);
}

TEST_CASE("aggregate CSV lists means and win rates", "[pipeline][aggregate]") {
    const std::vector<eval::MetricRow> rows{{"ndcg@10", "a", "d1", 0.5}, {"ndcg@10", "b", "d1", 0.4},
                                            {"ndcg@10", "a", "d2", 0.3}, {"ndcg@10", "b", "d2", 0.3},
                                            {"map@10", "a", "d1", 0.9}};
    std::ostringstream out;
    write_aggregate_csv(rows, "ndcg@10", out);
    const auto text = out.str();
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("mean,a,,0.4\n"));
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("win_rate,a,b,0.75\n"));
    CHECK_THAT(text, Catch::Matchers::ContainsSubstring("win_rate,b,a,0.25\n"));
    std::ostringstream none;
    CHECK_THROWS_AS(write_aggregate_csv(rows, "mrr@10", none), Error);
}

TEST_CASE("distribution KL is zero between identical models", "[pipeline][kl]") {
    const auto m = fixture::random_matrix(1, 30, 5);
    const auto rows = distribution_kl(m.ids(), {{"x", m}, {"y", m}}, 1000, 3, 50, -1.0, 1.0);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].value == 0.0);
}
