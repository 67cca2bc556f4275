// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status = -1;
    std::string output;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(SDFT_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 512> buf{};
    while (fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) r.output += buf.data();
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("sdft_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

const char* kSmallWorld = "--groups 4 --train 6 --heldout 3 --num-experts 3 --dim 16";

}  // namespace

TEST_CASE("missing file exits 2 and names the path", "[cli]") {
    const auto dir = scratch("missing");
    const auto r = run("pairgen --collection /no/such/collection.jsonl --split /no/split.json --out " +
                       (dir / "p.jsonl").string());
    CHECK(r.status == 2);
    CHECK(r.output.find("/no/such/collection.jsonl") != std::string::npos);

    const auto p = run("pipeline --collection /no/c.jsonl --split /no/s.json --base /no/b.bin "
                       "--experts /no/e.bin --out " + dir.string());
    CHECK(p.status == 2);
    CHECK(p.output.find("/no/c.jsonl") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("usage errors exit 2", "[cli]") {
    CHECK(run("").status == 2);
    CHECK(run("frobnicate").status == 2);
    CHECK(run("train --base x.bin").status == 2);
    CHECK(run("--help").status == 0);
}

TEST_CASE("computation errors exit 1", "[cli]") {
    const auto dir = scratch("compute");
    const auto r = run("synth --groups 8 --dim 4 --out " + dir.string());
    CHECK(r.status == 1);
    CHECK(r.output.find("dim") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("stage subcommands chain", "[cli]") {
    const auto dir = scratch("chain");
    const auto d = dir.string();
    REQUIRE(run("synth --groups 3 --train 3 --heldout 2 --num-experts 2 --dim 8 --seed 5 --out " + d).status == 0);
    const auto pg = run("pairgen --collection " + d + "/collection.jsonl --split " + d +
                        "/split.json --seed 1 --out " + d + "/pairs.jsonl");
    REQUIRE(pg.status == 0);
    CHECK(pg.output.find("pairs 162") != std::string::npos);
    CHECK(fs::exists(dir / "collection_aug.jsonl"));
    REQUIRE(run("label --pairs " + d + "/pairs.jsonl --experts " + d + "/expert_0.bin," + d +
                "/expert_1.bin --out " + d + "/labeled.jsonl")
                .status == 0);

    // Values from a key=value config file; flags on the command line win.
    {
        std::ofstream cfg(dir / "train.conf");
        cfg << "lr=0.001\nepochs=3\ntarget=soft2\n";
    }
    const auto tr = run("train --config " + d + "/train.conf --epochs 1 --base " + d +
                        "/base.bin --pairs " + d + "/labeled.jsonl --out " + d + "/adapter_soft2.bin");
    REQUIRE(tr.status == 0);
    const auto sidecar = slurp(dir / "adapter_soft2.bin.json");
    CHECK(sidecar.find("\"target\": \"soft2\"") != std::string::npos);
    CHECK(sidecar.find("\"epochs\": 1") != std::string::npos);
    CHECK(sidecar.find("\"learning_rate\": 0.001") != std::string::npos);

    REQUIRE(run("eval-heldout --base " + d + "/base.bin --adapter " + d + "/adapter_soft2.bin --split " +
                d + "/split.json --model soft2 --out " + d)
                .status == 0);
    CHECK(fs::exists(dir / "pr_curve_soft2.csv"));
    REQUIRE(run("eval-retrieval --qrels " + d + "/heldout_qrels.trec --run soft2=" + d +
                "/heldout_run_soft2.trec --dataset heldout --out " + d + "/ret")
                .status == 0);
    CHECK(slurp(dir / "ret" / "metrics.csv").find("ndcg@10,soft2,heldout,") != std::string::npos);
    REQUIRE(run("eval-retrieval --aggregate " + d + "/ret/metrics.csv --metric mrr@10 --out " + d + "/ret")
                .status == 0);
    CHECK(fs::exists(dir / "ret" / "aggregate.csv"));
    REQUIRE(run("eval-dist --collection " + d + "/collection.jsonl --base " + d +
                "/base.bin --model base --model soft2=" + d + "/adapter_soft2.bin --pairs 500 --out " + d)
                .status == 0);
    CHECK(slurp(dir / "kl.csv").find("base,soft2,100,") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("pipeline reruns produce identical CSV reports", "[cli]") {
    const auto a = scratch("pipe_a");
    const auto b = scratch("pipe_b");
    const std::string flags = std::string(kSmallWorld) + " --dist-pairs 2000 --seed 21 --out ";
    const auto ra = run("pipeline " + flags + a.string());
    REQUIRE(ra.status == 0);
    REQUIRE(run("pipeline " + flags + b.string()).status == 0);
    CHECK(ra.output.find("soft1=") != std::string::npos);
    std::size_t csvs = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().extension() != ".csv") continue;
        ++csvs;
        INFO(e.path().filename());
        CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
    }
    CHECK(csvs >= 8);
    fs::remove_all(a);
    fs::remove_all(b);
}
