// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file pipeline.hpp
 *  \brief File-level stages (synth, pairgen, label, train, eval-*) and the
 *         end-to-end pipeline that chains them.
 *
 * Each stage reads and writes the on-disk formats of corpus.hpp/evalkit.hpp;
 * the arithmetic lives in the module each stage wraps.
 */

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdft/adapter.hpp"
#include "sdft/evalkit.hpp"
#include "sdft/pairgen.hpp"
#include "sdft/synth.hpp"

namespace sdft::pipeline {

namespace fs = std::filesystem;

// Fixed output names under the pipeline's --out directory.
inline constexpr const char* kPairsFile = "pairs.jsonl";
inline constexpr const char* kAugmentedCollectionFile = "collection_aug.jsonl";
inline constexpr const char* kLabeledFile = "labeled.jsonl";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kKlFile = "kl.csv";
inline constexpr const char* kActiveSetsFile = "active_sets.csv";
inline constexpr const char* kQrelsFile = "heldout_qrels.trec";

std::string adapter_file(adapter::TargetKind kind);     // adapter_<target>.bin
std::string pr_curve_file(const std::string& model);    // pr_curve_<model>.csv
std::string run_file(const std::string& model);         // heldout_run_<model>.trec

// ---------------------------------------------------------------------------
// Stages

void synth_stage(const synth::SyntheticWorld& world, const fs::path& out_dir);

/// Writes the pair records and the collection extended with concatenations.
pairgen::PairStats pairgen_stage(const fs::path& collection, const fs::path& split,
                                 std::uint64_t seed, const fs::path& out,
                                 const fs::path& collection_out);

/// Scores pairs with every expert, assigns soft labels and writes them.
/// Returns active-set fractions in expert order; also written as CSV when
/// `active_sets_out` is non-empty.
std::vector<double> label_stage(const fs::path& pairs, const std::vector<fs::path>& experts,
                                const fs::path& out, const fs::path& active_sets_out = {});

adapter::TrainReport train_stage(const fs::path& base, const fs::path& labeled,
                                 const adapter::TrainConfig& config, const fs::path& out);

/// Base embeddings, optionally passed through an adapter checkpoint.
EmbeddingMatrix load_model_embeddings(const fs::path& base, const std::optional<fs::path>& adapter,
                                      const std::string& model_name);

struct HeldoutResult {
    eval::PrCurve curve;
    double ndcg = 0.0;
    double map = 0.0;
    double mrr = 0.0;
    double mean_intra = 0.0;
    double mean_inter = 0.0;
    std::size_t samples = 0;
    std::size_t intra = 0;
    eval::RunRanking run;
    eval::QrelSet qrels;
};

HeldoutResult evaluate_heldout(const EmbeddingMatrix& embeddings, const DatasetSplit& split,
                               std::size_t k);
/// Metric rows for a held-out evaluation (dataset "heldout").
std::vector<eval::MetricRow> heldout_rows(const HeldoutResult& r, const std::string& model,
                                          std::size_t k);

/// Retrieval metrics for each (model, run file) against one qrels file.
std::vector<eval::MetricRow> retrieval_rows(const fs::path& qrels,
                                            const std::vector<std::pair<std::string, fs::path>>& runs,
                                            const std::string& dataset, std::size_t k);

/// Summary of `metric` over datasets: mean/std per model and win rates.
/// CSV columns: kind,model,other,value with kind in {mean,std,datasets,win_rate}.
void write_aggregate_csv(const std::vector<eval::MetricRow>& rows, const std::string& metric,
                         std::ostream& out);

struct DistModel {
    std::string name;
    EmbeddingMatrix embeddings;
};

struct KlRow {
    std::string model_a;
    std::string model_b;
    double value = 0.0;
};

/// Cosines of `pair_count` seeded random pairs of distinct texts under each
/// model, binned, and symmetric KL for every unordered model pair.
std::vector<KlRow> distribution_kl(const std::vector<std::string>& text_ids,
                                   const std::vector<DistModel>& models, std::size_t pair_count,
                                   std::uint64_t seed, std::size_t bins, double lo, double hi);
void write_kl_csv(const std::vector<KlRow>& rows, std::size_t bins, double lo, double hi,
                  std::ostream& out);

// ---------------------------------------------------------------------------
// End-to-end

struct PipelineConfig {
    /// Used when `collection` is empty.
    synth::SyntheticWorld world;
    fs::path collection;
    fs::path split;
    fs::path base;
    std::vector<fs::path> experts;

    adapter::TrainConfig train;
    std::vector<adapter::TargetKind> targets = {adapter::TargetKind::kHard,
                                                adapter::TargetKind::kSoft1,
                                                adapter::TargetKind::kSoft2,
                                                adapter::TargetKind::kSoft3};
    std::size_t k = 10;
    std::size_t bins = eval::kDefaultBins;
    std::size_t dist_pairs = 20000;
    std::uint64_t seed = 0;
    fs::path out_dir;
};

struct ModelOutcome {
    std::string name;
    double auprc = 0.0;
    double ndcg = 0.0;
    double map = 0.0;
    double mrr = 0.0;
    std::optional<adapter::TrainReport> report;  // absent for the base model
};

struct PipelineResult {
    pairgen::PairStats pair_stats;
    std::vector<double> active_sets;
    std::vector<ModelOutcome> models;  // "base" first, then one per target
    std::vector<KlRow> kl;

    const ModelOutcome* find(const std::string& name) const;
};

/// Runs synth (or loads inputs) -> pairgen -> label -> train per target ->
/// held-out and distributional evaluation, writing every artifact to out_dir.
/// A failing stage raises an Error whose message starts with the stage name.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace sdft::pipeline
