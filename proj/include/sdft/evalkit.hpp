// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file evalkit.hpp
 *  \brief Retrieval metrics, threshold-swept precision/recall, similarity
 *         distributions and cross-dataset aggregation.
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdft/corpus.hpp"

namespace sdft::eval {

/// Binary relevance judgments: query_id -> relevant passage_ids.
class QrelSet {
public:
    void add(const std::string& query_id, const std::string& passage_id);
    const std::set<std::string>* find(const std::string& query_id) const;
    const std::map<std::string, std::set<std::string>>& queries() const noexcept { return rel_; }

private:
    std::map<std::string, std::set<std::string>> rel_;
};

struct ScoredPassage {
    std::string passage_id;
    double score = 0.0;

    friend bool operator==(const ScoredPassage&, const ScoredPassage&) = default;
};

/// Per-query ranked lists, sorted by score descending then passage_id
/// ascending. Duplicate passages within a query are rejected.
class RunRanking {
public:
    void add(const std::string& query_id, const std::string& passage_id, double score);
    /// Throws kInvalidArgument for an unknown query.
    const std::vector<ScoredPassage>& ranked(const std::string& query_id) const;
    std::vector<std::string> query_ids() const;
    const std::map<std::string, std::vector<ScoredPassage>>& lists() const noexcept {
        return lists_;
    }

private:
    std::map<std::string, std::vector<ScoredPassage>> lists_;
    std::map<std::string, std::set<std::string>> seen_;
};

struct MetricResult {
    std::map<std::string, double> per_query;
    double mean = 0.0;
};

/// Every query in the run must appear in qrels (strict); queries judged but
/// absent from the run are not scored, as in trec_eval.
MetricResult ndcg_at_k(const RunRanking& run, const QrelSet& qrels, std::size_t k);
MetricResult map_at_k(const RunRanking& run, const QrelSet& qrels, std::size_t k);
MetricResult mrr_at_k(const RunRanking& run, const QrelSet& qrels, std::size_t k);

struct LabeledScore {
    double score = 0.0;
    bool positive = false;
};

struct PrPoint {
    double threshold = 0.0;
    double precision = 1.0;
    double recall = 0.0;
};

/// Points are ordered by strictly decreasing threshold. The first point is the
/// (recall 0, precision 1) anchor at threshold +inf; then one point per
/// distinct observed score, predicting positive when score >= threshold.
struct PrCurve {
    std::vector<PrPoint> points;
    double auprc = 0.0;
};

/// Throws kInvalidArgument unless both classes are present.
PrCurve pr_curve(std::span<const LabeledScore> samples);

/// Trapezoid rule over (recall, precision) of the given points.
double trapezoid_area(std::span<const PrPoint> points);

enum class SampleKind { kIntra, kInter };

struct SimilaritySample {
    SampleKind kind = SampleKind::kInter;
    std::int64_t query_group = 0;
    std::int64_t passage_group = 0;
    std::string query_id;
    std::string passage_id;
    double value = 0.0;
};

/// Held-out question and group passage ids, taken from a split.
struct HeldoutLayout {
    std::vector<std::pair<std::string, std::int64_t>> queries;    // (text_id, group)
    std::vector<std::pair<std::string, std::int64_t>> passages;   // (text_id, group)

    static HeldoutLayout from_split(const DatasetSplit& split);
};

/// Cosine of every held-out query against every group passage
/// (|queries| x |passages| samples, intra when the groups match).
std::vector<SimilaritySample> intra_inter(const EmbeddingMatrix& queries,
                                          const EmbeddingMatrix& passages,
                                          const HeldoutLayout& layout);

std::vector<LabeledScore> to_labeled_scores(std::span<const SimilaritySample> samples);

/// Ranking of all passages for each held-out query, with singleton qrels.
std::pair<RunRanking, QrelSet> heldout_ranking(std::span<const SimilaritySample> samples,
                                               const HeldoutLayout& layout);

inline constexpr std::size_t kDefaultBins = 100;
inline constexpr double kDefaultSmoothing = 1e-10;

struct Histogram {
    double lo = -1.0;
    double hi = 1.0;
    std::vector<double> mass;
};

/// Equal-width bins over [lo, hi], values outside clamp into the end bins,
/// masses sum to 1. Throws on an empty input, bins == 0 or lo >= hi.
Histogram similarity_histogram(std::span<const double> values, std::size_t bins, double lo,
                               double hi);

/// Zero-mass bins get `epsilon`, then the histogram is renormalized.
Histogram smoothed(const Histogram& h, double epsilon = kDefaultSmoothing);

/// KL(p||q) + KL(q||p), natural log, on smoothed copies of p and q.
/// Throws kInvalidArgument when the bin layouts differ.
double symmetric_kl(const Histogram& p, const Histogram& q,
                    double epsilon = kDefaultSmoothing);
/// Same on raw mass vectors (must be strictly positive).
double symmetric_kl(std::span<const double> p, std::span<const double> q);

struct ModelSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t datasets = 0;
};

struct AggregateReport {
    std::map<std::string, ModelSummary> models;
    /// win_rate[a][b]: share of common datasets where a beats b; ties count 1/2.
    std::map<std::string, std::map<std::string, double>> win_rate;
};

using ScoreTable = std::map<std::string, std::map<std::string, double>>;  // model -> dataset -> value

AggregateReport aggregate_report(const ScoreTable& per_dataset_scores);

// ---------------------------------------------------------------------------
// TREC / JSONL / CSV I/O

/// `query_id 0 passage_id rel` lines; rel > 0 is relevant.
QrelSet read_trec_qrels(std::istream& in);
/// `query_id Q0 passage_id rank score tag` lines.
RunRanking read_trec_run(std::istream& in);
void write_trec_qrels(const QrelSet& qrels, std::ostream& out);
void write_trec_run(const RunRanking& run, const std::string& tag, std::ostream& out);
/// JSONL forms: {"query_id","passage_id","relevance"} and {"query_id","passage_id","score"}.
QrelSet read_jsonl_qrels(std::istream& in);
RunRanking read_jsonl_run(std::istream& in);
/// Picks the reader from the extension (.jsonl -> JSONL, otherwise TREC).
QrelSet load_qrels(const std::filesystem::path& path);
RunRanking load_run(const std::filesystem::path& path);

struct MetricRow {
    std::string metric;
    std::string model;
    std::string dataset;
    double value = 0.0;
};

/// `metric,model,dataset,value` with a header row.
void write_metrics_csv(std::span<const MetricRow> rows, std::ostream& out);
std::vector<MetricRow> read_metrics_csv(std::istream& in);
/// `threshold,precision,recall` with a header row.
void write_pr_csv(const PrCurve& curve, std::ostream& out);

/// Shortest round-trip decimal form used by every CSV writer.
std::string format_double(double value);

}  // namespace sdft::eval
