// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "sdft/error.hpp"
#include "sdft/fileio.hpp"

namespace sdft::eval {

namespace {

using json = nlohmann::json;

bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.passage_id < b.passage_id;
}

const std::set<std::string>& judged(const QrelSet& qrels, const std::string& query_id) {
    const auto* rel = qrels.find(query_id);
    if (rel == nullptr) {
        fail(ErrorCode::kInvalidArgument,
             "query '" + query_id + "' is in the run but has no relevance judgments");
    }
    return *rel;
}

void require_k(std::size_t k) {
    if (k < 1) {
        fail(ErrorCode::kInvalidArgument, "metric cutoff k must be >= 1");
    }
}

template <typename PerQuery>
MetricResult score_run(const RunRanking& run, const QrelSet& qrels, std::size_t k,
                       PerQuery&& per_query) {
    require_k(k);
    MetricResult result;
    double sum = 0.0;
    for (const auto& [query_id, ranked] : run.lists()) {
        const double value = per_query(ranked, judged(qrels, query_id));
        result.per_query.emplace(query_id, value);
        sum += value;
    }
    if (!result.per_query.empty()) {
        result.mean = sum / static_cast<double>(result.per_query.size());
    }
    return result;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) {
        out.push_back(tok);
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    double value = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return value;
}

bool is_jsonl(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return ext == ".jsonl" || ext == ".json";
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

// ---------------------------------------------------------------------------
// Qrels and runs

void QrelSet::add(const std::string& query_id, const std::string& passage_id) {
    rel_[query_id].insert(passage_id);
}

const std::set<std::string>* QrelSet::find(const std::string& query_id) const {
    const auto it = rel_.find(query_id);
    return it == rel_.end() ? nullptr : &it->second;
}

void RunRanking::add(const std::string& query_id, const std::string& passage_id, double score) {
    if (!std::isfinite(score)) {
        fail(ErrorCode::kNonFinite, "non-finite run score for (" + query_id + ", " + passage_id +
                                        ")");
    }
    if (!seen_[query_id].insert(passage_id).second) {
        fail(ErrorCode::kInvalidArgument,
             "duplicate passage '" + passage_id + "' for query '" + query_id + "'");
    }
    auto& list = lists_[query_id];
    ScoredPassage entry{passage_id, score};
    list.insert(std::upper_bound(list.begin(), list.end(), entry, ranks_before), std::move(entry));
}

const std::vector<ScoredPassage>& RunRanking::ranked(const std::string& query_id) const {
    const auto it = lists_.find(query_id);
    if (it == lists_.end()) {
        fail(ErrorCode::kInvalidArgument, "query '" + query_id + "' not in run");
    }
    return it->second;
}

std::vector<std::string> RunRanking::query_ids() const {
    std::vector<std::string> ids;
    ids.reserve(lists_.size());
    for (const auto& [id, _] : lists_) {
        ids.push_back(id);
    }
    return ids;
}

// ---------------------------------------------------------------------------
// Ranked metrics

MetricResult ndcg_at_k(const RunRanking& run, const QrelSet& qrels, std::size_t k) {
    return score_run(run, qrels, k, [k](const auto& ranked, const auto& relevant) {
        double dcg = 0.0;
        const std::size_t depth = std::min(k, ranked.size());
        for (std::size_t i = 0; i < depth; ++i) {
            if (relevant.contains(ranked[i].passage_id)) {
                dcg += 1.0 / std::log2(static_cast<double>(i + 2));
            }
        }
        double ideal = 0.0;
        const std::size_t ideal_depth = std::min(k, relevant.size());
        for (std::size_t i = 0; i < ideal_depth; ++i) {
            ideal += 1.0 / std::log2(static_cast<double>(i + 2));
        }
        return ideal > 0.0 ? dcg / ideal : 0.0;
    });
}

MetricResult map_at_k(const RunRanking& run, const QrelSet& qrels, std::size_t k) {
    return score_run(run, qrels, k, [k](const auto& ranked, const auto& relevant) {
        double sum = 0.0;
        std::size_t hits = 0;
        const std::size_t depth = std::min(k, ranked.size());
        for (std::size_t i = 0; i < depth; ++i) {
            if (relevant.contains(ranked[i].passage_id)) {
                ++hits;
                sum += static_cast<double>(hits) / static_cast<double>(i + 1);
            }
        }
        const std::size_t denom = std::min(relevant.size(), k);
        return denom > 0 ? sum / static_cast<double>(denom) : 0.0;
    });
}

MetricResult mrr_at_k(const RunRanking& run, const QrelSet& qrels, std::size_t k) {
    return score_run(run, qrels, k, [k](const auto& ranked, const auto& relevant) {
        const std::size_t depth = std::min(k, ranked.size());
        for (std::size_t i = 0; i < depth; ++i) {
            if (relevant.contains(ranked[i].passage_id)) {
                return 1.0 / static_cast<double>(i + 1);
            }
        }
        return 0.0;
    });
}

// ---------------------------------------------------------------------------
// Precision / recall

double trapezoid_area(std::span<const PrPoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].recall - points[i - 1].recall) *
                (points[i].precision + points[i - 1].precision) / 2.0;
    }
    return area;
}

PrCurve pr_curve(std::span<const LabeledScore> samples) {
    std::vector<LabeledScore> sorted(samples.begin(), samples.end());
    std::size_t positives = 0;
    for (const auto& s : sorted) {
        if (!std::isfinite(s.score)) {
            fail(ErrorCode::kNonFinite, "non-finite score in precision/recall input");
        }
        positives += s.positive ? 1 : 0;
    }
    if (positives == 0 || positives == sorted.size()) {
        fail(ErrorCode::kInvalidArgument,
             "precision/recall needs at least one positive and one negative sample");
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });

    PrCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 1.0, 0.0});
    // Area accumulated on integer true-positive steps:
    // sum dTP * (p_i + p_{i-1}) / (2P), exact when precision stays 1.
    double area_numerator = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double threshold = sorted[i].score;
        const std::size_t tp_before = tp;
        while (i < sorted.size() && sorted[i].score == threshold) {
            (sorted[i].positive ? tp : fp) += 1;
            ++i;
        }
        PrPoint point;
        point.threshold = threshold;
        point.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        point.recall = static_cast<double>(tp) / static_cast<double>(positives);
        area_numerator +=
            static_cast<double>(tp - tp_before) * (point.precision + curve.points.back().precision);
        curve.points.push_back(point);
    }
    curve.auprc = area_numerator / (2.0 * static_cast<double>(positives));
    return curve;
}

// ---------------------------------------------------------------------------
// Held-out analysis

HeldoutLayout HeldoutLayout::from_split(const DatasetSplit& split) {
    HeldoutLayout layout;
    for (const auto& g : split.groups) {
        for (const auto& q : g.heldout) {
            layout.queries.emplace_back(q, g.group_id);
        }
        if (g.passage_id.empty()) {
            fail(ErrorCode::kInvalidArgument,
                 "group " + std::to_string(g.group_id) + " has no passage_id");
        }
        layout.passages.emplace_back(g.passage_id, g.group_id);
    }
    return layout;
}

std::vector<SimilaritySample> intra_inter(const EmbeddingMatrix& queries,
                                          const EmbeddingMatrix& passages,
                                          const HeldoutLayout& layout) {
    std::vector<SimilaritySample> samples;
    samples.reserve(layout.queries.size() * layout.passages.size());
    for (const auto& [qid, qgroup] : layout.queries) {
        const auto q = queries.row(qid);
        for (const auto& [pid, pgroup] : layout.passages) {
            SimilaritySample s;
            s.kind = qgroup == pgroup ? SampleKind::kIntra : SampleKind::kInter;
            s.query_group = qgroup;
            s.passage_group = pgroup;
            s.query_id = qid;
            s.passage_id = pid;
            s.value = cosine(q, passages.row(pid));
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

std::vector<LabeledScore> to_labeled_scores(std::span<const SimilaritySample> samples) {
    std::vector<LabeledScore> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        out.push_back({s.value, s.kind == SampleKind::kIntra});
    }
    return out;
}

std::pair<RunRanking, QrelSet> heldout_ranking(std::span<const SimilaritySample> samples,
                                               const HeldoutLayout& layout) {
    RunRanking run;
    QrelSet qrels;
    for (const auto& s : samples) {
        run.add(s.query_id, s.passage_id, s.value);
    }
    for (const auto& [qid, qgroup] : layout.queries) {
        for (const auto& [pid, pgroup] : layout.passages) {
            if (pgroup == qgroup) {
                qrels.add(qid, pid);
            }
        }
    }
    return {std::move(run), std::move(qrels)};
}

// ---------------------------------------------------------------------------
// Distributions

Histogram similarity_histogram(std::span<const double> values, std::size_t bins, double lo,
                               double hi) {
    if (values.empty()) {
        fail(ErrorCode::kEmptyInput, "histogram of an empty sample");
    }
    if (bins == 0 || !(lo < hi)) {
        fail(ErrorCode::kInvalidArgument, "histogram needs bins >= 1 and lo < hi");
    }
    std::vector<std::size_t> counts(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (const double v : values) {
        if (!std::isfinite(v)) {
            fail(ErrorCode::kNonFinite, "non-finite value in histogram input");
        }
        const double pos = std::floor((v - lo) / width);
        std::size_t idx = 0;
        if (pos >= static_cast<double>(bins)) {
            idx = bins - 1;
        } else if (pos > 0.0) {
            idx = static_cast<std::size_t>(pos);
        }
        ++counts[idx];
    }
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.mass.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        h.mass[b] = static_cast<double>(counts[b]) / static_cast<double>(values.size());
    }
    return h;
}

Histogram smoothed(const Histogram& h, double epsilon) {
    Histogram out = h;
    double total = 0.0;
    for (auto& m : out.mass) {
        if (m <= 0.0) {
            m = epsilon;
        }
        total += m;
    }
    for (auto& m : out.mass) {
        m /= total;
    }
    return out;
}

double symmetric_kl(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) {
        fail(ErrorCode::kInvalidArgument, "symmetric_kl needs histograms with the same bins");
    }
    // KL(p||q) + KL(q||p) = sum (p - q)(ln p - ln q); exactly symmetric in p, q.
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0) || !(q[i] > 0.0)) {
            fail(ErrorCode::kInvalidArgument, "symmetric_kl needs strictly positive bins");
        }
        sum += (p[i] - q[i]) * (std::log(p[i]) - std::log(q[i]));
    }
    return sum;
}

double symmetric_kl(const Histogram& p, const Histogram& q, double epsilon) {
    if (p.mass.size() != q.mass.size() || p.lo != q.lo || p.hi != q.hi) {
        fail(ErrorCode::kInvalidArgument, "symmetric_kl needs identical bin layouts");
    }
    const auto ps = smoothed(p, epsilon);
    const auto qs = smoothed(q, epsilon);
    return symmetric_kl(ps.mass, qs.mass);
}

// ---------------------------------------------------------------------------
// Aggregation

AggregateReport aggregate_report(const ScoreTable& per_dataset_scores) {
    AggregateReport report;
    for (const auto& [model, scores] : per_dataset_scores) {
        ModelSummary s;
        s.datasets = scores.size();
        if (!scores.empty()) {
            double sum = 0.0;
            for (const auto& [_, v] : scores) sum += v;
            s.mean = sum / static_cast<double>(scores.size());
            double sq = 0.0;
            for (const auto& [_, v] : scores) sq += (v - s.mean) * (v - s.mean);
            s.stddev = std::sqrt(sq / static_cast<double>(scores.size()));
        }
        report.models.emplace(model, s);
    }
    for (const auto& [a, a_scores] : per_dataset_scores) {
        for (const auto& [b, b_scores] : per_dataset_scores) {
            double wins = 0.0;
            std::size_t common = 0;
            for (const auto& [dataset, va] : a_scores) {
                const auto it = b_scores.find(dataset);
                if (it == b_scores.end()) continue;
                ++common;
                if (va > it->second) {
                    wins += 1.0;
                } else if (va == it->second) {
                    wins += 0.5;
                }
            }
            if (common > 0) {
                report.win_rate[a][b] = wins / static_cast<double>(common);
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// I/O

QrelSet read_trec_qrels(std::istream& in) {
    QrelSet qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = split_ws(line);
        if (f.empty()) continue;
        if (f.size() != 4) {
            fail(ErrorCode::kParse, "qrels line " + std::to_string(line_no) +
                                        ": expected 'query_id 0 passage_id rel'");
        }
        if (parse_double(f[3], line_no) > 0.0) {
            qrels.add(f[0], f[2]);
        }
    }
    return qrels;
}

RunRanking read_trec_run(std::istream& in) {
    RunRanking run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = split_ws(line);
        if (f.empty()) continue;
        if (f.size() != 6) {
            fail(ErrorCode::kParse, "run line " + std::to_string(line_no) +
                                        ": expected 'query_id Q0 passage_id rank score tag'");
        }
        run.add(f[0], f[2], parse_double(f[4], line_no));
    }
    return run;
}

void write_trec_qrels(const QrelSet& qrels, std::ostream& out) {
    for (const auto& [qid, rel] : qrels.queries()) {
        for (const auto& pid : rel) {
            out << qid << " 0 " << pid << " 1\n";
        }
    }
}

void write_trec_run(const RunRanking& run, const std::string& tag, std::ostream& out) {
    for (const auto& [qid, ranked] : run.lists()) {
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            out << qid << " Q0 " << ranked[i].passage_id << ' ' << (i + 1) << ' '
                << format_double(ranked[i].score) << ' ' << tag << '\n';
        }
    }
}

QrelSet read_jsonl_qrels(std::istream& in) {
    QrelSet qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto obj = json::parse(line);
            if (obj.value("relevance", 1.0) > 0.0) {
                qrels.add(obj.at("query_id").get<std::string>(),
                          obj.at("passage_id").get<std::string>());
            }
        } catch (const json::exception& e) {
            fail(ErrorCode::kParse, "qrels line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return qrels;
}

RunRanking read_jsonl_run(std::istream& in) {
    RunRanking run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto obj = json::parse(line);
            run.add(obj.at("query_id").get<std::string>(),
                    obj.at("passage_id").get<std::string>(), obj.at("score").get<double>());
        } catch (const json::exception& e) {
            fail(ErrorCode::kParse, "run line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return run;
}

QrelSet load_qrels(const std::filesystem::path& path) {
    auto in = open_input(path);
    return is_jsonl(path) ? read_jsonl_qrels(in) : read_trec_qrels(in);
}

RunRanking load_run(const std::filesystem::path& path) {
    auto in = open_input(path);
    return is_jsonl(path) ? read_jsonl_run(in) : read_trec_run(in);
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        fail(ErrorCode::kInternal, "cannot format number");
    }
    return std::string(buf, ptr);
}

void write_metrics_csv(std::span<const MetricRow> rows, std::ostream& out) {
    out << "metric,model,dataset,value\n";
    for (const auto& r : rows) {
        out << csv_field(r.metric) << ',' << csv_field(r.model) << ',' << csv_field(r.dataset)
            << ',' << format_double(r.value) << '\n';
    }
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
    std::vector<MetricRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = parse_csv_line(line);
        if (f.size() != 4) {
            fail(ErrorCode::kParse, "metrics line " + std::to_string(line_no) +
                                        ": expected metric,model,dataset,value");
        }
        if (line_no == 1 && f[0] == "metric") continue;
        rows.push_back({f[0], f[1], f[2], parse_double(f[3], line_no)});
    }
    return rows;
}

void write_pr_csv(const PrCurve& curve, std::ostream& out) {
    out << "threshold,precision,recall\n";
    for (const auto& p : curve.points) {
        out << format_double(p.threshold) << ',' << format_double(p.precision) << ','
            << format_double(p.recall) << '\n';
    }
}

}  // namespace sdft::eval
