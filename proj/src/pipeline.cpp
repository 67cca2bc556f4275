// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/pipeline.hpp"

#include <ostream>
#include <utility>

#include "sdft/error.hpp"
#include "sdft/experts.hpp"
#include "sdft/fileio.hpp"
#include "sdft/random.hpp"

namespace sdft::pipeline {

namespace {

template <typename Fn>
auto in_stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.code(), std::string("stage '") + name + "': " + e.what());
    }
}

std::string k_suffix(std::size_t k) { return "@" + std::to_string(k); }

}  // namespace

std::string adapter_file(adapter::TargetKind kind) {
    return "adapter_" + std::string(adapter::to_string(kind)) + ".bin";
}

std::string pr_curve_file(const std::string& model) { return "pr_curve_" + model + ".csv"; }

std::string run_file(const std::string& model) { return "heldout_run_" + model + ".trec"; }

void synth_stage(const synth::SyntheticWorld& world, const fs::path& out_dir) {
    synth::save(synth::generate(world), out_dir);
}

pairgen::PairStats pairgen_stage(const fs::path& collection_path, const fs::path& split_path,
                                 std::uint64_t seed, const fs::path& out,
                                 const fs::path& collection_out) {
    auto collection = load_collection(collection_path);
    const auto split = load_split(split_path);
    const auto dataset = pairgen::build_pair_dataset(collection, split, seed);
    std::vector<LabeledPair> records;
    records.reserve(dataset.records.size());
    for (const auto& r : dataset.records) {
        records.push_back({r, {}, {}, {}, {}});
    }
    save_records(records, out);
    if (!collection_out.empty()) {
        save_collection(collection, collection_out);
    }
    return dataset.stats;
}

std::vector<double> label_stage(const fs::path& pairs_path, const std::vector<fs::path>& expert_paths,
                                const fs::path& out, const fs::path& active_sets_out) {
    const auto records = load_records(pairs_path);
    std::vector<EmbeddingMatrix> matrices;
    for (const auto& p : expert_paths) {
        matrices.push_back(load_matrix(p));
    }
    const experts::ExpertPanel panel(std::move(matrices));
    std::vector<PairRecord> pairs;
    pairs.reserve(records.size());
    for (const auto& r : records) {
        pairs.push_back(r.pair);
    }
    auto labeled = experts::score_pairs(panel, pairs);
    experts::assign_soft_labels(labeled);
    save_records(labeled, out);
    auto fractions = experts::active_set_fractions(labeled);
    if (!active_sets_out.empty()) {
        write_file(active_sets_out, [&](std::ostream& os) {
            os << "expert,model,fraction\n";
            for (std::size_t k = 0; k < fractions.size(); ++k) {
                os << k << ',' << panel[k].model_id() << ',' << eval::format_double(fractions[k])
                   << '\n';
            }
        });
    }
    return fractions;
}

adapter::TrainReport train_stage(const fs::path& base_path, const fs::path& labeled_path,
                                 const adapter::TrainConfig& config, const fs::path& out) {
    const auto base = load_matrix(base_path);
    const auto labeled = load_records(labeled_path);
    auto result = adapter::train(base, labeled, config);
    adapter::save_adapter(result.model, result.report, out);
    return result.report;
}

EmbeddingMatrix load_model_embeddings(const fs::path& base, const std::optional<fs::path>& adapter,
                                      const std::string& model_name) {
    auto matrix = load_matrix(base, model_name);
    if (!adapter) {
        return matrix;
    }
    return adapter::apply_adapter(adapter::load_adapter(*adapter), matrix, model_name);
}

HeldoutResult evaluate_heldout(const EmbeddingMatrix& embeddings, const DatasetSplit& split,
                               std::size_t k) {
    const auto layout = eval::HeldoutLayout::from_split(split);
    const auto samples = eval::intra_inter(embeddings, embeddings, layout);
    HeldoutResult r;
    r.samples = samples.size();
    double intra_sum = 0.0;
    double inter_sum = 0.0;
    for (const auto& s : samples) {
        if (s.kind == eval::SampleKind::kIntra) {
            ++r.intra;
            intra_sum += s.value;
        } else {
            inter_sum += s.value;
        }
    }
    if (r.intra > 0) r.mean_intra = intra_sum / static_cast<double>(r.intra);
    if (r.samples > r.intra) r.mean_inter = inter_sum / static_cast<double>(r.samples - r.intra);
    r.curve = eval::pr_curve(eval::to_labeled_scores(samples));
    auto [run, qrels] = eval::heldout_ranking(samples, layout);
    r.ndcg = eval::ndcg_at_k(run, qrels, k).mean;
    r.map = eval::map_at_k(run, qrels, k).mean;
    r.mrr = eval::mrr_at_k(run, qrels, k).mean;
    r.run = std::move(run);
    r.qrels = std::move(qrels);
    return r;
}

std::vector<eval::MetricRow> heldout_rows(const HeldoutResult& r, const std::string& model,
                                          std::size_t k) {
    const std::string ds = "heldout";
    return {
        {"auprc", model, ds, r.curve.auprc},
        {"ndcg" + k_suffix(k), model, ds, r.ndcg},
        {"map" + k_suffix(k), model, ds, r.map},
        {"mrr" + k_suffix(k), model, ds, r.mrr},
        {"mean_intra", model, ds, r.mean_intra},
        {"mean_inter", model, ds, r.mean_inter},
    };
}

std::vector<eval::MetricRow> retrieval_rows(
    const fs::path& qrels_path, const std::vector<std::pair<std::string, fs::path>>& runs,
    const std::string& dataset, std::size_t k) {
    const auto qrels = eval::load_qrels(qrels_path);
    std::vector<eval::MetricRow> rows;
    for (const auto& [model, path] : runs) {
        const auto run = eval::load_run(path);
        rows.push_back({"ndcg" + k_suffix(k), model, dataset, eval::ndcg_at_k(run, qrels, k).mean});
        rows.push_back({"map" + k_suffix(k), model, dataset, eval::map_at_k(run, qrels, k).mean});
        rows.push_back({"mrr" + k_suffix(k), model, dataset, eval::mrr_at_k(run, qrels, k).mean});
    }
    return rows;
}

void write_aggregate_csv(const std::vector<eval::MetricRow>& rows, const std::string& metric,
                         std::ostream& out) {
    eval::ScoreTable table;
    for (const auto& r : rows) {
        if (r.metric == metric) {
            table[r.model][r.dataset] = r.value;
        }
    }
    if (table.empty()) {
        fail(ErrorCode::kInvalidArgument, "no rows for metric '" + metric + "'");
    }
    const auto report = eval::aggregate_report(table);
    out << "kind,model,other,value\n";
    for (const auto& [model, s] : report.models) {
        out << "mean," << model << ",," << eval::format_double(s.mean) << '\n';
        out << "std," << model << ",," << eval::format_double(s.stddev) << '\n';
        out << "datasets," << model << ",," << s.datasets << '\n';
    }
    for (const auto& [a, row] : report.win_rate) {
        for (const auto& [b, w] : row) {
            if (a != b) {
                out << "win_rate," << a << ',' << b << ',' << eval::format_double(w) << '\n';
            }
        }
    }
}

std::vector<KlRow> distribution_kl(const std::vector<std::string>& text_ids,
                                   const std::vector<DistModel>& models, std::size_t pair_count,
                                   std::uint64_t seed, std::size_t bins, double lo, double hi) {
    if (text_ids.size() < 2) {
        fail(ErrorCode::kInvalidArgument, "distribution analysis needs at least two texts");
    }
    if (pair_count == 0) {
        fail(ErrorCode::kInvalidArgument, "distribution analysis needs pair_count >= 1");
    }
    Rng rng(derive_seed(seed, "eval.dist"));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(pair_count);
    const auto n = static_cast<std::uint64_t>(text_ids.size());
    for (std::size_t i = 0; i < pair_count; ++i) {
        const auto a = rng.uniform_index(n);
        auto b = rng.uniform_index(n - 1);
        if (b >= a) ++b;
        pairs.emplace_back(a, b);
    }
    std::vector<eval::Histogram> hists;
    for (const auto& m : models) {
        std::vector<double> values;
        values.reserve(pairs.size());
        for (const auto& [a, b] : pairs) {
            values.push_back(cosine(m.embeddings.row(text_ids[a]), m.embeddings.row(text_ids[b])));
        }
        hists.push_back(eval::similarity_histogram(values, bins, lo, hi));
    }
    std::vector<KlRow> rows;
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            rows.push_back({models[i].name, models[j].name, eval::symmetric_kl(hists[i], hists[j])});
        }
    }
    return rows;
}

void write_kl_csv(const std::vector<KlRow>& rows, std::size_t bins, double lo, double hi,
                  std::ostream& out) {
    out << "model_a,model_b,bins,lo,hi,symmetric_kl\n";
    for (const auto& r : rows) {
        out << r.model_a << ',' << r.model_b << ',' << bins << ',' << eval::format_double(lo)
            << ',' << eval::format_double(hi) << ',' << eval::format_double(r.value) << '\n';
    }
}

const ModelOutcome* PipelineResult::find(const std::string& name) const {
    for (const auto& m : models) {
        if (m.name == name) return &m;
    }
    return nullptr;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    if (config.out_dir.empty()) {
        fail(ErrorCode::kInvalidArgument, "pipeline needs an output directory");
    }
    const fs::path& out = config.out_dir;
    fs::create_directories(out);
    PipelineResult result;

    // Inputs: synthetic world or user-supplied files.
    fs::path collection_path = config.collection;
    fs::path split_path = config.split;
    fs::path base_path = config.base;
    std::vector<fs::path> expert_paths = config.experts;
    if (collection_path.empty()) {
        in_stage("synth", [&] {
            auto world = config.world;
            world.seed = derive_seed(config.seed, "synth");
            synth_stage(world, out);
        });
        collection_path = out / "collection.jsonl";
        split_path = out / "split.json";
        base_path = out / "base.bin";
        expert_paths.clear();
        for (std::size_t k = 0; k < config.world.experts; ++k) {
            expert_paths.push_back(out / ("expert_" + std::to_string(k) + ".bin"));
        }
    } else {
        in_stage("inputs", [&] {
            for (const auto& p : {collection_path, split_path, base_path}) {
                if (p.empty() || !fs::is_regular_file(p)) {
                    fail(ErrorCode::kIo, "no such file: " + p.string());
                }
            }
            if (expert_paths.empty()) {
                fail(ErrorCode::kInvalidArgument, "at least one expert matrix is required");
            }
            for (const auto& p : expert_paths) {
                if (!fs::is_regular_file(p)) {
                    fail(ErrorCode::kIo, "no such file: " + p.string());
                }
            }
        });
    }

    result.pair_stats = in_stage("pairgen", [&] {
        return pairgen_stage(collection_path, split_path, derive_seed(config.seed, "pairgen"),
                             out / kPairsFile, out / kAugmentedCollectionFile);
    });

    result.active_sets = in_stage("label", [&] {
        return label_stage(out / kPairsFile, expert_paths, out / kLabeledFile,
                           out / kActiveSetsFile);
    });

    std::vector<eval::MetricRow> rows;
    const auto base = in_stage("load-base", [&] { return load_matrix(base_path, "base"); });
    const auto split = in_stage("load-split", [&] { return load_split(split_path); });
    const auto labeled = in_stage("load-labels", [&] { return load_records(out / kLabeledFile); });

    // Experts as classifiers of the training pairs.
    for (std::size_t k = 0; k < expert_paths.size(); ++k) {
        std::vector<eval::LabeledScore> scores;
        scores.reserve(labeled.size());
        for (const auto& lp : labeled) {
            scores.push_back({lp.scores.at(k), lp.pair.hard_label == 1});
        }
        rows.push_back({"auprc", expert_paths[k].stem().string(), "pairs",
                        in_stage("label", [&] { return eval::pr_curve(scores).auprc; })});
    }

    std::vector<std::pair<std::string, EmbeddingMatrix>> models;
    models.emplace_back("base", base);
    std::vector<std::optional<adapter::TrainReport>> reports{std::nullopt};

    auto train_config = config.train;
    train_config.seed = derive_seed(config.seed, "train");
    for (const auto kind : config.targets) {
        const std::string name(adapter::to_string(kind));
        auto cfg = train_config;
        cfg.target_kind = kind;
        auto trained = in_stage("train", [&] { return adapter::train(base, labeled, cfg); });
        in_stage("train", [&] {
            adapter::save_adapter(trained.model, trained.report, out / adapter_file(kind));
        });
        rows.push_back({"train_loss_initial", name, "train", trained.report.initial_loss});
        for (std::size_t e = 0; e < trained.report.epoch_losses.size(); ++e) {
            rows.push_back({"train_loss_epoch" + std::to_string(e + 1), name, "train",
                            trained.report.epoch_losses[e]});
        }
        rows.push_back({"train_loss_final", name, "train", trained.report.final_loss});
        models.emplace_back(name, adapter::apply_adapter(trained.model, base, name));
        reports.push_back(trained.report);
    }

    in_stage("eval-heldout", [&] {
        bool qrels_written = false;
        for (std::size_t m = 0; m < models.size(); ++m) {
            const auto& [name, embeddings] = models[m];
            const auto r = evaluate_heldout(embeddings, split, config.k);
            const auto mrows = heldout_rows(r, name, config.k);
            rows.insert(rows.end(), mrows.begin(), mrows.end());
            write_file(out / pr_curve_file(name),
                       [&](std::ostream& os) { eval::write_pr_csv(r.curve, os); });
            write_file(out / run_file(name),
                       [&](std::ostream& os) { eval::write_trec_run(r.run, name, os); });
            if (!qrels_written) {
                write_file(out / kQrelsFile,
                           [&](std::ostream& os) { eval::write_trec_qrels(r.qrels, os); });
                qrels_written = true;
            }
            result.models.push_back({name, r.curve.auprc, r.ndcg, r.map, r.mrr, reports[m]});
        }
    });

    in_stage("eval-dist", [&] {
        const auto collection = load_collection(collection_path);
        std::vector<std::string> ids;
        for (const auto& item : collection.items()) {
            ids.push_back(item.text_id);
        }
        std::vector<DistModel> dist_models;
        for (const auto& [name, embeddings] : models) {
            dist_models.push_back({name, embeddings});
        }
        result.kl = distribution_kl(ids, dist_models, config.dist_pairs,
                                    derive_seed(config.seed, "eval"), config.bins, -1.0, 1.0);
        write_file(out / kKlFile,
                   [&](std::ostream& os) { write_kl_csv(result.kl, config.bins, -1.0, 1.0, os); });
    });

    in_stage("report", [&] {
        write_file(out / kMetricsFile, [&](std::ostream& os) { eval::write_metrics_csv(rows, os); });
    });
    return result;
}

}  // namespace sdft::pipeline
