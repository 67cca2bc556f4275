// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end over the libsdft C API.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdft/sdft.h"

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

int report(const char* command, sdft_status status) {
    if (status == SDFT_OK) return kExitOk;
    std::cerr << "sdft " << command << ": " << sdft_last_error() << " ["
              << sdft_status_name(status) << "]\n";
    return sdft_status_is_io(status) ? kExitUsage : kExitCompute;
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
    std::vector<const char*> out;
    out.reserve(v.size());
    for (const auto& s : v) out.push_back(s.c_str());
    return out;
}

// Splits "name=path" (or a bare "name") for repeated model options.
std::pair<std::string, std::string> split_assignment(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return {arg, {}};
    return {arg.substr(0, eq), arg.substr(eq + 1)};
}

struct WorldFlags {
    sdft_world world{};

    void attach(CLI::App* app) {
        sdft_world_defaults(&world);
        app->add_option("--groups", world.groups, "Number of groups G (>= 2)")->capture_default_str();
        app->add_option("--train", world.train, "Train questions per group T (>= 1)")->capture_default_str();
        app->add_option("--heldout", world.heldout, "Held-out questions per group H")->capture_default_str();
        app->add_option("--dim", world.dim, "Embedding dimension (>= G)")->capture_default_str();
        app->add_option("--num-experts", world.experts, "Expert models K (>= 1)")->capture_default_str();
        app->add_option("--question-jitter", world.question_jitter)->capture_default_str();
        app->add_option("--passage-jitter", world.passage_jitter)->capture_default_str();
        app->add_option("--expert-noise", world.expert_noise)->capture_default_str();
        app->add_option("--base-noise", world.base_noise)->capture_default_str();
        app->add_option("--base-anisotropy", world.base_anisotropy)->capture_default_str();
    }
};

struct TrainFlags {
    sdft_train_config config{};
    std::string optimizer = "adam";
    bool no_normalize = false;

    void attach(CLI::App* app) {
        sdft_train_config_defaults(&config);
        app->add_option("--lr", config.lr, "Learning rate")->capture_default_str();
        app->add_option("--batch", config.batch, "Mini-batch size")->capture_default_str();
        app->add_option("--epochs", config.epochs, "Passes over the pairs")->capture_default_str();
        app->add_option("--optimizer", optimizer, "adam or sgd")->capture_default_str();
        app->add_option("--out-dim", config.out_dim, "Adapter output dimension (0: same as input)");
        app->add_option("--init-noise", config.init_noise, "Std of the initial weight noise")
            ->capture_default_str();
        app->add_flag("--no-normalize", no_normalize, "Do not L2-normalize adapter outputs");
    }

    void finish() {
        config.optimizer = optimizer.c_str();
        config.normalize_output = no_normalize ? 0 : 1;
    }
};

void add_config_option(CLI::App* app) {
    app->add_option("--config", "key=value file of defaults; command-line flags take precedence");
}

bool has_flag(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
}

// Replaces "--config FILE" with the flags it lists. Subcommand config files
// are not read by CLI11 itself, so they are expanded before parsing. Keys
// already given on the command line are skipped so that the flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string file;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            file = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (file.empty()) return args;
    std::vector<std::string> extra;
    for (const auto& item : CLI::ConfigINI().from_file(file)) {
        const std::string flag = "--" + item.name;
        if (item.name.empty() || has_flag(args, flag)) continue;
        if (item.inputs.size() == 1 && item.inputs[0] == "true") {
            extra.push_back(flag);
        } else if (item.inputs.size() == 1 && item.inputs[0] == "false") {
            continue;
        } else {
            for (const auto& v : item.inputs) {
                extra.push_back(flag);
                extra.push_back(v);
            }
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soft-label distillation for embedding adapters", "sdft"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sdft_version());

    std::function<int()> action;

    // synth --------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic world");
    add_config_option(synth);
    WorldFlags synth_world;
    synth_world.attach(synth);
    std::string synth_out;
    synth->add_option("--seed", synth_world.world.seed)->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->callback([&] {
        action = [&] { return report("synth", sdft_synth(&synth_world.world, synth_out.c_str())); };
    });

    // pairgen ------------------------------------------------------------
    auto* pairgen = app.add_subcommand("pairgen", "Build positive and negative pair records");
    add_config_option(pairgen);
    std::string pg_collection, pg_split, pg_out, pg_collection_out;
    std::uint64_t pg_seed = 0;
    pairgen->add_option("--collection", pg_collection, "Collection JSONL")->required();
    pairgen->add_option("--split", pg_split, "Split JSON")->required();
    pairgen->add_option("--seed", pg_seed)->capture_default_str();
    pairgen->add_option("--out", pg_out, "Pair-record JSONL to write")->required();
    pairgen->add_option("--collection-out", pg_collection_out,
                        "Collection with concatenations (default: collection_aug.jsonl next to --out)");
    pairgen->callback([&] {
        action = [&] {
            if (pg_collection_out.empty()) {
                pg_collection_out = (fs::path(pg_out).parent_path() / "collection_aug.jsonl").string();
            }
            sdft_pair_counts counts{};
            const auto st = sdft_pairgen(pg_collection.c_str(), pg_split.c_str(), pg_seed,
                                         pg_out.c_str(), pg_collection_out.c_str(), &counts);
            if (st == SDFT_OK) {
                std::cout << "pairs " << counts.total << " (direct " << counts.direct
                          << ", concat_left " << counts.concat_left << ", concat_right "
                          << counts.concat_right << ", negative " << counts.negative << ")\n";
            }
            return report("pairgen", st);
        };
    });

    // label --------------------------------------------------------------
    auto* label = app.add_subcommand("label", "Score pairs with experts and assign soft labels");
    add_config_option(label);
    std::string lb_pairs, lb_out, lb_active;
    std::vector<std::string> lb_experts;
    label->add_option("--pairs", lb_pairs, "Pair-record JSONL")->required();
    label->add_option("--experts", lb_experts, "Expert matrix files")
        ->required()
        ->delimiter(',');
    label->add_option("--out", lb_out, "Labeled JSONL to write")->required();
    label->add_option("--active-sets", lb_active, "Optional active-set CSV");
    label->callback([&] {
        action = [&] {
            const auto experts = c_strings(lb_experts);
            return report("label", sdft_label(lb_pairs.c_str(), experts.data(), experts.size(),
                                              lb_out.c_str(),
                                              lb_active.empty() ? nullptr : lb_active.c_str()));
        };
    });

    // train --------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Fit a linear adapter on labeled pairs");
    add_config_option(train);
    std::string tr_base, tr_pairs, tr_out, tr_target = "soft1";
    TrainFlags tr;
    tr.attach(train);
    train->add_option("--base", tr_base, "Base embedding matrix")->required();
    train->add_option("--pairs", tr_pairs, "Labeled JSONL")->required();
    train->add_option("--target", tr_target, "hard, soft1, soft2 or soft3")->capture_default_str();
    train->add_option("--seed", tr.config.seed)->capture_default_str();
    train->add_option("--out", tr_out, "Adapter checkpoint to write")->required();
    train->callback([&] {
        action = [&] {
            tr.finish();
            tr.config.target = tr_target.c_str();
            sdft_train_summary summary{};
            const auto st = sdft_train(tr_base.c_str(), tr_pairs.c_str(), &tr.config,
                                       tr_out.c_str(), &summary);
            if (st == SDFT_OK) {
                std::cout << "loss " << summary.initial_loss << " -> " << summary.final_loss
                          << " in " << summary.steps << " steps\n";
            }
            return report("train", st);
        };
    });

    // eval-heldout -------------------------------------------------------
    auto* heldout = app.add_subcommand("eval-heldout", "Intra/inter similarity, PR curve, ranking");
    add_config_option(heldout);
    std::string eh_base, eh_adapter, eh_split, eh_model = "base", eh_out;
    std::size_t eh_k = 10;
    heldout->add_option("--base", eh_base, "Base embedding matrix")->required();
    heldout->add_option("--adapter", eh_adapter, "Adapter checkpoint (omit for the raw base)");
    heldout->add_option("--split", eh_split, "Split JSON")->required();
    heldout->add_option("--model", eh_model, "Model name used in reports")->capture_default_str();
    heldout->add_option("--k", eh_k, "Ranking cutoff")->capture_default_str();
    heldout->add_option("--out", eh_out, "Output directory")->required();
    heldout->callback([&] {
        action = [&] {
            return report("eval-heldout",
                          sdft_eval_heldout(eh_base.c_str(),
                                            eh_adapter.empty() ? nullptr : eh_adapter.c_str(),
                                            eh_split.c_str(), eh_model.c_str(), eh_k,
                                            eh_out.c_str()));
        };
    });

    // eval-retrieval -----------------------------------------------------
    auto* retrieval = app.add_subcommand("eval-retrieval", "nDCG/mAP/mRR of runs against qrels");
    add_config_option(retrieval);
    std::string er_qrels, er_dataset = "dataset", er_out, er_aggregate_metric;
    std::vector<std::string> er_runs, er_aggregate;
    std::size_t er_k = 10;
    retrieval->add_option("--qrels", er_qrels, "Qrels (TREC or .jsonl)");
    retrieval->add_option("--run", er_runs, "Run as name=path (TREC or .jsonl); repeatable");
    retrieval->add_option("--dataset", er_dataset, "Dataset name in reports")->capture_default_str();
    retrieval->add_option("--k", er_k, "Ranking cutoff")->capture_default_str();
    retrieval->add_option("--aggregate", er_aggregate,
                          "Summarize these metrics CSVs instead of scoring runs");
    retrieval->add_option("--metric", er_aggregate_metric, "Metric to aggregate (e.g. ndcg@10)");
    retrieval->add_option("--out", er_out, "Output directory")->required();
    retrieval->callback([&] {
        action = [&]() -> int {
            if (!er_aggregate.empty()) {
                if (er_aggregate_metric.empty()) {
                    std::cerr << "sdft eval-retrieval: --aggregate needs --metric\n";
                    return kExitUsage;
                }
                const auto files = c_strings(er_aggregate);
                const auto out = (fs::path(er_out) / "aggregate.csv").string();
                return report("eval-retrieval",
                              sdft_aggregate(files.data(), files.size(),
                                             er_aggregate_metric.c_str(), out.c_str()));
            }
            if (er_qrels.empty() || er_runs.empty()) {
                std::cerr << "sdft eval-retrieval: --qrels and at least one --run are required\n";
                return kExitUsage;
            }
            std::vector<std::string> names, paths;
            for (const auto& r : er_runs) {
                auto [name, path] = split_assignment(r);
                if (path.empty()) {
                    path = name;
                    name = fs::path(path).stem().string();
                }
                names.push_back(name);
                paths.push_back(path);
            }
            const auto n = c_strings(names);
            const auto p = c_strings(paths);
            return report("eval-retrieval",
                          sdft_eval_retrieval(er_qrels.c_str(), p.data(), n.data(), n.size(),
                                              er_dataset.c_str(), er_k, er_out.c_str()));
        };
    });

    // eval-dist ----------------------------------------------------------
    auto* dist = app.add_subcommand("eval-dist", "Symmetric KL between similarity distributions");
    add_config_option(dist);
    std::string ed_collection, ed_base, ed_out;
    std::vector<std::string> ed_models;
    std::size_t ed_pairs = 20000, ed_bins = 100;
    std::uint64_t ed_seed = 0;
    dist->add_option("--collection", ed_collection, "Collection JSONL")->required();
    dist->add_option("--base", ed_base, "Base embedding matrix")->required();
    dist->add_option("--model", ed_models,
                     "Model as name or name=adapter; a bare name uses the raw base; repeatable")
        ->required();
    dist->add_option("--pairs", ed_pairs, "Random text pairs")->capture_default_str();
    dist->add_option("--bins", ed_bins, "Histogram bins on [-1, 1]")->capture_default_str();
    dist->add_option("--seed", ed_seed)->capture_default_str();
    dist->add_option("--out", ed_out, "Output directory")->required();
    dist->callback([&] {
        action = [&] {
            std::vector<std::string> names, adapters;
            for (const auto& m : ed_models) {
                auto [name, adapter] = split_assignment(m);
                names.push_back(name);
                adapters.push_back(adapter);
            }
            const auto n = c_strings(names);
            std::vector<const char*> a;
            for (const auto& s : adapters) a.push_back(s.empty() ? nullptr : s.c_str());
            return report("eval-dist",
                          sdft_eval_dist(ed_collection.c_str(), ed_base.c_str(), a.data(), n.data(),
                                         n.size(), ed_pairs, ed_seed, ed_bins, ed_out.c_str()));
        };
    });

    // pipeline -----------------------------------------------------------
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
    add_config_option(pipeline);
    sdft_pipeline_config pc{};
    sdft_pipeline_config_defaults(&pc);
    WorldFlags pl_world;
    pl_world.attach(pipeline);
    TrainFlags pl_train;
    pl_train.attach(pipeline);
    std::string pl_collection, pl_split, pl_base, pl_out, pl_targets = "hard,soft1,soft2,soft3";
    std::vector<std::string> pl_experts;
    pipeline->add_option("--collection", pl_collection, "Collection JSONL (omit for synthetic)");
    pipeline->add_option("--split", pl_split, "Split JSON");
    pipeline->add_option("--base", pl_base, "Base embedding matrix");
    pipeline->add_option("--experts", pl_experts, "Expert matrix files")->delimiter(',');
    pipeline->add_option("--targets", pl_targets, "Comma-separated training targets")
        ->capture_default_str();
    pipeline->add_option("--k", pc.k, "Ranking cutoff")->capture_default_str();
    pipeline->add_option("--bins", pc.bins, "Histogram bins")->capture_default_str();
    pipeline->add_option("--dist-pairs", pc.dist_pairs, "Random pairs for KL")->capture_default_str();
    pipeline->add_option("--seed", pc.seed, "Top-level seed")->capture_default_str();
    pipeline->add_option("--out", pl_out, "Output directory")->required();
    pipeline->callback([&] {
        action = [&]() -> int {
            if (!pl_collection.empty() && (pl_split.empty() || pl_base.empty() || pl_experts.empty())) {
                std::cerr << "sdft pipeline: --collection needs --split, --base and --experts\n";
                return kExitUsage;
            }
            pl_train.finish();
            pc.world = pl_world.world;
            pc.train = pl_train.config;
            const auto experts = c_strings(pl_experts);
            pc.collection = pl_collection.empty() ? nullptr : pl_collection.c_str();
            pc.split = pl_split.empty() ? nullptr : pl_split.c_str();
            pc.base = pl_base.empty() ? nullptr : pl_base.c_str();
            pc.experts = experts.data();
            pc.n_experts = experts.size();
            pc.targets = pl_targets.c_str();
            pc.out_dir = pl_out.c_str();
            const auto st = sdft_pipeline(&pc);
            if (st == SDFT_OK) {
                std::cout << "held-out AUPRC";
                for (const char* m : {"base", "hard", "soft1", "soft2", "soft3"}) {
                    double v = 0.0;
                    if (sdft_pipeline_auprc(m, &v) == SDFT_OK) std::cout << ' ' << m << '=' << v;
                }
                std::cout << "\nreports in " << pl_out << '\n';
            }
            return report("pipeline", st);
        };
    });

    try {
        auto args = expand_config(std::vector<std::string>(argv + 1, argv + argc));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    return action ? action() : kExitUsage;
}
