// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/sdft.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <map>
#include <new>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sdft/corpus.hpp"
#include "sdft/error.hpp"
#include "sdft/evalkit.hpp"
#include "sdft/experts.hpp"
#include "sdft/fileio.hpp"
#include "sdft/pipeline.hpp"

struct sdft_matrix {
    sdft::EmbeddingMatrix matrix;
};

namespace {

thread_local std::string g_last_error;
thread_local std::map<std::string, double> g_pipeline_auprc;

sdft_status to_status(sdft::ErrorCode code) { return static_cast<sdft_status>(code); }

template <typename Fn>
sdft_status guarded(Fn&& fn) {
    g_last_error.clear();
    try {
        fn();
        return SDFT_OK;
    } catch (const sdft::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SDFT_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SDFT_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SDFT_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) {
        sdft::fail(sdft::ErrorCode::kInvalidArgument, std::string(what) + " is null");
    }
}

std::string str(const char* s, const char* what) {
    require(s, what);
    return s;
}

sdft::synth::SyntheticWorld to_world(const sdft_world& w) {
    sdft::synth::SyntheticWorld world;
    world.groups = w.groups;
    world.train = w.train;
    world.heldout = w.heldout;
    world.dim = w.dim;
    world.experts = w.experts;
    world.question_jitter = w.question_jitter;
    world.passage_jitter = w.passage_jitter;
    world.expert_noise = w.expert_noise;
    world.base_noise = w.base_noise;
    world.base_anisotropy = w.base_anisotropy;
    world.seed = w.seed;
    return world;
}

sdft::adapter::TrainConfig to_train_config(const sdft_train_config& c) {
    sdft::adapter::TrainConfig config;
    config.learning_rate = c.lr;
    config.batch_size = c.batch;
    config.epochs = c.epochs;
    config.seed = c.seed;
    if (c.target != nullptr) config.target_kind = sdft::adapter::parse_target_kind(c.target);
    if (c.optimizer != nullptr) config.optimizer = sdft::adapter::parse_optimizer_kind(c.optimizer);
    config.normalize_output = c.normalize_output != 0;
    config.out_dim = c.out_dim;
    config.init_noise = c.init_noise;
    return config;
}

std::vector<sdft::adapter::TargetKind> parse_targets(const char* list) {
    if (list == nullptr) {
        return sdft::pipeline::PipelineConfig{}.targets;
    }
    std::vector<sdft::adapter::TargetKind> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(sdft::adapter::parse_target_kind(item));
    }
    if (out.empty()) {
        sdft::fail(sdft::ErrorCode::kInvalidArgument, "no training targets selected");
    }
    return out;
}

std::vector<std::filesystem::path> paths(const char* const* items, std::size_t n, const char* what) {
    if (n > 0) require(items, what);
    std::vector<std::filesystem::path> out;
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(str(items[i], what));
    return out;
}

}  // namespace

extern "C" {

const char* sdft_version(void) { return "1.0.0"; }

const char* sdft_status_name(sdft_status status) {
    switch (status) {
        case SDFT_OK: return "ok";
        case SDFT_ERR_INVALID_ARGUMENT: return "invalid argument";
        case SDFT_ERR_IO: return "io error";
        case SDFT_ERR_BAD_MAGIC: return "bad magic";
        case SDFT_ERR_VERSION_MISMATCH: return "version mismatch";
        case SDFT_ERR_TRUNCATED: return "truncated";
        case SDFT_ERR_NON_FINITE: return "non-finite value";
        case SDFT_ERR_DIMENSION: return "dimension mismatch";
        case SDFT_ERR_DEGENERATE_VECTOR: return "degenerate vector";
        case SDFT_ERR_EMPTY_GROUP: return "empty group";
        case SDFT_ERR_CANNOT_SAMPLE_NEGATIVES: return "cannot sample negatives";
        case SDFT_ERR_MISSING_EMBEDDING: return "missing embedding";
        case SDFT_ERR_SOFT_LABEL: return "soft label unavailable";
        case SDFT_ERR_DIVERGED: return "diverged";
        case SDFT_ERR_COLLAPSED_EMBEDDING: return "collapsed embedding";
        case SDFT_ERR_PARSE: return "parse error";
        case SDFT_ERR_EMPTY_INPUT: return "empty input";
        case SDFT_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* sdft_last_error(void) { return g_last_error.c_str(); }

int sdft_status_is_io(sdft_status status) {
    switch (status) {
        case SDFT_ERR_IO:
        case SDFT_ERR_BAD_MAGIC:
        case SDFT_ERR_VERSION_MISMATCH:
        case SDFT_ERR_TRUNCATED:
        case SDFT_ERR_PARSE:
            return 1;
        default:
            return 0;
    }
}

sdft_status sdft_matrix_create(const char* model_id, size_t dim, sdft_matrix** out) {
    return guarded([&] {
        require(out, "out");
        *out = new sdft_matrix{sdft::EmbeddingMatrix(model_id ? model_id : "", dim)};
    });
}

sdft_status sdft_matrix_load(const char* path, sdft_matrix** out) {
    return guarded([&] {
        require(out, "out");
        auto m = sdft::load_matrix(str(path, "path"));
        *out = new sdft_matrix{std::move(m)};
    });
}

sdft_status sdft_matrix_save(const sdft_matrix* m, const char* path) {
    return guarded([&] {
        require(m, "matrix");
        sdft::save_matrix(m->matrix, str(path, "path"));
    });
}

void sdft_matrix_free(sdft_matrix* m) { delete m; }

sdft_status sdft_matrix_add_row(sdft_matrix* m, const char* text_id, const float* values,
                                size_t len) {
    return guarded([&] {
        require(m, "matrix");
        if (len > 0) require(values, "values");
        m->matrix.add_row(str(text_id, "text_id"), std::span<const float>(values, len));
    });
}

size_t sdft_matrix_dim(const sdft_matrix* m) { return m ? m->matrix.dim() : 0; }

size_t sdft_matrix_rows(const sdft_matrix* m) { return m ? m->matrix.rows() : 0; }

const char* sdft_matrix_row_id(const sdft_matrix* m, size_t index) {
    if (m == nullptr || index >= m->matrix.rows()) return nullptr;
    return m->matrix.id_at(index).c_str();
}

sdft_status sdft_matrix_row(const sdft_matrix* m, const char* text_id, float* out, size_t len) {
    return guarded([&] {
        require(m, "matrix");
        require(out, "out");
        const auto row = m->matrix.row(str(text_id, "text_id"));
        if (len < row.size()) {
            sdft::fail(sdft::ErrorCode::kDimension, "output buffer smaller than dim");
        }
        std::memcpy(out, row.data(), row.size() * sizeof(float));
    });
}

sdft_status sdft_cosine(const float* u, const float* v, size_t len, double* out) {
    return guarded([&] {
        require(out, "out");
        if (len > 0) {
            require(u, "u");
            require(v, "v");
        }
        *out = sdft::cosine({u, len}, {v, len});
    });
}

sdft_status sdft_soft1(const double* scores, size_t k, int hard_label, double* out) {
    return guarded([&] {
        require(out, "out");
        if (k > 0) require(scores, "scores");
        *out = sdft::experts::soft1({scores, k}, hard_label);
    });
}

sdft_status sdft_soft2(const double* scores, size_t k, double* out) {
    return guarded([&] {
        require(out, "out");
        if (k > 0) require(scores, "scores");
        *out = sdft::experts::soft2({scores, k});
    });
}

sdft_status sdft_soft3(const double* scores, size_t k, int hard_label, double* out) {
    return guarded([&] {
        require(out, "out");
        if (k > 0) require(scores, "scores");
        *out = sdft::experts::soft3({scores, k}, hard_label);
    });
}

sdft_status sdft_symmetric_kl(const double* p, const double* q, size_t bins, double* out) {
    return guarded([&] {
        require(out, "out");
        if (bins > 0) {
            require(p, "p");
            require(q, "q");
        }
        *out = sdft::eval::symmetric_kl(std::span<const double>(p, bins),
                                        std::span<const double>(q, bins));
    });
}

sdft_status sdft_auprc(const double* scores, const int* labels, size_t n, double* out) {
    return guarded([&] {
        require(out, "out");
        if (n > 0) {
            require(scores, "scores");
            require(labels, "labels");
        }
        std::vector<sdft::eval::LabeledScore> samples(n);
        for (size_t i = 0; i < n; ++i) {
            if (labels[i] != 0 && labels[i] != 1) {
                sdft::fail(sdft::ErrorCode::kInvalidArgument, "labels must be 0 or 1");
            }
            samples[i] = {scores[i], labels[i] == 1};
        }
        *out = sdft::eval::pr_curve(samples).auprc;
    });
}

void sdft_world_defaults(sdft_world* world) {
    if (world == nullptr) return;
    const sdft::synth::SyntheticWorld w;
    *world = {w.groups,       w.train,          w.heldout,    w.dim,
              w.experts,      w.question_jitter, w.passage_jitter, w.expert_noise,
              w.base_noise,   w.base_anisotropy, w.seed};
}

void sdft_train_config_defaults(sdft_train_config* config) {
    if (config == nullptr) return;
    const sdft::adapter::TrainConfig c;
    config->lr = c.learning_rate;
    config->batch = c.batch_size;
    config->epochs = c.epochs;
    config->seed = c.seed;
    config->target = nullptr;
    config->optimizer = nullptr;
    config->normalize_output = c.normalize_output ? 1 : 0;
    config->out_dim = c.out_dim;
    config->init_noise = c.init_noise;
}

sdft_status sdft_synth(const sdft_world* world, const char* out_dir) {
    return guarded([&] {
        require(world, "world");
        sdft::pipeline::synth_stage(to_world(*world), str(out_dir, "out_dir"));
    });
}

sdft_status sdft_pairgen(const char* collection, const char* split, uint64_t seed, const char* out,
                         const char* collection_out, sdft_pair_counts* counts) {
    return guarded([&] {
        const auto stats = sdft::pipeline::pairgen_stage(
            str(collection, "collection"), str(split, "split"), seed, str(out, "out"),
            collection_out ? std::filesystem::path(collection_out) : std::filesystem::path{});
        if (counts != nullptr) {
            *counts = {stats.direct, stats.concat_left, stats.concat_right, stats.negative,
                       stats.total()};
        }
    });
}

sdft_status sdft_label(const char* pairs, const char* const* experts, size_t n_experts,
                       const char* out, const char* active_sets_out) {
    return guarded([&] {
        sdft::pipeline::label_stage(
            str(pairs, "pairs"), paths(experts, n_experts, "expert path"), str(out, "out"),
            active_sets_out ? std::filesystem::path(active_sets_out) : std::filesystem::path{});
    });
}

sdft_status sdft_train(const char* base, const char* labeled, const sdft_train_config* config,
                       const char* out, sdft_train_summary* summary) {
    return guarded([&] {
        require(config, "config");
        const auto report = sdft::pipeline::train_stage(str(base, "base"), str(labeled, "labeled"),
                                                        to_train_config(*config), str(out, "out"));
        if (summary != nullptr) {
            *summary = {report.initial_loss, report.final_loss, report.steps};
        }
    });
}

sdft_status sdft_eval_heldout(const char* base, const char* adapter, const char* split,
                              const char* model_name, size_t k, const char* out_dir) {
    namespace pl = sdft::pipeline;
    return guarded([&] {
        const std::string name = str(model_name, "model_name");
        const std::filesystem::path dir = str(out_dir, "out_dir");
        std::optional<std::filesystem::path> adapter_path;
        if (adapter != nullptr) adapter_path = adapter;
        const auto embeddings = pl::load_model_embeddings(str(base, "base"), adapter_path, name);
        const auto r = pl::evaluate_heldout(embeddings, sdft::load_split(str(split, "split")), k);
        const auto rows = pl::heldout_rows(r, name, k);
        sdft::write_file(dir / pl::kMetricsFile,
                         [&](std::ostream& os) { sdft::eval::write_metrics_csv(rows, os); });
        sdft::write_file(dir / pl::pr_curve_file(name),
                         [&](std::ostream& os) { sdft::eval::write_pr_csv(r.curve, os); });
        sdft::write_file(dir / pl::kQrelsFile,
                         [&](std::ostream& os) { sdft::eval::write_trec_qrels(r.qrels, os); });
        sdft::write_file(dir / pl::run_file(name),
                         [&](std::ostream& os) { sdft::eval::write_trec_run(r.run, name, os); });
    });
}

sdft_status sdft_eval_retrieval(const char* qrels, const char* const* run_paths,
                                const char* const* model_names, size_t n, const char* dataset,
                                size_t k, const char* out_dir) {
    return guarded([&] {
        if (n == 0) sdft::fail(sdft::ErrorCode::kInvalidArgument, "no runs given");
        require(run_paths, "run_paths");
        require(model_names, "model_names");
        std::vector<std::pair<std::string, std::filesystem::path>> runs;
        for (size_t i = 0; i < n; ++i) {
            runs.emplace_back(str(model_names[i], "model name"), str(run_paths[i], "run path"));
        }
        const auto rows = sdft::pipeline::retrieval_rows(str(qrels, "qrels"), runs,
                                                         str(dataset, "dataset"), k);
        sdft::write_file(std::filesystem::path(str(out_dir, "out_dir")) /
                             sdft::pipeline::kMetricsFile,
                         [&](std::ostream& os) { sdft::eval::write_metrics_csv(rows, os); });
    });
}

sdft_status sdft_aggregate(const char* const* metrics_csv, size_t n, const char* metric,
                           const char* out_csv) {
    return guarded([&] {
        std::vector<sdft::eval::MetricRow> rows;
        for (const auto& p : paths(metrics_csv, n, "metrics path")) {
            auto in = sdft::open_input(p, false);
            auto part = sdft::eval::read_metrics_csv(in);
            rows.insert(rows.end(), part.begin(), part.end());
        }
        const std::string m = str(metric, "metric");
        sdft::write_file(str(out_csv, "out_csv"), [&](std::ostream& os) {
            sdft::pipeline::write_aggregate_csv(rows, m, os);
        });
    });
}

sdft_status sdft_eval_dist(const char* collection, const char* base, const char* const* adapters,
                           const char* const* model_names, size_t n_models, size_t pairs,
                           uint64_t seed, size_t bins, const char* out_dir) {
    namespace pl = sdft::pipeline;
    return guarded([&] {
        if (n_models < 2) {
            sdft::fail(sdft::ErrorCode::kInvalidArgument, "distribution analysis needs >= 2 models");
        }
        require(model_names, "model_names");
        const auto texts = sdft::load_collection(str(collection, "collection"));
        std::vector<std::string> ids;
        for (const auto& item : texts.items()) ids.push_back(item.text_id);
        const std::string base_path = str(base, "base");
        std::vector<pl::DistModel> models;
        for (size_t i = 0; i < n_models; ++i) {
            const std::string name = str(model_names[i], "model name");
            std::optional<std::filesystem::path> adapter;
            if (adapters != nullptr && adapters[i] != nullptr) adapter = adapters[i];
            models.push_back({name, pl::load_model_embeddings(base_path, adapter, name)});
        }
        const auto rows = pl::distribution_kl(ids, models, pairs, seed, bins, -1.0, 1.0);
        sdft::write_file(std::filesystem::path(str(out_dir, "out_dir")) / pl::kKlFile,
                         [&](std::ostream& os) { pl::write_kl_csv(rows, bins, -1.0, 1.0, os); });
    });
}

void sdft_pipeline_config_defaults(sdft_pipeline_config* config) {
    if (config == nullptr) return;
    const sdft::pipeline::PipelineConfig c;
    std::memset(config, 0, sizeof(*config));
    sdft_world_defaults(&config->world);
    sdft_train_config_defaults(&config->train);
    config->k = c.k;
    config->bins = c.bins;
    config->dist_pairs = c.dist_pairs;
    config->seed = c.seed;
}

sdft_status sdft_pipeline(const sdft_pipeline_config* config) {
    return guarded([&] {
        require(config, "config");
        g_pipeline_auprc.clear();
        sdft::pipeline::PipelineConfig c;
        c.world = to_world(config->world);
        if (config->collection != nullptr) {
            c.collection = config->collection;
            c.split = str(config->split, "split");
            c.base = str(config->base, "base");
            c.experts = paths(config->experts, config->n_experts, "expert path");
        }
        c.train = to_train_config(config->train);
        c.targets = parse_targets(config->targets);
        c.k = config->k;
        c.bins = config->bins;
        c.dist_pairs = config->dist_pairs;
        c.seed = config->seed;
        c.out_dir = str(config->out_dir, "out_dir");
        const auto result = sdft::pipeline::run_pipeline(c);
        for (const auto& m : result.models) g_pipeline_auprc[m.name] = m.auprc;
    });
}

sdft_status sdft_pipeline_auprc(const char* model, double* out) {
    return guarded([&] {
        require(out, "out");
        const auto it = g_pipeline_auprc.find(str(model, "model"));
        if (it == g_pipeline_auprc.end()) {
            sdft::fail(sdft::ErrorCode::kInvalidArgument, "no pipeline result for this model");
        }
        *out = it->second;
    });
}

}  // extern "C"
