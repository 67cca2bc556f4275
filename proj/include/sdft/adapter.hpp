// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

/** \file adapter.hpp
 *  \brief Linear adapter over frozen base embeddings, trained with the MSE
 *         contrastive objective mean((f(q)^T f(p) - target)^2).
 *
 * f(x) = W^T x, optionally L2-normalized, with W of shape d_in x d_out.
 * The target is the hard label or one of the expert-derived soft labels;
 * nothing else in the training path depends on which one is used.
 */

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sdft/corpus.hpp"

namespace sdft::adapter {

enum class TargetKind { kHard, kSoft1, kSoft2, kSoft3 };
enum class OptimizerKind { kSgd, kAdam };

std::string_view to_string(TargetKind kind) noexcept;
std::string_view to_string(OptimizerKind kind) noexcept;
/// Throws kInvalidArgument on unknown names.
TargetKind parse_target_kind(std::string_view name);
OptimizerKind parse_optimizer_kind(std::string_view name);

/// The regression target of a labeled pair for the given kind.
/// Throws kSoftLabel when the requested soft label was never assigned.
double target_of(const LabeledPair& pair, TargetKind kind);

struct AdapterModel {
    Eigen::MatrixXd weights;  // d_in x d_out
    bool normalize_output = true;
    std::string base_model_id;

    std::size_t d_in() const { return static_cast<std::size_t>(weights.rows()); }
    std::size_t d_out() const { return static_cast<std::size_t>(weights.cols()); }

    /// f(x). Throws kDimension on length mismatch, kCollapsedEmbedding when
    /// normalizing a zero projection.
    Eigen::VectorXd project(std::span<const float> x) const;

    /// f(q)^T f(p).
    double similarity(std::span<const float> q, std::span<const float> p) const;
};

struct TrainingExample {
    std::span<const float> query;
    std::span<const float> passage;
    double target = 0.0;
};

/// Mean squared error over the batch.
double loss(const AdapterModel& model, std::span<const TrainingExample> batch);

/// Analytic d loss / d W, including the normalization Jacobian.
Eigen::MatrixXd gradient(const AdapterModel& model, std::span<const TrainingExample> batch);

std::pair<double, Eigen::MatrixXd> loss_and_gradient(const AdapterModel& model,
                                                     std::span<const TrainingExample> batch);

struct TrainConfig {
    double learning_rate = 3e-5;
    std::size_t batch_size = 64;
    std::size_t epochs = 2;
    std::uint64_t seed = 0;
    TargetKind target_kind = TargetKind::kSoft1;
    OptimizerKind optimizer = OptimizerKind::kAdam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool normalize_output = true;
    std::size_t out_dim = 0;  // 0: same as the base dim
    double init_noise = 0.01;

    /// learning_rate >= 0 (0 allowed as a null update), batch_size >= 1, epochs >= 1.
    void validate() const;
};

struct TrainReport {
    double initial_loss = 0.0;         // full dataset, before the first step
    std::vector<double> epoch_losses;  // mean of per-batch losses weighted by batch size
    double final_loss = 0.0;           // full dataset, after the last step
    std::size_t steps = 0;
    double wall_seconds = 0.0;
    TrainConfig config;
};

struct TrainResult {
    AdapterModel model;
    TrainReport report;
};

/// Identity (truncated when d_in != d_out) plus seeded Gaussian noise.
AdapterModel initial_adapter(std::size_t d_in, const TrainConfig& config,
                             std::string base_model_id = {});

/// Seeded mini-batch training; the last partial batch is kept.
/// Throws kEmptyInput on an empty dataset and kDiverged ("diverged at step N")
/// on a non-finite loss or weight.
TrainResult train(const EmbeddingMatrix& base, std::span<const LabeledPair> pairs,
                  const TrainConfig& config);

/// Rows of f(x) for every row of `base`, in the same order.
EmbeddingMatrix apply_adapter(const AdapterModel& model, const EmbeddingMatrix& base,
                              std::string model_id);

/// Checkpoint: the matrix file with rows `w_<i>` plus `<path>.json` sidecar.
void save_adapter(const AdapterModel& model, const std::optional<TrainReport>& report,
                  const std::filesystem::path& path);
AdapterModel load_adapter(const std::filesystem::path& path);

}  // namespace sdft::adapter
