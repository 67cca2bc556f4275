// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/adapter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "sdft/error.hpp"
#include "sdft/fileio.hpp"
#include "sdft/random.hpp"

namespace sdft::adapter {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Eigen::VectorXd to_eigen(std::span<const float> x) {
    return Eigen::Map<const Eigen::VectorXf>(x.data(), static_cast<Eigen::Index>(x.size()))
        .cast<double>();
}

struct Forward {
    Eigen::VectorXd u;  // W^T q
    Eigen::VectorXd v;  // W^T p
    double u_norm = 1.0;
    double v_norm = 1.0;
    double similarity = 0.0;
};

Forward forward(const AdapterModel& model, const TrainingExample& ex) {
    if (ex.query.size() != model.d_in() || ex.passage.size() != model.d_in()) {
        fail(ErrorCode::kDimension, "example vectors have dim " + std::to_string(ex.query.size()) +
                                        "/" + std::to_string(ex.passage.size()) +
                                        ", adapter expects " + std::to_string(model.d_in()));
    }
    if (!std::isfinite(ex.target)) {
        fail(ErrorCode::kNonFinite, "non-finite training target");
    }
    Forward f;
    f.u = model.weights.transpose() * to_eigen(ex.query);
    f.v = model.weights.transpose() * to_eigen(ex.passage);
    if (model.normalize_output) {
        f.u_norm = f.u.norm();
        f.v_norm = f.v.norm();
        if (f.u_norm == 0.0 || f.v_norm == 0.0) {
            fail(ErrorCode::kCollapsedEmbedding, "collapsed embedding");
        }
        f.similarity = f.u.dot(f.v) / (f.u_norm * f.v_norm);
    } else {
        f.similarity = f.u.dot(f.v);
    }
    return f;
}

ordered_json config_to_json(const TrainConfig& c) {
    ordered_json j;
    j["learning_rate"] = c.learning_rate;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["seed"] = c.seed;
    j["target"] = to_string(c.target_kind);
    j["optimizer"] = to_string(c.optimizer);
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["epsilon"] = c.epsilon;
    j["normalize_output"] = c.normalize_output;
    j["out_dim"] = c.out_dim;
    j["init_noise"] = c.init_noise;
    return j;
}

}  // namespace

std::string_view to_string(TargetKind kind) noexcept {
    switch (kind) {
        case TargetKind::kHard:
            return "hard";
        case TargetKind::kSoft1:
            return "soft1";
        case TargetKind::kSoft2:
            return "soft2";
        case TargetKind::kSoft3:
            return "soft3";
    }
    return "unknown";
}

std::string_view to_string(OptimizerKind kind) noexcept {
    return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

TargetKind parse_target_kind(std::string_view name) {
    for (auto kind : {TargetKind::kHard, TargetKind::kSoft1, TargetKind::kSoft2,
                      TargetKind::kSoft3}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    fail(ErrorCode::kInvalidArgument, "unknown target kind '" + std::string(name) +
                                          "' (expected hard, soft1, soft2 or soft3)");
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
    if (name == "sgd") return OptimizerKind::kSgd;
    if (name == "adam") return OptimizerKind::kAdam;
    fail(ErrorCode::kInvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

double target_of(const LabeledPair& pair, TargetKind kind) {
    const std::optional<double>* soft = nullptr;
    switch (kind) {
        case TargetKind::kHard:
            return static_cast<double>(pair.pair.hard_label);
        case TargetKind::kSoft1:
            soft = &pair.soft1;
            break;
        case TargetKind::kSoft2:
            soft = &pair.soft2;
            break;
        case TargetKind::kSoft3:
            soft = &pair.soft3;
            break;
    }
    if (soft == nullptr || !soft->has_value()) {
        fail(ErrorCode::kSoftLabel, std::string(to_string(kind)) + " label missing for pair (" +
                                        pair.pair.query_id + ", " + pair.pair.passage_id +
                                        "); run the label stage first");
    }
    return **soft;
}

Eigen::VectorXd AdapterModel::project(std::span<const float> x) const {
    if (x.size() != d_in()) {
        fail(ErrorCode::kDimension, "vector has dim " + std::to_string(x.size()) +
                                        ", adapter expects " + std::to_string(d_in()));
    }
    Eigen::VectorXd y = weights.transpose() * to_eigen(x);
    if (normalize_output) {
        const double n = y.norm();
        if (n == 0.0) {
            fail(ErrorCode::kCollapsedEmbedding, "collapsed embedding");
        }
        y /= n;
    }
    return y;
}

double AdapterModel::similarity(std::span<const float> q, std::span<const float> p) const {
    return forward(*this, {q, p, 0.0}).similarity;
}

double loss(const AdapterModel& model, std::span<const TrainingExample> batch) {
    if (batch.empty()) {
        fail(ErrorCode::kEmptyInput, "loss of an empty batch");
    }
    double sum = 0.0;
    for (const auto& ex : batch) {
        const double r = forward(model, ex).similarity - ex.target;
        sum += r * r;
    }
    return sum / static_cast<double>(batch.size());
}

std::pair<double, Eigen::MatrixXd> loss_and_gradient(const AdapterModel& model,
                                                     std::span<const TrainingExample> batch) {
    if (batch.empty()) {
        fail(ErrorCode::kEmptyInput, "gradient of an empty batch");
    }
    const double n = static_cast<double>(batch.size());
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
    double sum = 0.0;
    for (const auto& ex : batch) {
        const Forward f = forward(model, ex);
        const double r = f.similarity - ex.target;
        sum += r * r;
        // d s / d u and d s / d v
        Eigen::VectorXd gu;
        Eigen::VectorXd gv;
        if (model.normalize_output) {
            const Eigen::VectorXd a = f.u / f.u_norm;
            const Eigen::VectorXd b = f.v / f.v_norm;
            gu = (b - f.similarity * a) / f.u_norm;
            gv = (a - f.similarity * b) / f.v_norm;
        } else {
            gu = f.v;
            gv = f.u;
        }
        const double coef = 2.0 * r / n;
        grad.noalias() += coef * (to_eigen(ex.query) * gu.transpose());
        grad.noalias() += coef * (to_eigen(ex.passage) * gv.transpose());
    }
    return {sum / n, std::move(grad)};
}

Eigen::MatrixXd gradient(const AdapterModel& model, std::span<const TrainingExample> batch) {
    return loss_and_gradient(model, batch).second;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        fail(ErrorCode::kInvalidArgument, "learning_rate must be finite and >= 0");
    }
    if (batch_size < 1) {
        fail(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
    }
    if (epochs < 1) {
        fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
    }
    if (!(init_noise >= 0.0)) {
        fail(ErrorCode::kInvalidArgument, "init_noise must be >= 0");
    }
    if (optimizer == OptimizerKind::kAdam &&
        !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
        fail(ErrorCode::kInvalidArgument, "invalid Adam hyper-parameters");
    }
}

AdapterModel initial_adapter(std::size_t d_in, const TrainConfig& config,
                             std::string base_model_id) {
    const std::size_t d_out = config.out_dim == 0 ? d_in : config.out_dim;
    AdapterModel model;
    model.normalize_output = config.normalize_output;
    model.base_model_id = std::move(base_model_id);
    model.weights = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d_in),
                                              static_cast<Eigen::Index>(d_out));
    Rng rng(derive_seed(config.seed, "train.init"));
    for (Eigen::Index i = 0; i < model.weights.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.weights.cols(); ++j) {
            model.weights(i, j) += config.init_noise * rng.normal();
        }
    }
    return model;
}

TrainResult train(const EmbeddingMatrix& base, std::span<const LabeledPair> pairs,
                  const TrainConfig& config) {
    config.validate();
    if (pairs.empty()) {
        fail(ErrorCode::kEmptyInput, "cannot train on an empty dataset");
    }
    const auto started = std::chrono::steady_clock::now();

    std::vector<TrainingExample> examples;
    examples.reserve(pairs.size());
    for (const auto& lp : pairs) {
        examples.push_back(
            {base.row(lp.pair.query_id), base.row(lp.pair.passage_id), target_of(lp, config.target_kind)});
    }

    TrainResult result;
    result.model = initial_adapter(base.dim(), config, base.model_id());
    auto& model = result.model;
    auto& report = result.report;
    report.config = config;
    report.initial_loss = loss(model, examples);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
    Eigen::MatrixXd v = m;
    std::vector<std::size_t> order(examples.size());
    std::vector<TrainingExample> batch;
    batch.reserve(config.batch_size);
    Rng shuffler(derive_seed(config.seed, "train.shuffle"));

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffler.shuffle(order.begin(), order.end());
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(examples[order[i]]);
            }
            auto [batch_loss, grad] = loss_and_gradient(model, batch);
            ++report.steps;
            if (!std::isfinite(batch_loss) || !grad.allFinite()) {
                fail(ErrorCode::kDiverged, "diverged at step " + std::to_string(report.steps));
            }
            weighted += batch_loss * static_cast<double>(batch.size());

            if (config.optimizer == OptimizerKind::kSgd) {
                model.weights -= config.learning_rate * grad;
            } else {
                const double t = static_cast<double>(report.steps);
                m = config.beta1 * m + (1.0 - config.beta1) * grad;
                v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
                const double c1 = 1.0 - std::pow(config.beta1, t);
                const double c2 = 1.0 - std::pow(config.beta2, t);
                model.weights.array() -=
                    config.learning_rate * (m.array() / c1) /
                    ((v.array() / c2).sqrt() + config.epsilon);
            }
            if (!model.weights.allFinite()) {
                fail(ErrorCode::kDiverged, "diverged at step " + std::to_string(report.steps));
            }
        }
        report.epoch_losses.push_back(weighted / static_cast<double>(order.size()));
    }
    report.final_loss = loss(model, examples);
    if (!std::isfinite(report.final_loss)) {
        fail(ErrorCode::kDiverged, "diverged at step " + std::to_string(report.steps));
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

EmbeddingMatrix apply_adapter(const AdapterModel& model, const EmbeddingMatrix& base,
                              std::string model_id) {
    EmbeddingMatrix out(std::move(model_id), model.d_out());
    std::vector<float> row(model.d_out());
    for (std::size_t r = 0; r < base.rows(); ++r) {
        const Eigen::VectorXd y = model.project(base.row_at(r));
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = static_cast<float>(y[static_cast<Eigen::Index>(j)]);
        }
        out.add_row(base.id_at(r), row);
    }
    return out;
}

void save_adapter(const AdapterModel& model, const std::optional<TrainReport>& report,
                  const std::filesystem::path& path) {
    EmbeddingMatrix rows(model.base_model_id.empty() ? "adapter" : model.base_model_id,
                         model.d_out());
    std::vector<float> row(model.d_out());
    for (std::size_t i = 0; i < model.d_in(); ++i) {
        for (std::size_t j = 0; j < model.d_out(); ++j) {
            row[j] = static_cast<float>(
                model.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        rows.add_row("w_" + std::to_string(i), row);
    }

    ordered_json side;
    side["format"] = "sdft-adapter";
    side["base_model_id"] = model.base_model_id;
    side["d_in"] = model.d_in();
    side["d_out"] = model.d_out();
    side["normalize_output"] = model.normalize_output;
    if (report) {
        side["config"] = config_to_json(report->config);
        ordered_json r;
        r["initial_loss"] = report->initial_loss;
        r["epoch_losses"] = report->epoch_losses;
        r["final_loss"] = report->final_loss;
        r["steps"] = report->steps;
        side["report"] = std::move(r);
    }
    auto sidecar = path;
    sidecar += ".json";
    save_matrix(rows, path);
    write_file(sidecar, [&](std::ostream& out) { out << side.dump(2) << '\n'; });
}

AdapterModel load_adapter(const std::filesystem::path& path) {
    const auto rows = load_matrix(path);
    auto sidecar = path;
    sidecar += ".json";
    json side;
    {
        auto in = open_input(sidecar);
        try {
            side = json::parse(in);
        } catch (const json::exception& e) {
            fail(ErrorCode::kParse, sidecar.string() + ": " + e.what());
        }
    }
    AdapterModel model;
    try {
        model.base_model_id = side.value("base_model_id", std::string{});
        model.normalize_output = side.at("normalize_output").get<bool>();
        const auto d_in = side.at("d_in").get<std::size_t>();
        const auto d_out = side.at("d_out").get<std::size_t>();
        if (d_in != rows.rows() || d_out != rows.dim()) {
            fail(ErrorCode::kDimension, path.string() + ": sidecar shape does not match weights");
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::kParse, sidecar.string() + ": " + e.what());
    }
    model.weights.resize(static_cast<Eigen::Index>(rows.rows()),
                         static_cast<Eigen::Index>(rows.dim()));
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto r = rows.row("w_" + std::to_string(i));
        for (std::size_t j = 0; j < r.size(); ++j) {
            model.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
        }
    }
    return model;
}

}  // namespace sdft::adapter
