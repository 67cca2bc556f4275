// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#include "sdft/synth.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include <Eigen/Dense>

#include "sdft/error.hpp"
#include "sdft/pairgen.hpp"
#include "sdft/random.hpp"

namespace sdft::synth {

namespace {

Eigen::VectorXd gaussian(Rng& rng, std::size_t dim) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z[i] = rng.normal();
    }
    return z;
}

Eigen::MatrixXd random_orthogonal(Rng& rng, std::size_t dim) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            g(i, j) = rng.normal();
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Sign convention from R's diagonal makes the draw Haar-distributed.
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        if (r(j, j) < 0.0) {
            q.col(j) *= -1.0;
        }
    }
    return q;
}

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
    const double n = v.norm();
    if (n == 0.0) {
        fail(ErrorCode::kDegenerateVector, "degenerate vector in synthetic world");
    }
    return v / n;
}

Eigen::VectorXd jittered(const Eigen::VectorXd& center, double sigma, Rng& rng) {
    const double scale = sigma / std::sqrt(static_cast<double>(center.size()));
    return unit(center + scale * gaussian(rng, static_cast<std::size_t>(center.size())));
}

void add_row(EmbeddingMatrix& m, const std::string& id, const Eigen::VectorXd& v) {
    std::vector<float> row(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        row[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
    }
    m.add_row(id, row);
}

}  // namespace

void SyntheticWorld::validate() const {
    if (groups < 2) fail(ErrorCode::kInvalidArgument, "synthetic world needs G >= 2 groups");
    if (train < 1) fail(ErrorCode::kInvalidArgument, "synthetic world needs T >= 1");
    if (experts < 1) fail(ErrorCode::kInvalidArgument, "synthetic world needs K >= 1 experts");
    if (dim < groups) {
        fail(ErrorCode::kDimension, "dim " + std::to_string(dim) + " < G " +
                                        std::to_string(groups) + ": cannot separate centroids");
    }
    for (const double s : {question_jitter, passage_jitter, expert_noise, base_noise,
                           base_anisotropy}) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            fail(ErrorCode::kInvalidArgument, "synthetic noise levels must be finite and >= 0");
        }
    }
}

SyntheticData generate(const SyntheticWorld& world) {
    world.validate();
    const std::size_t d = world.dim;

    SyntheticData data{{}, {}, EmbeddingMatrix("truth", d), EmbeddingMatrix("base", d), {}};

    Rng centroid_rng(derive_seed(world.seed, "synth.centroids"));
    const Eigen::MatrixXd basis = random_orthogonal(centroid_rng, d);

    // Ground-truth vectors, in collection order.
    Rng truth_rng(derive_seed(world.seed, "synth.truth"));
    std::vector<std::pair<std::string, Eigen::VectorXd>> truth;
    for (std::size_t g = 0; g < world.groups; ++g) {
        const Eigen::VectorXd centroid = basis.col(static_cast<Eigen::Index>(g));
        GroupSplit gs;
        gs.group_id = static_cast<std::int64_t>(g);
        const std::string prefix = "g" + std::to_string(g);
        for (std::size_t i = 0; i < world.train + world.heldout; ++i) {
            std::string id = prefix + "_q" + std::to_string(i);
            data.collection.add({id,
                                 "Question " + std::to_string(i) + " about topic " +
                                     std::to_string(g) + "?",
                                 gs.group_id});
            truth.emplace_back(id, jittered(centroid, world.question_jitter, truth_rng));
            (i < world.train ? gs.train : gs.heldout).push_back(std::move(id));
        }
        gs.passage_id = prefix + "_passage";
        data.collection.add({gs.passage_id, "Answer for topic " + std::to_string(g) + ".",
                             gs.group_id});
        truth.emplace_back(gs.passage_id, jittered(centroid, world.passage_jitter, truth_rng));
        data.split.groups.push_back(std::move(gs));
    }

    // Concatenations embed as the normalized sum of their parts.
    {
        std::unordered_map<std::string, std::size_t> at;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            at.emplace(truth[i].first, i);
        }
        for (const auto& gs : data.split.groups) {
            for (const auto& a : gs.train) {
                for (const auto& b : gs.train) {
                    truth.emplace_back(pairgen::concat_id(a, b),
                                       unit(truth[at.at(a)].second + truth[at.at(b)].second));
                }
            }
        }
    }
    for (const auto& [id, v] : truth) {
        add_row(data.truth, id, v);
    }

    const double noise_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t k = 0; k < world.experts; ++k) {
        Rng rng(derive_seed(world.seed, "synth.expert", k));
        const Eigen::MatrixXd rotation = random_orthogonal(rng, d);
        EmbeddingMatrix expert("expert_" + std::to_string(k), d);
        for (const auto& [id, v] : truth) {
            Eigen::VectorXd e = rotation * v;
            if (world.expert_noise > 0.0) {
                e += world.expert_noise * noise_scale * gaussian(rng, d);
            }
            add_row(expert, id, unit(e));
        }
        data.experts.push_back(std::move(expert));
    }

    {
        Rng rng(derive_seed(world.seed, "synth.base"));
        const Eigen::MatrixXd rotation = random_orthogonal(rng, d);
        const Eigen::VectorXd shared = unit(gaussian(rng, d));
        for (const auto& [id, v] : truth) {
            Eigen::VectorXd e = rotation * v + world.base_anisotropy * shared;
            if (world.base_noise > 0.0) {
                e += world.base_noise * noise_scale * gaussian(rng, d);
            }
            add_row(data.base, id, unit(e));
        }
    }
    return data;
}

void save(const SyntheticData& data, const std::filesystem::path& dir) {
    save_collection(data.collection, dir / "collection.jsonl");
    save_split(data.split, dir / "split.json");
    save_matrix(data.truth, dir / "truth.bin");
    save_matrix(data.base, dir / "base.bin");
    for (const auto& expert : data.experts) {
        save_matrix(expert, dir / (expert.model_id() + ".bin"));
    }
}

}  // namespace sdft::synth
