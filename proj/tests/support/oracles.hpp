// Copyright (C) 2026 The sdft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference implementations used by the tests. Each one recomputes a quantity
// straight from its definition with plain loops and shares no code with the
// library beyond input types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double cosine(const std::vector<float>& u, const std::vector<float>& v) {
    long double uv = 0.0L, uu = 0.0L, vv = 0.0L;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += static_cast<long double>(u[i]) * v[i];
        uu += static_cast<long double>(u[i]) * u[i];
        vv += static_cast<long double>(v[i]) * v[i];
    }
    return static_cast<double>(uv / (std::sqrt(uu) * std::sqrt(vv)));
}

// ---------------------------------------------------------------------------
// Soft labels

inline double sequential_mean(const std::vector<double>& s) {
    double sum = 0.0;
    for (double x : s) sum += x;
    return sum / static_cast<double>(s.size());
}

inline double soft1(std::vector<double> s, int y) {
    std::sort(s.begin(), s.end());
    return y == 1 ? s.back() : s.front();
}

inline double soft3(std::vector<double> s, int y) {
    std::sort(s.begin(), s.end());
    const std::size_t n = s.size();
    return y == 1 ? (s[n - 1] + s[n - 2]) / 2.0 : (s[0] + s[1]) / 2.0;
}

// ---------------------------------------------------------------------------
// Adapter loss: W is d_in x d_out, row-major nested vectors.

using Matrix = std::vector<std::vector<double>>;

inline std::vector<double> project(const Matrix& w, const std::vector<float>& x, bool normalize) {
    const std::size_t d_out = w.front().size();
    std::vector<double> y(d_out, 0.0);
    for (std::size_t j = 0; j < d_out; ++j) {
        for (std::size_t i = 0; i < x.size(); ++i) y[j] += w[i][j] * static_cast<double>(x[i]);
    }
    if (normalize) {
        const double n = std::sqrt(dot(y, y));
        for (double& v : y) v /= n;
    }
    return y;
}

struct Example {
    std::vector<float> q;
    std::vector<float> p;
    double target;
};

inline double mse_loss(const Matrix& w, const std::vector<Example>& batch, bool normalize) {
    double sum = 0.0;
    for (const auto& ex : batch) {
        const double s = dot(project(w, ex.q, normalize), project(w, ex.p, normalize));
        sum += (s - ex.target) * (s - ex.target);
    }
    return sum / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Ranked metrics from the textbook definitions. `scores` maps passage -> score;
// the ranking orders by score descending, then passage id ascending.

inline std::vector<std::string> rank(const std::map<std::string, double>& scores) {
    std::vector<std::pair<std::string, double>> v(scores.begin(), scores.end());
    // Selection sort: pick the best remaining candidate at every position.
    std::vector<std::string> order;
    std::vector<bool> used(v.size(), false);
    for (std::size_t pos = 0; pos < v.size(); ++pos) {
        std::size_t best = v.size();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (used[i]) continue;
            if (best == v.size() || v[i].second > v[best].second ||
                (v[i].second == v[best].second && v[i].first < v[best].first)) {
                best = i;
            }
        }
        used[best] = true;
        order.push_back(v[best].first);
    }
    return order;
}

inline double ndcg(const std::vector<std::string>& ranking, const std::set<std::string>& rel,
                   std::size_t k) {
    double dcg = 0.0;
    for (std::size_t i = 1; i <= k && i <= ranking.size(); ++i) {
        const double gain = rel.count(ranking[i - 1]) ? 1.0 : 0.0;
        if (gain > 0.0) dcg += gain / std::log2(static_cast<double>(i) + 1.0);
    }
    double idcg = 0.0;
    for (std::size_t i = 1; i <= k && i <= rel.size(); ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i) + 1.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

inline double average_precision(const std::vector<std::string>& ranking,
                                const std::set<std::string>& rel, std::size_t k) {
    double sum = 0.0;
    for (std::size_t i = 1; i <= k && i <= ranking.size(); ++i) {
        if (!rel.count(ranking[i - 1])) continue;
        std::size_t hits = 0;
        for (std::size_t j = 1; j <= i; ++j) hits += rel.count(ranking[j - 1]);
        sum += static_cast<double>(hits) / static_cast<double>(i);
    }
    const std::size_t denom = std::min(rel.size(), k);
    return denom ? sum / static_cast<double>(denom) : 0.0;
}

inline double reciprocal_rank(const std::vector<std::string>& ranking,
                              const std::set<std::string>& rel, std::size_t k) {
    for (std::size_t i = 1; i <= k && i <= ranking.size(); ++i) {
        if (rel.count(ranking[i - 1])) return 1.0 / static_cast<double>(i);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Confusion matrix at a threshold (predict positive when score >= t).

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Confusion confusion(const std::vector<std::pair<double, bool>>& samples, double t) {
    Confusion c;
    for (const auto& [score, positive] : samples) {
        const bool predicted = score >= t;
        if (predicted && positive) ++c.tp;
        else if (predicted) ++c.fp;
        else if (positive) ++c.fn;
        else ++c.tn;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Pairs: 3 T^2 positives per group, doubled by negatives.

inline std::size_t pair_count(const std::vector<std::size_t>& train_sizes) {
    std::size_t total = 0;
    for (std::size_t t : train_sizes) total += 6 * t * t;
    return total;
}

}  // namespace oracle
