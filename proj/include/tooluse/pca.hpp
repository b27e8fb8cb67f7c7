#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "tooluse/errors.hpp"

namespace tooluse {

struct PcaModel {
    std::vector<double> mean;               // d
    std::vector<std::vector<double>> axes;  // d rows of length d, eigenvalue-descending
    std::vector<double> variances;          // d, non-increasing
};

namespace detail {

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues on the
// diagonal and accumulates eigenvectors as columns of V.
inline void jacobi_eigen(std::vector<double>& A, std::vector<double>& V, std::size_t d) {
    V.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) V[i * d + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += A[p * d + q] * A[p * d + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                const double apq = A[p * d + q];
                if (std::abs(apq) < 1e-30) continue;
                const double app = A[p * d + p], aqq = A[q * d + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = A[k * d + p], akq = A[k * d + q];
                    A[k * d + p] = c * akp - s * akq;
                    A[k * d + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = A[p * d + k], aqk = A[q * d + k];
                    A[p * d + k] = c * apk - s * aqk;
                    A[q * d + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = V[k * d + p], vkq = V[k * d + q];
                    V[k * d + p] = c * vkp - s * vkq;
                    V[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
}

}  // namespace detail

// Eigendecomposition of the sample covariance of the centered vectors.
// Axes are ordered by descending variance; the sign convention makes each
// axis' largest-magnitude component positive.
inline PcaModel fit_pca(const std::vector<std::vector<double>>& vectors) {
    if (vectors.size() < 2) throw dimension_error("fit_pca: need at least 2 vectors");
    const std::size_t n = vectors.size(), d = vectors[0].size();
    for (const auto& v : vectors) {
        if (v.size() != d) throw dimension_error("fit_pca: inconsistent vector dimensions");
    }
    PcaModel m;
    m.mean.assign(d, 0.0);
    for (const auto& v : vectors)
        for (std::size_t k = 0; k < d; ++k) m.mean[k] += v[k];
    for (double& v : m.mean) v /= static_cast<double>(n);

    std::vector<double> cov(d * d, 0.0);
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < d; ++i) {
            const double di = v[i] - m.mean[i];
            for (std::size_t j = i; j < d; ++j) cov[i * d + j] += di * (v[j] - m.mean[j]);
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] /= static_cast<double>(n - 1);
            cov[j * d + i] = cov[i * d + j];
        }
    double total_var = 0.0;
    for (std::size_t i = 0; i < d; ++i) total_var += cov[i * d + i];
    if (total_var < 1e-18) {
        throw dimension_error("fit_pca: degenerate variance (all vectors identical)");
    }

    std::vector<double> A = cov, V;
    detail::jacobi_eigen(A, V, d);
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> eig(d);
    for (std::size_t i = 0; i < d; ++i) eig[i] = A[i * d + i];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eig[a] > eig[b]; });
    m.axes.assign(d, std::vector<double>(d, 0.0));
    m.variances.assign(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        const std::size_t col = order[r];
        m.variances[r] = std::max(eig[col], 0.0);
        for (std::size_t k = 0; k < d; ++k) m.axes[r][k] = V[k * d + col];
        std::size_t arg = 0;
        for (std::size_t k = 1; k < d; ++k) {
            if (std::abs(m.axes[r][k]) > std::abs(m.axes[r][arg])) arg = k;
        }
        if (m.axes[r][arg] < 0.0) {
            for (double& v : m.axes[r]) v = -v;
        }
    }
    return m;
}

inline std::vector<double> pca_project(const PcaModel& m, const std::vector<double>& v) {
    std::vector<double> out(m.axes.size(), 0.0);
    for (std::size_t r = 0; r < m.axes.size(); ++r) {
        double acc = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) acc += m.axes[r][k] * (v[k] - m.mean[k]);
        out[r] = acc;
    }
    return out;
}

inline std::vector<double> pca_reconstruct(const PcaModel& m, const std::vector<double>& coords) {
    std::vector<double> out = m.mean;
    for (std::size_t r = 0; r < coords.size(); ++r) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += coords[r] * m.axes[r][k];
    }
    return out;
}

struct SeparationReport {
    double nearest_centroid_accuracy = 0.0;
    std::optional<double> silhouette;  // empty when any label has a single point
    std::size_t n_labels = 0;
};

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

// Nearest-centroid self-classification accuracy plus the mean silhouette
// score over the labeled points.
inline SeparationReport cluster_separation(const std::vector<std::vector<double>>& points,
                                           const std::vector<int>& labels) {
    if (points.size() != labels.size() || points.empty()) {
        throw dimension_error("cluster_separation: points/labels size mismatch");
    }
    std::vector<int> unique = labels;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    if (unique.size() < 2) throw dimension_error("cluster_separation: need at least 2 labels");
    SeparationReport rep;
    rep.n_labels = unique.size();

    const std::size_t d = points[0].size();
    std::vector<std::vector<double>> centroids(unique.size(), std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(unique.size(), 0);
    auto label_index = [&](int lab) {
        return static_cast<std::size_t>(
            std::lower_bound(unique.begin(), unique.end(), lab) - unique.begin());
    };
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::size_t li = label_index(labels[i]);
        counts[li]++;
        for (std::size_t k = 0; k < d; ++k) centroids[li][k] += points[i][k];
    }
    for (std::size_t l = 0; l < unique.size(); ++l) {
        for (double& v : centroids[l]) v /= static_cast<double>(counts[l]);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::size_t best = 0;
        double best_d = euclidean(points[i], centroids[0]);
        for (std::size_t l = 1; l < unique.size(); ++l) {
            const double dist = euclidean(points[i], centroids[l]);
            if (dist < best_d) {
                best_d = dist;
                best = l;
            }
        }
        if (best == label_index(labels[i])) correct++;
    }
    rep.nearest_centroid_accuracy = static_cast<double>(correct) / static_cast<double>(points.size());

    const bool single = std::any_of(counts.begin(), counts.end(),
                                    [](std::size_t c) { return c < 2; });
    if (!single) {
        double sum = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t own = label_index(labels[i]);
            double a = 0.0;
            std::vector<double> mean_other(unique.size(), 0.0);
            std::vector<std::size_t> n_other(unique.size(), 0);
            for (std::size_t j = 0; j < points.size(); ++j) {
                if (i == j) continue;
                const std::size_t lj = label_index(labels[j]);
                const double dist = euclidean(points[i], points[j]);
                if (lj == own) {
                    a += dist;
                } else {
                    mean_other[lj] += dist;
                    n_other[lj]++;
                }
            }
            a /= static_cast<double>(counts[own] - 1);
            double b = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < unique.size(); ++l) {
                if (l == own || n_other[l] == 0) continue;
                b = std::min(b, mean_other[l] / static_cast<double>(n_other[l]));
            }
            const double denom = std::max(a, b);
            sum += denom > 0.0 ? (b - a) / denom : 0.0;
        }
        rep.silhouette = sum / static_cast<double>(points.size());
    }
    return rep;
}

}  // namespace tooluse
