#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "classgen/errors.hpp"

namespace classgen {

enum class MiCorrection { none, miller_madow };

/// Empirical joint of a mask bit u in {-1,+1} against a discrete code v.
/// Counts are kept per v-code in two columns (u = -1 and u = +1).
class JointCounts {
public:
    void add(int u, int v, std::uint64_t count = 1) {
        if (u != -1 && u != +1) throw std::invalid_argument("JointCounts: u must be -1 or +1");
        auto& cell = table_[v];
        cell[u == +1 ? 1 : 0] += count;
        total_ += count;
    }

    std::uint64_t total() const { return total_; }
    const std::map<int, std::array<std::uint64_t, 2>>& table() const { return table_; }

private:
    std::map<int, std::array<std::uint64_t, 2>> table_;
    std::uint64_t total_ = 0;
};

/// Joint pmf over (u, v) with u in {-1,+1} and v in 0..num_v-1.
/// Row 0 holds u = -1, row 1 holds u = +1.
struct JointPmf {
    std::vector<double> p_minus;
    std::vector<double> p_plus;

    std::size_t num_v() const { return p_minus.size(); }

    void validate() const {
        if (p_minus.size() != p_plus.size())
            throw std::invalid_argument("JointPmf: row length mismatch");
        double total = 0.0;
        for (double p : p_minus) {
            if (p < 0.0) throw std::invalid_argument("JointPmf: negative probability");
            total += p;
        }
        for (double p : p_plus) {
            if (p < 0.0) throw std::invalid_argument("JointPmf: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("JointPmf: not normalized (sum = " + std::to_string(total) + ")");
    }
};

/// Plug-in mutual information of the empirical joint, in nats.
///
/// 0 log 0 := 0. The Miller-Madow variant subtracts the first-order bias
/// (|supp u|-1)(|supp v|-1)/(2 total) of the plug-in estimate. The result is
/// clamped to >= 0.
inline double plugin_mi(const JointCounts& counts, MiCorrection correction = MiCorrection::none) {
    const std::uint64_t total = counts.total();
    if (total == 0) throw std::invalid_argument("plugin_mi: total count is zero");

    std::uint64_t cu[2] = {0, 0};
    for (const auto& [v, cell] : counts.table()) {
        cu[0] += cell[0];
        cu[1] += cell[1];
    }
    const double n = static_cast<double>(total);
    double mi = 0.0;
    std::size_t support_v = 0;
    for (const auto& [v, cell] : counts.table()) {
        const std::uint64_t cv = cell[0] + cell[1];
        if (cv == 0) continue;
        ++support_v;
        for (int r = 0; r < 2; ++r) {
            const std::uint64_t cuv = cell[r];
            if (cuv == 0 || cu[r] == 0) continue;
            const double ratio = (static_cast<double>(cuv) * n) /
                                 (static_cast<double>(cu[r]) * static_cast<double>(cv));
            mi += (static_cast<double>(cuv) / n) * std::log(ratio);
        }
    }
    if (correction == MiCorrection::miller_madow) {
        const std::size_t support_u = (cu[0] > 0 ? 1 : 0) + (cu[1] > 0 ? 1 : 0);
        mi -= static_cast<double>((support_u - 1) * (support_v - 1)) / (2.0 * n);
    }
    return std::max(mi, 0.0);
}

/// Exact mutual information of a joint pmf, in nats.
inline double exact_mi(const JointPmf& pmf) {
    pmf.validate();
    const std::size_t nv = pmf.num_v();
    double pu[2] = {0.0, 0.0};
    std::vector<double> pv(nv, 0.0);
    for (std::size_t v = 0; v < nv; ++v) {
        pu[0] += pmf.p_minus[v];
        pu[1] += pmf.p_plus[v];
        pv[v] = pmf.p_minus[v] + pmf.p_plus[v];
    }
    double mi = 0.0;
    for (std::size_t v = 0; v < nv; ++v) {
        for (int r = 0; r < 2; ++r) {
            const double p = (r == 0) ? pmf.p_minus[v] : pmf.p_plus[v];
            if (p <= 0.0) continue;
            mi += p * std::log(p / (pu[r] * pv[v]));
        }
    }
    return std::max(mi, 0.0);
}

/// KL divergence sum p log(p/q) in nats over a shared support index set.
/// Throws DivergenceInfinite when p(x) > 0 while q(x) = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw std::invalid_argument("kl_divergence: support index sets differ in size");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0)
            throw std::invalid_argument("kl_divergence: negative probability");
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0)
            throw DivergenceInfinite("kl_divergence: p has mass at index " + std::to_string(i) +
                                     " where q has none");
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

inline double kl_divergence(const JointPmf& p, const JointPmf& q) {
    p.validate();
    q.validate();
    if (p.num_v() != q.num_v())
        throw std::invalid_argument("kl_divergence: support index sets differ");
    double kl = kl_divergence(std::span<const double>(p.p_minus), std::span<const double>(q.p_minus));
    kl += kl_divergence(std::span<const double>(p.p_plus), std::span<const double>(q.p_plus));
    return kl;
}

/// Quantizes samples from [-1,1] into `bins` uniform bins, codes 0..bins-1.
/// The boundary value +1 maps to the last bin. Values outside [-1,1] by more
/// than 1e-9 are rejected; values inside the tolerance band are clamped.
inline std::vector<int> quantize(std::span<const double> samples, int bins) {
    if (bins < 2) throw std::invalid_argument("quantize: bins must be >= 2");
    std::vector<int> codes;
    codes.reserve(samples.size());
    for (double x : samples) {
        if (x < -1.0 - 1e-9 || x > 1.0 + 1e-9)
            throw std::invalid_argument("quantize: sample " + std::to_string(x) +
                                        " outside [-1,1]");
        const double clamped = std::clamp(x, -1.0, 1.0);
        int code = static_cast<int>(std::floor((clamped + 1.0) / 2.0 * bins));
        if (code >= bins) code = bins - 1;
        if (code < 0) code = 0;
        codes.push_back(code);
    }
    return codes;
}

inline int quantize_one(double x, int bins) {
    const double arr[1] = {x};
    return quantize(std::span<const double>(arr, 1), bins)[0];
}

inline double nats_to_bits(double nats) { return nats / 0.69314718055994530942; }

}  // namespace classgen
