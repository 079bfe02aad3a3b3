#include "selfmi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfmi/errors.hpp"

namespace selfmi {

namespace {

void check_pair(const char* op, std::span<const double> a,
                std::span<const double> b) {
    if (a.empty())
        throw ContractError(std::string(op) + ": empty input");
    if (a.size() != b.size())
        throw ContractError(std::string(op) + ": length mismatch " +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> target) {
    check_pair("mae", pred, target);
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        s += std::fabs(pred[i] - target[i]);
    return s / static_cast<double>(pred.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    check_pair("pearson", a, b);
    if (a.size() < 2)
        throw ContractError("pearson: need at least 2 samples");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0)
        throw ValueError("pearson: correlation undefined for a constant vector");
    return std::clamp(cov / (std::sqrt(va) * std::sqrt(vb)), -1.0, 1.0);
}

BinaryScores binary_scores(std::span<const double> pred,
                           std::span<const double> target,
                           Binarization convention) {
    check_pair("binary_scores", pred, target);
    std::size_t tp = 0, fp = 0, fn = 0, correct = 0, n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (convention == Binarization::posneg && target[i] == 0.0) continue;
        ++n;
        const bool p_pos = !(pred[i] < 0.0);
        const bool t_pos = !(target[i] < 0.0);
        if (p_pos == t_pos) ++correct;
        if (p_pos && t_pos) ++tp;
        if (p_pos && !t_pos) ++fp;
        if (!p_pos && t_pos) ++fn;
    }
    if (n == 0)
        throw ContractError(
            "binary_scores: no samples left to evaluate (all labels zero?)");
    BinaryScores out;
    out.n = n;
    out.acc2 = static_cast<double>(correct) / static_cast<double>(n);
    if (tp == 0) {
        out.f1 = 0.0;
    } else {
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        out.f1 = 2.0 * precision * recall / (precision + recall);
    }
    return out;
}

MetricsReport evaluate(std::span<const double> pred,
                       std::span<const double> target) {
    MetricsReport r;
    r.mae = mae(pred, target);
    r.corr = pearson(pred, target);
    const BinaryScores nn = binary_scores(pred, target, Binarization::nonneg);
    const BinaryScores pn = binary_scores(pred, target, Binarization::posneg);
    r.acc2_nonneg = nn.acc2;
    r.f1_nonneg = nn.f1;
    r.acc2_posneg = pn.acc2;
    r.f1_posneg = pn.f1;
    r.n_eval = pred.size();
    return r;
}

}  // namespace selfmi
