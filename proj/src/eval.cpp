#include "lesioncam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lesioncam/errors.hpp"

namespace lesioncam {

double roc_auc(const std::vector<ScoredSample>& samples) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& s : samples) {
        if (!std::isfinite(s.score) || s.score < 0.0 || s.score > 1.0)
            throw UsageError("roc_auc: score must be a probability in [0,1]");
        if (s.label != 0 && s.label != 1) throw UsageError("roc_auc: label must be 0 or 1");
        (s.label ? n_pos : n_neg)++;
    }
    if (n_pos == 0 || n_neg == 0)
        throw NumericError("roc_auc: need at least one positive and one negative sample");

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].score < samples[b].score;
    });

    // Mid-ranks over tie groups, 1-based.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (samples[order[k]].label) pos_rank_sum += mid_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

AucReport report(const std::vector<ScoredSample>& melanoma_task,
                 const std::vector<ScoredSample>& sk_task) {
    AucReport r;
    r.m_auc = roc_auc(melanoma_task);
    r.sk_auc = roc_auc(sk_task);
    r.avg_auc = (r.m_auc + r.sk_auc) / 2.0;
    return r;
}

std::string format_report(const AucReport& r) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << "M_AUC   " << r.m_auc << "\n"
        << "SK_AUC  " << r.sk_auc << "\n"
        << "AVG_AUC " << r.avg_auc << "\n";
    return out.str();
}

std::string format_report_csv(const AucReport& r) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(3);
    out << "M_AUC,SK_AUC,AVG_AUC\n" << r.m_auc << "," << r.sk_auc << "," << r.avg_auc << "\n";
    return out.str();
}

}  // namespace lesioncam
