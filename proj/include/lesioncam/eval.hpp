#pragma once

#include <string>
#include <vector>

namespace lesioncam {

struct ScoredSample {
    double score = 0.0;  // probability in [0,1]
    int label = 0;       // 0 or 1
};

struct AucReport {
    double m_auc = 0.0;
    double sk_auc = 0.0;
    double avg_auc = 0.0;  // (m_auc + sk_auc) / 2
};

// Mann-Whitney rank-statistic AUC with mid-rank tie handling:
// (sum of positive ranks - n+(n+ + 1)/2) / (n+ * n-).
double roc_auc(const std::vector<ScoredSample>& samples);

// ISIC-2017 two-binary-task report: melanoma-vs-rest on p_mel scores,
// seborrheic-keratosis-vs-rest on p_sk scores.
AucReport report(const std::vector<ScoredSample>& melanoma_task,
                 const std::vector<ScoredSample>& sk_task);

std::string format_report(const AucReport& r);      // human-readable
std::string format_report_csv(const AucReport& r);  // M_AUC,SK_AUC,AVG_AUC row

}  // namespace lesioncam
