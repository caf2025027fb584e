#ifndef CAUSAL_ASSUMPTIONS_HPP
#define CAUSAL_ASSUMPTIONS_HPP

#include <string>
#include <vector>

#include "causal/dataset.hpp"
#include "causal/estimators.hpp"

namespace causal {

struct SupportViolation {
    std::string entity;
    int period = 0;
    double score = 0.0;
};

struct CommonSupportResult {
    bool pass = true;
    double epsilon = 0.05;
    std::vector<SupportViolation> violators;
};

struct OverlapGroupResult {
    std::string group;
    bool pass = true;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
};

struct DeclaredAssumption {
    std::string name;
    std::string statement;
};

struct AssumptionReport {
    CommonSupportResult common_support;
    std::vector<OverlapGroupResult> overlap_checks;
    std::vector<DeclaredAssumption> declared;

    bool all_pass() const;
};

/// Fails iff any propensity score lies outside [epsilon, 1 - epsilon].
CommonSupportResult check_common_support(const PropensityModel& scores,
                                         const CausalDataset& ds,
                                         double epsilon = 0.05);

/// Each group passes iff it contains at least one treated and one control
/// unit. `group_labels` assigns every row to a group.
std::vector<OverlapGroupResult>
check_subpopulation_overlap(const CausalDataset& ds,
                            const std::vector<std::string>& group_labels);

/// Group rows by entity label.
std::vector<std::string> group_by_entity(const CausalDataset& ds);

/// Group rows into numeric quantile bins of a covariate.
std::vector<std::string> group_by_quantile(const CausalDataset& ds,
                                           const std::string& covariate,
                                           int n_bins);

/// Bundle the testable checks with the two declared (untestable) assumptions.
AssumptionReport assumptions_report(const CausalDataset& ds,
                                    const PropensityModel& scores,
                                    double epsilon = 0.05);

std::string render_report(const AssumptionReport& report);

} // namespace causal

#endif
