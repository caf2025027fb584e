#include "causal/assumptions.hpp"
#include "causal/text.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace causal {

bool AssumptionReport::all_pass() const {
    if (!common_support.pass) return false;
    return std::all_of(overlap_checks.begin(), overlap_checks.end(),
                       [](const OverlapGroupResult& g) { return g.pass; });
}

CommonSupportResult check_common_support(const PropensityModel& scores,
                                         const CausalDataset& ds,
                                         double epsilon) {
    if (epsilon <= 0.0 || epsilon >= 0.5)
        throw std::invalid_argument("epsilon must lie in (0, 0.5)");
    if (scores.scores.size() != ds.size())
        throw std::invalid_argument("score count does not match dataset size");

    CommonSupportResult res;
    res.epsilon = epsilon;
    for (std::size_t i = 0; i < scores.scores.size(); ++i) {
        double s = scores.scores[i];
        if (s < epsilon || s > 1.0 - epsilon)
            res.violators.push_back({ds.entity[i], ds.period[i], s});
    }
    res.pass = res.violators.empty();
    return res;
}

std::vector<OverlapGroupResult>
check_subpopulation_overlap(const CausalDataset& ds,
                            const std::vector<std::string>& group_labels) {
    if (group_labels.size() != ds.size())
        throw std::invalid_argument("group label count does not match dataset size");

    std::map<std::string, OverlapGroupResult> groups;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto& g = groups[group_labels[i]];
        g.group = group_labels[i];
        if (ds.treatment[i])
            ++g.n_treated;
        else
            ++g.n_control;
    }
    std::vector<OverlapGroupResult> out;
    for (auto& [name, g] : groups) {
        if (g.n_treated + g.n_control == 0)
            throw std::runtime_error("grouping rule produced an empty group: " + name);
        g.pass = g.n_treated > 0 && g.n_control > 0;
        out.push_back(g);
    }
    return out;
}

std::vector<std::string> group_by_entity(const CausalDataset& ds) {
    return ds.entity;
}

std::vector<std::string> group_by_quantile(const CausalDataset& ds,
                                           const std::string& covariate,
                                           int n_bins) {
    if (n_bins < 1)
        throw std::invalid_argument("n_bins must be >= 1");
    auto col = ds.covariate_dense(covariate);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    for (int b = 1; b < n_bins; ++b)
        edges.push_back(sorted[(static_cast<std::size_t>(b) * sorted.size()) / n_bins]);
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<std::string> labels(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
        std::size_t bin = std::upper_bound(edges.begin(), edges.end(), col[i]) - edges.begin();
        labels[i] = covariate + "_q" + std::to_string(bin);
    }
    return labels;
}

AssumptionReport assumptions_report(const CausalDataset& ds,
                                    const PropensityModel& scores,
                                    double epsilon) {
    AssumptionReport rep;
    rep.common_support = check_common_support(scores, ds, epsilon);
    rep.overlap_checks = check_subpopulation_overlap(ds, group_by_entity(ds));
    rep.declared = {
        {"ignorability",
         "assumed, not tested: potential outcomes are taken to be independent of "
         "treatment given the adjusted covariates; unobserved confounding cannot be "
         "ruled out from the observed table"},
        {"SUTVA",
         "assumed, not tested: each unit's outcome is taken to be unaffected by the "
         "treatment assignment of other units"},
    };
    return rep;
}

std::string render_report(const AssumptionReport& report) {
    std::ostringstream os;
    os << "Common support (epsilon = " << format_double(report.common_support.epsilon)
       << "): " << (report.common_support.pass ? "PASS" : "FAIL") << '\n';
    for (const auto& v : report.common_support.violators)
        os << "  violator: (" << v.entity << ", " << v.period << ") score "
           << format_double(v.score) << '\n';
    os << "Subpopulation overlap:\n";
    for (const auto& g : report.overlap_checks)
        os << "  " << g.group << ": " << (g.pass ? "PASS" : "FAIL") << " (treated "
           << g.n_treated << ", control " << g.n_control << ")\n";
    os << "DECLARED:\n";
    for (const auto& d : report.declared)
        os << "  " << d.name << ": " << d.statement << '\n';
    return os.str();
}

} // namespace causal
