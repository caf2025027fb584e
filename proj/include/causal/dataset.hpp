#ifndef CAUSAL_DATASET_HPP
#define CAUSAL_DATASET_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace causal {

using Cell = std::optional<double>;

/// Column roles for CSV ingestion.
struct Schema {
    std::string entity;
    std::string period;
    std::vector<std::string> covariates;
    std::string treatment;
    std::string outcome;
};

struct ColumnSummary {
    std::string name;
    std::size_t non_empty = 0;
    std::size_t total = 0;
};

/// Columnar panel of units: (entity, period) keys, named covariates,
/// a binary treatment and a numeric outcome. Immutable after loading;
/// wrangling operations return new datasets.
struct CausalDataset {
    std::vector<std::string> entity;
    std::vector<int> period;
    std::vector<std::pair<std::string, std::vector<Cell>>> covariates;
    std::vector<int> treatment;
    std::vector<Cell> outcome;
    std::string outcome_name;

    std::size_t size() const { return entity.size(); }

    const std::vector<Cell>& covariate(const std::string& name) const;
    bool has_covariate(const std::string& name) const;

    /// Dense view of a covariate column; throws if any cell is missing.
    std::vector<double> covariate_dense(const std::string& name) const;
    std::vector<double> outcome_dense() const;
};

CausalDataset load_csv(const std::string& path, const Schema& schema);
void write_csv(const CausalDataset& ds, const std::string& path);

/// Row subset, preserving order of `rows`.
CausalDataset subset(const CausalDataset& ds, const std::vector<std::size_t>& rows);

std::vector<ColumnSummary> summary_stats(const CausalDataset& ds);

/// Fixed-width two-column table: feature name, non-empty record count.
std::string render_summary(const std::vector<ColumnSummary>& summaries);

enum class FillMethod { cubic, pad };

/// One entity's time series; missing periods are gaps to repair.
using TimeSeries = std::map<int, Cell>;

/// Fill gaps in a single series. Cubic fits a natural spline through the
/// known knots (linear/quadratic polynomial when only 2 or 3 knots exist)
/// and never extrapolates; pad carries the last preceding value forward.
/// Known values are never altered.
TimeSeries fill_gaps(const TimeSeries& series, FillMethod method);

/// Apply fill_gaps per entity to the outcome and every covariate column.
CausalDataset fill_dataset_gaps(const CausalDataset& ds, FillMethod method);

/// Add a lagged covariate (outcome at t-1) and replace the outcome with
/// its lead (outcome at t+1); boundary periods without both neighbours
/// are dropped. Requires contiguous periods per entity.
CausalDataset derive_lagged_outcome(const CausalDataset& ds,
                                    const std::string& pre_name,
                                    const std::string& post_name);

/// Natural cubic spline through >= 2 knots (second derivative zero at the
/// end knots). Evaluation outside the knot range throws.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double t) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_; // second derivatives at knots
};

} // namespace causal

#endif
