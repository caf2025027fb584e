#ifndef CAUSAL_ESTIMATORS_HPP
#define CAUSAL_ESTIMATORS_HPP

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causal/dataset.hpp"

namespace causal {

enum class Method { diff_in_means, covariate_adjustment, psm_stratified };

std::string method_to_string(Method m);

struct Stratum {
    double score_lo = 0.0;
    double score_hi = 0.0;
    double effect = 0.0;
    std::size_t n_units = 0;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
};

struct EffectEstimate {
    double value = 0.0;
    Method method = Method::diff_in_means;
    std::size_t n_treated = 0;
    std::size_t n_control = 0;
    std::vector<Stratum> strata;           // populated by psm_stratified
    std::vector<std::string> warnings;     // e.g. dropped one-sided strata
};

std::string to_json(const EffectEstimate& e);
std::string render_estimate(const EffectEstimate& e);

/// Linear outcome model Y = alpha . x + beta * t + gamma.
struct LinearOutcomeModel {
    std::vector<std::string> covariate_names;
    Eigen::VectorXd alpha;
    double beta = 0.0;
    double gamma = 0.0;

    double predict(const Eigen::VectorXd& x, int t) const;
};

/// Logistic propensity model p(T=1|x); weights hold covariate coefficients
/// followed by the intercept. Scores are clamped strictly inside (0,1).
struct PropensityModel {
    std::vector<std::string> covariate_names;
    Eigen::VectorXd weights;
    std::vector<double> scores;
};

EffectEstimate ate_difference_in_means(const CausalDataset& ds);

LinearOutcomeModel fit_outcome_model(const CausalDataset& ds,
                                     const std::vector<std::string>& covariate_names);

/// Fit Y = alpha . x + gamma on a single treatment arm (no treatment term;
/// beta is left at 0). Used for per-arm CATE.
LinearOutcomeModel fit_arm_outcome_model(const CausalDataset& ds,
                                         int arm,
                                         const std::vector<std::string>& covariate_names);

EffectEstimate ate_covariate_adjustment(const LinearOutcomeModel& model,
                                        const CausalDataset& ds);

/// Plug-in CATE from a single model: f(x,1) - f(x,0).
double cate_plugin(const LinearOutcomeModel& model,
                   const std::map<std::string, double>& x);

/// Plug-in CATE from per-arm models: f1(x) - f0(x).
double cate_plugin(const LinearOutcomeModel& treated_model,
                   const LinearOutcomeModel& control_model,
                   const std::map<std::string, double>& x);

/// Logistic regression of T on covariates + intercept by damped IRLS with
/// an L2 penalty (1e-6) on non-intercept weights.
PropensityModel estimate_propensity(const CausalDataset& ds,
                                    const std::vector<std::string>& covariate_names);

/// Nearest-neighbour matching on propensity scores, with replacement;
/// ties break to the lowest control row index. Pairs are (treated row,
/// control row) dataset indices.
std::vector<std::pair<std::size_t, std::size_t>>
match_nearest_neighbor(const PropensityModel& scores, const CausalDataset& ds);

struct BalanceRow {
    std::string covariate;
    double smd = 0.0;
    bool infinite = false;   // zero pooled variance with unequal means
    bool flagged = false;    // |smd| > 0.1 or infinite
};

/// Standardized mean differences over the matched sample (treated units vs
/// their matched controls, with multiplicity).
std::vector<BalanceRow>
balance_diagnostics(const std::vector<std::pair<std::size_t, std::size_t>>& matches,
                    const CausalDataset& ds,
                    const std::vector<std::string>& covariate_names);

/// Equal-frequency stratification on propensity scores; strata missing a
/// treatment group are dropped with a warning. The estimate is the
/// size-weighted (or plain, if weighted=false) average of stratum effects.
EffectEstimate ate_psm_stratified(const CausalDataset& ds,
                                  const PropensityModel& scores,
                                  int n_strata,
                                  bool weighted = true);

} // namespace causal

#endif
