#include "causal/estimators.hpp"
#include "causal/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace causal {

std::string method_to_string(Method m) {
    switch (m) {
    case Method::diff_in_means: return "diff_in_means";
    case Method::covariate_adjustment: return "covariate_adjustment";
    case Method::psm_stratified: return "psm_stratified";
    }
    throw std::logic_error("bad method");
}

std::string to_json(const EffectEstimate& e) {
    nlohmann::json j;
    j["method"] = method_to_string(e.method);
    j["value"] = e.value;
    j["n_treated"] = e.n_treated;
    j["n_control"] = e.n_control;
    j["strata"] = nlohmann::json::array();
    for (const auto& s : e.strata)
        j["strata"].push_back({{"score_lo", s.score_lo},
                               {"score_hi", s.score_hi},
                               {"effect", s.effect},
                               {"n_units", s.n_units},
                               {"n_treated", s.n_treated},
                               {"n_control", s.n_control}});
    if (!e.warnings.empty()) j["warnings"] = e.warnings;
    return j.dump(2);
}

std::string render_estimate(const EffectEstimate& e) {
    std::ostringstream os;
    os << "Method: " << method_to_string(e.method) << '\n';
    os << "Estimated effect: " << format_double(e.value) << '\n';
    os << "Treated units: " << e.n_treated << '\n';
    os << "Control units: " << e.n_control << '\n';
    for (const auto& s : e.strata)
        os << "  stratum [" << format_double(s.score_lo) << ", " << format_double(s.score_hi)
           << "] effect " << format_double(s.effect) << " (n=" << s.n_units << ", treated "
           << s.n_treated << ", control " << s.n_control << ")\n";
    for (const auto& w : e.warnings) os << "WARNING: " << w << '\n';
    return os.str();
}

double LinearOutcomeModel::predict(const Eigen::VectorXd& x, int t) const {
    if (x.size() != alpha.size())
        throw std::invalid_argument("covariate vector length mismatch");
    return alpha.dot(x) + beta * t + gamma;
}

namespace {

void require_both_groups(const CausalDataset& ds) {
    std::size_t nt = std::count(ds.treatment.begin(), ds.treatment.end(), 1);
    if (nt == 0)
        throw std::runtime_error("no treated units");
    if (nt == ds.size())
        throw std::runtime_error("no control units");
}

Eigen::MatrixXd covariate_matrix(const CausalDataset& ds,
                                 const std::vector<std::string>& names) {
    Eigen::MatrixXd X(ds.size(), names.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        auto col = ds.covariate_dense(names[k]);
        for (std::size_t i = 0; i < col.size(); ++i) X(i, k) = col[i];
    }
    return X;
}

} // namespace

EffectEstimate ate_difference_in_means(const CausalDataset& ds) {
    require_both_groups(ds);
    auto y = ds.outcome_dense();
    double sum_t = 0.0, sum_c = 0.0;
    std::size_t nt = 0, nc = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.treatment[i]) {
            sum_t += y[i];
            ++nt;
        } else {
            sum_c += y[i];
            ++nc;
        }
    }
    EffectEstimate e;
    e.method = Method::diff_in_means;
    e.value = sum_t / nt - sum_c / nc;
    e.n_treated = nt;
    e.n_control = nc;
    return e;
}

LinearOutcomeModel fit_outcome_model(const CausalDataset& ds,
                                     const std::vector<std::string>& covariate_names) {
    const std::size_t n = ds.size();
    const std::size_t p = covariate_names.size() + 2; // covariates + treatment + intercept
    if (n <= p)
        throw std::runtime_error("too few rows (" + std::to_string(n) + ") for " +
                                 std::to_string(p) + " parameters");

    Eigen::MatrixXd X(n, p);
    X.leftCols(covariate_names.size()) = covariate_matrix(ds, covariate_names);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, covariate_names.size()) = ds.treatment[i];
        X(i, covariate_names.size() + 1) = 1.0;
    }
    auto yv = ds.outcome_dense();
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(yv.data(), yv.size());

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
        auto name_of = [&](Eigen::Index c) -> std::string {
            if (c < static_cast<Eigen::Index>(covariate_names.size()))
                return covariate_names[c];
            return c == static_cast<Eigen::Index>(covariate_names.size()) ? "treatment"
                                                                          : "intercept";
        };
        // Pivot order puts the dependent columns last.
        std::vector<std::string> colliding;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index k = qr.rank(); k < static_cast<Eigen::Index>(p); ++k)
            colliding.push_back(name_of(perm(k)));
        std::sort(colliding.begin(), colliding.end());
        std::string msg = "rank-deficient design; colliding columns:";
        for (const auto& c : colliding) msg += " " + c;
        throw std::runtime_error(msg);
    }

    Eigen::VectorXd coef = qr.solve(y);
    LinearOutcomeModel m;
    m.covariate_names = covariate_names;
    m.alpha = coef.head(covariate_names.size());
    m.beta = coef(covariate_names.size());
    m.gamma = coef(covariate_names.size() + 1);
    return m;
}

LinearOutcomeModel fit_arm_outcomemodel_impl(const CausalDataset& ds,
                                             const std::vector<std::string>& covariate_names) {
    const std::size_t n = ds.size();
    const std::size_t p = covariate_names.size() + 1; // covariates + intercept
    if (n < p)
        throw std::runtime_error("too few rows (" + std::to_string(n) + ") for " +
                                 std::to_string(p) + " parameters");
    Eigen::MatrixXd X(n, p);
    X.leftCols(covariate_names.size()) = covariate_matrix(ds, covariate_names);
    X.col(p - 1).setOnes();
    auto yv = ds.outcome_dense();
    Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(yv.data(), yv.size());

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p))
        throw std::runtime_error("rank-deficient design in per-arm fit");
    Eigen::VectorXd coef = qr.solve(y);
    LinearOutcomeModel m;
    m.covariate_names = covariate_names;
    m.alpha = coef.head(covariate_names.size());
    m.beta = 0.0;
    m.gamma = coef(covariate_names.size());
    return m;
}

LinearOutcomeModel fit_arm_outcome_model(const CausalDataset& ds,
                                         int arm,
                                         const std::vector<std::string>& covariate_names) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.treatment[i] == arm) rows.push_back(i);
    if (rows.empty())
        throw std::runtime_error("empty treatment arm " + std::to_string(arm));
    return fit_arm_outcomemodel_impl(subset(ds, rows), covariate_names);
}

EffectEstimate ate_covariate_adjustment(const LinearOutcomeModel& model,
                                        const CausalDataset& ds) {
    for (const auto& name : model.covariate_names)
        if (!ds.has_covariate(name))
            throw std::runtime_error("model covariate " + name + " missing from dataset");

    Eigen::MatrixXd X = covariate_matrix(ds, model.covariate_names);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        Eigen::VectorXd x = X.row(i);
        sum += model.predict(x, 1) - model.predict(x, 0);
    }
    EffectEstimate e;
    e.method = Method::covariate_adjustment;
    e.value = sum / static_cast<double>(ds.size());
    e.n_treated = std::count(ds.treatment.begin(), ds.treatment.end(), 1);
    e.n_control = ds.size() - e.n_treated;
    return e;
}

namespace {

Eigen::VectorXd vector_from_map(const std::vector<std::string>& names,
                                const std::map<std::string, double>& x) {
    Eigen::VectorXd v(names.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        auto it = x.find(names[k]);
        if (it == x.end())
            throw std::invalid_argument("covariate " + names[k] + " missing from query point");
        v(k) = it->second;
    }
    return v;
}

} // namespace

double cate_plugin(const LinearOutcomeModel& model, const std::map<std::string, double>& x) {
    Eigen::VectorXd v = vector_from_map(model.covariate_names, x);
    return model.predict(v, 1) - model.predict(v, 0);
}

double cate_plugin(const LinearOutcomeModel& treated_model,
                   const LinearOutcomeModel& control_model,
                   const std::map<std::string, double>& x) {
    Eigen::VectorXd v1 = vector_from_map(treated_model.covariate_names, x);
    Eigen::VectorXd v0 = vector_from_map(control_model.covariate_names, x);
    // Per-arm models carry no treatment term of their own.
    return (treated_model.alpha.dot(v1) + treated_model.gamma) -
           (control_model.alpha.dot(v0) + control_model.gamma);
}

PropensityModel estimate_propensity(const CausalDataset& ds,
                                    const std::vector<std::string>& covariate_names) {
    require_both_groups(ds);
    const double lambda = 1e-6;
    const std::size_t n = ds.size();
    const std::size_t p = covariate_names.size() + 1; // + intercept

    Eigen::MatrixXd X(n, p);
    X.leftCols(covariate_names.size()) = covariate_matrix(ds, covariate_names);
    X.col(p - 1).setOnes();
    Eigen::VectorXd t(n);
    for (std::size_t i = 0; i < n; ++i) t(i) = ds.treatment[i];

    // Intercept is unpenalized.
    Eigen::VectorXd pen_mask = Eigen::VectorXd::Ones(p);
    pen_mask(p - 1) = 0.0;

    auto loss = [&](const Eigen::VectorXd& w) {
        Eigen::VectorXd eta = X * w;
        double nll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // log(1 + e^eta) - t*eta, computed stably
            double e = eta(i);
            nll += (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) - t(i) * e;
        }
        return nll + 0.5 * lambda * (pen_mask.array() * w.array().square()).sum();
    };

    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    double cur = loss(w);
    const int max_iter = 200;
    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        Eigen::VectorXd eta = X * w;
        Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        Eigen::VectorXd grad = X.transpose() * (mu - t) + lambda * (pen_mask.array() * w.array()).matrix();
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10) {
            converged = true;
            break;
        }
        Eigen::VectorXd wts = (mu.array() * (1.0 - mu.array())).matrix();
        Eigen::MatrixXd H = X.transpose() * wts.asDiagonal() * X;
        H.diagonal() += lambda * pen_mask;
        Eigen::VectorXd step = H.ldlt().solve(grad);

        // Damped Newton: halve until the penalized loss decreases.
        double alpha = 1.0;
        bool improved = false;
        for (int h = 0; h < 60; ++h) {
            double next = loss(w - alpha * step);
            if (next <= cur) {
                w -= alpha * step;
                cur = next;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved)
            throw std::runtime_error("propensity optimizer failed to reduce penalized loss");
    }
    if (!converged) {
        // Accept if the gradient is small enough for score purposes.
        Eigen::VectorXd eta = X * w;
        Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        Eigen::VectorXd grad = X.transpose() * (mu - t) + lambda * (pen_mask.array() * w.array()).matrix();
        if (grad.lpNorm<Eigen::Infinity>() > 1e-4)
            throw std::runtime_error("propensity optimizer did not converge in 200 iterations");
    }

    PropensityModel m;
    m.covariate_names = covariate_names;
    m.weights = w;
    Eigen::VectorXd eta = X * w;
    m.scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0 / (1.0 + std::exp(-eta(i)));
        m.scores[i] = std::clamp(s, 1e-12, 1.0 - 1e-12);
    }
    return m;
}

std::vector<std::pair<std::size_t, std::size_t>>
match_nearest_neighbor(const PropensityModel& scores, const CausalDataset& ds) {
    require_both_groups(ds);
    std::vector<std::size_t> treated, control;
    for (std::size_t i = 0; i < ds.size(); ++i)
        (ds.treatment[i] ? treated : control).push_back(i);

    std::vector<std::pair<std::size_t, std::size_t>> matches;
    matches.reserve(treated.size());
    for (std::size_t ti : treated) {
        std::size_t best = control.front();
        double best_d = std::abs(scores.scores[ti] - scores.scores[best]);
        for (std::size_t ci : control) {
            double d = std::abs(scores.scores[ti] - scores.scores[ci]);
            if (d < best_d) {
                best = ci;
                best_d = d;
            }
        }
        matches.emplace_back(ti, best);
    }
    return matches;
}

std::vector<BalanceRow>
balance_diagnostics(const std::vector<std::pair<std::size_t, std::size_t>>& matches,
                    const CausalDataset& ds,
                    const std::vector<std::string>& covariate_names) {
    std::vector<BalanceRow> rows;
    for (const auto& name : covariate_names) {
        auto col = ds.covariate_dense(name);
        std::vector<double> xt, xc;
        for (const auto& [ti, ci] : matches) {
            xt.push_back(col[ti]);
            xc.push_back(col[ci]);
        }
        auto mean = [](const std::vector<double>& v) {
            return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        };
        auto var = [&](const std::vector<double>& v, double m) {
            if (v.size() < 2) return 0.0;
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            return s / (v.size() - 1);
        };
        double mt = mean(xt), mc = mean(xc);
        double pooled = std::sqrt((var(xt, mt) + var(xc, mc)) / 2.0);
        BalanceRow row;
        row.covariate = name;
        if (pooled == 0.0) {
            if (mt == mc) {
                row.smd = 0.0;
            } else {
                row.infinite = true;
                row.smd = std::numeric_limits<double>::infinity();
            }
        } else {
            row.smd = (mt - mc) / pooled;
        }
        row.flagged = row.infinite || std::abs(row.smd) > 0.1;
        rows.push_back(row);
    }
    return rows;
}

EffectEstimate ate_psm_stratified(const CausalDataset& ds,
                                  const PropensityModel& scores,
                                  int n_strata,
                                  bool weighted) {
    if (n_strata < 1)
        throw std::invalid_argument("n_strata must be >= 1");
    require_both_groups(ds);
    const std::size_t n = ds.size();
    if (scores.scores.size() != n)
        throw std::invalid_argument("score count does not match dataset size");

    // Equal-frequency binning on the empirical score quantiles. Duplicate
    // interior cut points collapse, so constant scores form one effective
    // stratum; empty bins are skipped below.
    std::vector<double> sorted = scores.scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (int b = 1; b < n_strata; ++b) {
        std::size_t ix = (static_cast<std::size_t>(b) * n) / n_strata;
        if (ix >= n) ix = n - 1;
        cuts.push_back(sorted[ix]);
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto bin_of = [&](double s) -> std::size_t {
        return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), s) -
                                        cuts.begin());
    };

    std::vector<std::vector<std::size_t>> bins(cuts.size() + 1);
    for (std::size_t i = 0; i < n; ++i) bins[bin_of(scores.scores[i])].push_back(i);

    auto y = ds.outcome_dense();
    EffectEstimate e;
    e.method = Method::psm_stratified;
    double weighted_sum = 0.0, plain_sum = 0.0;
    std::size_t retained = 0, retained_strata = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (bins[b].empty()) continue;
        double sum_t = 0.0, sum_c = 0.0;
        std::size_t nt = 0, nc = 0;
        double lo = scores.scores[bins[b].front()], hi = lo;
        for (std::size_t i : bins[b]) {
            lo = std::min(lo, scores.scores[i]);
            hi = std::max(hi, scores.scores[i]);
            if (ds.treatment[i]) {
                sum_t += y[i];
                ++nt;
            } else {
                sum_c += y[i];
                ++nc;
            }
        }
        if (nt == 0 || nc == 0) {
            std::ostringstream w;
            w << "dropped one-sided stratum [" << format_double(lo) << ", " << format_double(hi)
              << "] with " << bins[b].size() << " units";
            e.warnings.push_back(w.str());
            continue;
        }
        Stratum s;
        s.score_lo = lo;
        s.score_hi = hi;
        s.effect = sum_t / nt - sum_c / nc;
        s.n_units = bins[b].size();
        s.n_treated = nt;
        s.n_control = nc;
        e.strata.push_back(s);
        weighted_sum += s.effect * static_cast<double>(s.n_units);
        plain_sum += s.effect;
        retained += s.n_units;
        ++retained_strata;
        e.n_treated += nt;
        e.n_control += nc;
    }
    if (retained_strata == 0)
        throw std::runtime_error("every stratum is degenerate (one-sided)");
    e.value = weighted ? weighted_sum / static_cast<double>(retained)
                       : plain_sum / static_cast<double>(retained_strata);
    return e;
}

} // namespace causal
