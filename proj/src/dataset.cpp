#include "causal/dataset.hpp"
#include "causal/csv.hpp"
#include "causal/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace causal {

namespace {

bool is_missing(const std::string& tok) {
    return tok.empty() || tok == "NA";
}

double parse_number(const std::string& tok, const std::string& column) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size())
            throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("non-numeric token \"" + tok + "\" in column " + column);
    }
}

int parse_treatment(const std::string& tok) {
    std::string t = tok;
    std::transform(t.begin(), t.end(), t.begin(), ::toupper);
    if (t == "TRUE" || t == "1") return 1;
    if (t == "FALSE" || t == "0") return 0;
    throw std::runtime_error("invalid treatment token \"" + tok + "\" (expected TRUE/FALSE or 0/1)");
}

} // namespace

const std::vector<Cell>& CausalDataset::covariate(const std::string& name) const {
    for (const auto& [n, col] : covariates)
        if (n == name) return col;
    throw std::out_of_range("no covariate named " + name);
}

bool CausalDataset::has_covariate(const std::string& name) const {
    for (const auto& [n, col] : covariates)
        if (n == name) return true;
    return false;
}

std::vector<double> CausalDataset::covariate_dense(const std::string& name) const {
    const auto& col = covariate(name);
    std::vector<double> out;
    out.reserve(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (!col[i])
            throw std::runtime_error("covariate " + name + " has a missing cell at row " +
                                     std::to_string(i));
        out.push_back(*col[i]);
    }
    return out;
}

std::vector<double> CausalDataset::outcome_dense() const {
    std::vector<double> out;
    out.reserve(outcome.size());
    for (std::size_t i = 0; i < outcome.size(); ++i) {
        if (!outcome[i])
            throw std::runtime_error("outcome has a missing cell at row " + std::to_string(i));
        out.push_back(*outcome[i]);
    }
    return out;
}

CausalDataset load_csv(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);

    std::string header_line;
    if (!std::getline(in, header_line))
        throw std::runtime_error("empty file: " + path);
    auto header = csv::split_line(header_line);
    for (auto& h : header) h = csv::trim(h);

    auto column_index = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::runtime_error("schema column \"" + name + "\" absent from header");
        return static_cast<std::size_t>(it - header.begin());
    };

    std::size_t entity_ix = column_index(schema.entity);
    std::size_t period_ix = column_index(schema.period);
    std::size_t treat_ix = column_index(schema.treatment);
    std::size_t outcome_ix = column_index(schema.outcome);
    std::vector<std::size_t> cov_ix;
    for (const auto& c : schema.covariates) cov_ix.push_back(column_index(c));

    CausalDataset ds;
    ds.outcome_name = schema.outcome;
    for (const auto& c : schema.covariates)
        ds.covariates.emplace_back(c, std::vector<Cell>{});

    std::set<std::pair<std::string, int>> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        auto fields = csv::split_line(line);
        if (fields.size() != header.size())
            throw std::runtime_error("row has " + std::to_string(fields.size()) +
                                     " fields, header has " + std::to_string(header.size()));
        for (auto& f : fields) f = csv::trim(f);

        std::string ent = fields[entity_ix];
        int per = static_cast<int>(parse_number(fields[period_ix], schema.period));
        if (!seen.emplace(ent, per).second)
            throw std::runtime_error("duplicate (entity, period) key: (" + ent + ", " +
                                     std::to_string(per) + ")");
        ds.entity.push_back(ent);
        ds.period.push_back(per);
        ds.treatment.push_back(parse_treatment(fields[treat_ix]));

        const std::string& out_tok = fields[outcome_ix];
        ds.outcome.push_back(is_missing(out_tok) ? Cell{}
                                                 : Cell{parse_number(out_tok, schema.outcome)});
        for (std::size_t k = 0; k < cov_ix.size(); ++k) {
            const std::string& tok = fields[cov_ix[k]];
            ds.covariates[k].second.push_back(
                is_missing(tok) ? Cell{} : Cell{parse_number(tok, schema.covariates[k])});
        }
    }
    if (ds.size() == 0)
        throw std::runtime_error("no records in " + path);
    return ds;
}

void write_csv(const CausalDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << "entity,period";
    for (const auto& [name, col] : ds.covariates) out << ',' << name;
    out << ",treatment," << ds.outcome_name << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.entity[i] << ',' << ds.period[i];
        for (const auto& [name, col] : ds.covariates) {
            out << ',';
            if (col[i]) out << format_double(*col[i]);
        }
        out << ',' << ds.treatment[i] << ',';
        if (ds.outcome[i]) out << format_double(*ds.outcome[i]);
        out << '\n';
    }
}

CausalDataset subset(const CausalDataset& ds, const std::vector<std::size_t>& rows) {
    CausalDataset out;
    out.outcome_name = ds.outcome_name;
    for (const auto& [name, col] : ds.covariates)
        out.covariates.emplace_back(name, std::vector<Cell>{});
    for (std::size_t r : rows) {
        out.entity.push_back(ds.entity[r]);
        out.period.push_back(ds.period[r]);
        out.treatment.push_back(ds.treatment[r]);
        out.outcome.push_back(ds.outcome[r]);
        for (std::size_t k = 0; k < ds.covariates.size(); ++k)
            out.covariates[k].second.push_back(ds.covariates[k].second[r]);
    }
    return out;
}

std::vector<ColumnSummary> summary_stats(const CausalDataset& ds) {
    std::vector<ColumnSummary> out;
    std::size_t n = ds.size();
    out.push_back({"entity", n, n});
    out.push_back({"period", n, n});
    for (const auto& [name, col] : ds.covariates) {
        std::size_t present = 0;
        for (const auto& c : col)
            if (c) ++present;
        out.push_back({name, present, n});
    }
    out.push_back({"treatment", n, n});
    std::size_t present = 0;
    for (const auto& c : ds.outcome)
        if (c) ++present;
    out.push_back({ds.outcome_name, present, n});
    return out;
}

std::string render_summary(const std::vector<ColumnSummary>& summaries) {
    const std::string left = "Feature name";
    const std::string right = "Number of non-empty records";
    std::size_t width = left.size();
    for (const auto& s : summaries) width = std::max(width, s.name.size());
    width += 2;

    std::ostringstream os;
    os << left << std::string(width - left.size(), ' ') << right << '\n';
    for (const auto& s : summaries)
        os << s.name << std::string(width - s.name.size(), ' ') << s.non_empty << '\n';
    return os.str();
}

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
        throw std::invalid_argument("spline needs at least 2 knots");
    for (std::size_t i = 1; i < n; ++i)
        if (x_[i] <= x_[i - 1])
            throw std::invalid_argument("spline knots must be strictly increasing");

    // Thomas algorithm for the natural-spline tridiagonal system in the
    // interior second derivatives; m_[0] = m_[n-1] = 0.
    m_.assign(n, 0.0);
    if (n > 2) {
        std::size_t k = n - 2;
        std::vector<double> diag(k), rhs(k), upper(k);
        for (std::size_t i = 0; i < k; ++i) {
            double h0 = x_[i + 1] - x_[i];
            double h1 = x_[i + 2] - x_[i + 1];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y_[i + 2] - y_[i + 1]) / h1 - (y_[i + 1] - y_[i]) / h0);
        }
        for (std::size_t i = 1; i < k; ++i) {
            double lower = x_[i + 1] - x_[i];
            double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m_[k] = rhs[k - 1] / diag[k - 1];
        for (std::size_t i = k - 1; i >= 1; --i)
            m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
    }
}

double NaturalCubicSpline::operator()(double t) const {
    if (t < x_.front() || t > x_.back())
        throw std::domain_error("spline evaluation outside knot range");
    std::size_t i = std::upper_bound(x_.begin(), x_.end(), t) - x_.begin();
    if (i == 0) i = 1;
    if (i == x_.size()) i = x_.size() - 1;
    double h = x_[i] - x_[i - 1];
    double a = (x_[i] - t) / h;
    double b = (t - x_[i - 1]) / h;
    return a * y_[i - 1] + b * y_[i] +
           ((a * a * a - a) * m_[i - 1] + (b * b * b - b) * m_[i]) * h * h / 6.0;
}

namespace {

// Polynomial interpolation used when too few knots exist for a spline.
double lagrange_eval(const std::vector<double>& x, const std::vector<double>& y, double t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double term = y[i];
        for (std::size_t j = 0; j < x.size(); ++j)
            if (j != i) term *= (t - x[j]) / (x[i] - x[j]);
        sum += term;
    }
    return sum;
}

} // namespace

TimeSeries fill_gaps(const TimeSeries& series, FillMethod method) {
    std::vector<double> kx, ky;
    for (const auto& [t, v] : series)
        if (v) {
            kx.push_back(static_cast<double>(t));
            ky.push_back(*v);
        }

    TimeSeries out = series;
    if (method == FillMethod::pad) {
        Cell last;
        for (auto& [t, v] : out) {
            if (v)
                last = v;
            else if (last)
                v = last;
            else
                throw std::runtime_error("pad: no preceding value for period " +
                                         std::to_string(t));
        }
        return out;
    }

    // cubic
    bool has_gap = std::any_of(series.begin(), series.end(),
                               [](const auto& p) { return !p.second; });
    if (!has_gap) return out;
    if (kx.size() < 2)
        throw std::runtime_error("cubic: fewer than 2 knots");

    std::optional<NaturalCubicSpline> spline;
    if (kx.size() >= 4) spline.emplace(kx, ky);

    for (auto& [t, v] : out) {
        if (v) continue;
        double td = static_cast<double>(t);
        if (td < kx.front() || td > kx.back())
            throw std::runtime_error("cubic: gap at period " + std::to_string(t) +
                                     " outside knot range");
        v = spline ? (*spline)(td) : lagrange_eval(kx, ky, td);
    }
    return out;
}

namespace {

CausalDataset fill_column_per_entity(const CausalDataset& ds, FillMethod method) {
    CausalDataset out = ds;
    auto fill_one = [&](std::vector<Cell>& col) {
        std::map<std::string, TimeSeries> per_entity;
        for (std::size_t i = 0; i < out.size(); ++i)
            per_entity[out.entity[i]][out.period[i]] = col[i];
        for (auto& [ent, series] : per_entity) {
            bool has_gap = std::any_of(series.begin(), series.end(),
                                       [](const auto& p) { return !p.second; });
            if (has_gap) series = fill_gaps(series, method);
        }
        for (std::size_t i = 0; i < out.size(); ++i)
            col[i] = per_entity[out.entity[i]][out.period[i]];
    };
    for (auto& [name, col] : out.covariates) fill_one(col);
    fill_one(out.outcome);
    return out;
}

} // namespace

CausalDataset fill_dataset_gaps(const CausalDataset& ds, FillMethod method) {
    return fill_column_per_entity(ds, method);
}

CausalDataset derive_lagged_outcome(const CausalDataset& ds,
                                    const std::string& pre_name,
                                    const std::string& post_name) {
    std::map<std::string, std::map<int, std::size_t>> by_entity;
    for (std::size_t i = 0; i < ds.size(); ++i)
        by_entity[ds.entity[i]][ds.period[i]] = i;

    for (const auto& [ent, periods] : by_entity) {
        if (periods.size() < 2)
            throw std::runtime_error("entity " + ent + " has a single period");
        int prev = periods.begin()->first;
        for (auto it = std::next(periods.begin()); it != periods.end(); ++it) {
            if (it->first != prev + 1)
                throw std::runtime_error("entity " + ent + " has non-contiguous periods " +
                                         std::to_string(prev) + ", " + std::to_string(it->first));
            prev = it->first;
        }
    }

    std::vector<std::size_t> keep;
    std::vector<Cell> pre_col, post_col;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& periods = by_entity[ds.entity[i]];
        auto prev = periods.find(ds.period[i] - 1);
        auto next = periods.find(ds.period[i] + 1);
        if (prev == periods.end() || next == periods.end()) continue;
        keep.push_back(i);
        pre_col.push_back(ds.outcome[prev->second]);
        post_col.push_back(ds.outcome[next->second]);
    }

    CausalDataset out = subset(ds, keep);
    out.covariates.emplace_back(pre_name, std::move(pre_col));
    out.outcome = std::move(post_col);
    out.outcome_name = post_name;
    return out;
}

} // namespace causal
