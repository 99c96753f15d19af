#include "prl/empirical.hpp"

#include "prl/errors.hpp"
#include "prl/portfolio.hpp"
#include "prl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace prl {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> slice(const std::vector<std::string>& v, Eigen::Index start,
                               Eigen::Index n) {
    return {v.begin() + start, v.begin() + start + n};
}

ReturnsPanel window(const ReturnsPanel& p, Eigen::Index start, Eigen::Index n) {
    return ReturnsPanel(slice(p.dates(), start, n), p.assets(), p.values().middleRows(start, n));
}

FactorPanel window(const FactorPanel& p, Eigen::Index start, Eigen::Index n) {
    return FactorPanel(slice(p.dates(), start, n), p.factor_names(),
                       p.values().middleRows(start, n));
}

struct Fitted {
    std::optional<CovarianceEstimate> estimate;
    std::optional<FactorModelFit> fit;
};

Fitted fit_estimator(EstimatorKind kind, const ReturnsPanel& est_panel, const FactorPanel* factors,
                     const EmpiricalConfig& config) {
    Fitted f;
    switch (kind) {
        case EstimatorKind::sample:
            f.estimate = sample_covariance(est_panel);
            break;
        case EstimatorKind::factor:
            f.fit = ols_factor_fit(est_panel, *factors);
            f.estimate = factor_covariance(*f.fit, config.factor_rule, config.factor_C);
            break;
        case EstimatorKind::poet:
            f.fit = pca_factor_fit(est_panel, config.poet_K);
            f.estimate = poet_covariance(*f.fit, sample_covariance(est_panel), config.poet_rule,
                                         config.poet_C);
            break;
    }
    return f;
}

}  // namespace

void EmpiricalConfig::validate() const {
    if (estimation_window < 2) throw std::invalid_argument("estimation_window must be at least 2");
    if (holding_window < 1) throw std::invalid_argument("holding_window must be at least 1");
    if (estimators.empty()) throw std::invalid_argument("estimators: need at least one");
    if (!include_equal_weight && min_variance_cs.empty()) {
        throw std::invalid_argument("no strategies selected");
    }
    for (double c : min_variance_cs) {
        if (!(c >= 1.0)) throw std::invalid_argument("min-variance gross exposures must be >= 1");
    }
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
    if (L < 0 || L >= estimation_window) {
        throw std::invalid_argument("L must lie in [0, estimation_window)");
    }
    if (!(periods_per_year > 0.0)) throw std::invalid_argument("periods_per_year must be positive");
    factor_rule.validate();
    poet_rule.validate();
}

const BacktestAverage& BacktestReport::find(const std::string& strategy, EstimatorKind kind) const {
    for (const BacktestAverage& a : averages) {
        if (a.strategy == strategy && a.estimator == kind) return a;
    }
    throw std::out_of_range("BacktestReport: no average for " + strategy + " / " + to_string(kind));
}

Eigen::Index rebalance_count(Eigen::Index T, Eigen::Index estimation_window,
                             Eigen::Index holding_window) {
    if (T < estimation_window) return 0;
    return (T - estimation_window) / holding_window;
}

std::vector<std::string> strategy_names(const EmpiricalConfig& config) {
    std::vector<std::string> names;
    if (config.include_equal_weight) names.push_back("equal");
    for (double c : config.min_variance_cs) names.push_back("minvar_c=" + fmt(c));
    return names;
}

BacktestReport run_empirical_study(const ReturnsPanel& returns, const FactorPanel* factors,
                                   const EmpiricalConfig& config) {
    config.validate();
    const Eigen::Index T = returns.T();
    const Eigen::Index N = returns.N();
    const Eigen::Index est_len = config.estimation_window;
    const Eigen::Index hold = config.holding_window;
    if (T < est_len + hold) {
        throw DataError("run_empirical_study: need at least " + std::to_string(est_len + hold) +
                        " rows, got " + std::to_string(T));
    }
    const bool wants_factor = std::find(config.estimators.begin(), config.estimators.end(),
                                        EstimatorKind::factor) != config.estimators.end();
    if (wants_factor) {
        if (!factors) throw std::invalid_argument("run_empirical_study: factor estimator needs a factor panel");
        if (factors->dates() != returns.dates()) {
            throw DataError("run_empirical_study: factor panel dates differ from the returns panel; "
                            "align the panels first");
        }
    }
    const ZConvention convention = config.paper_z ? ZConvention::paper : ZConvention::exact;
    const std::vector<std::string> names = strategy_names(config);

    BacktestReport report;
    report.rebalances = rebalance_count(T, est_len, hold);
    for (Eigen::Index k = 0; k < report.rebalances; ++k) {
        const Eigen::Index start = k * hold;
        const ReturnsPanel est_panel = window(returns, start, est_len);
        const Eigen::MatrixXd held = returns.values().middleRows(start + est_len, hold);
        const std::string& date = est_panel.dates().back();
        std::optional<FactorPanel> est_factors;
        if (wants_factor) est_factors = window(*factors, start, est_len);

        for (EstimatorKind kind : config.estimators) {
            try {
                const Fitted fitted = fit_estimator(kind, est_panel,
                                                    est_factors ? &*est_factors : nullptr, config);
                const CovarianceEstimate& est = *fitted.estimate;
                const FactorModelFit* fit = fitted.fit ? &*fitted.fit : nullptr;

                std::optional<CovarianceEstimate> pd;
                auto pd_estimate = [&]() -> const CovarianceEstimate& {
                    if (!pd) {
                        if (kind == EstimatorKind::sample || est.min_eigenvalue() > 1e-8) {
                            pd = est;
                        } else {
                            const double C = kind == EstimatorKind::factor ? config.factor_C
                                                                           : config.poet_C;
                            const ThresholdRule& rule = kind == EstimatorKind::factor
                                                            ? config.factor_rule
                                                            : config.poet_rule;
                            pd = ensure_positive_definite(est, rule, C);
                            report.warnings.push_back(
                                date + ": " + to_string(kind) + " estimate re-thresholded at C=" +
                                fmt(pd->tuning().C) + " for the minimum-variance weights");
                        }
                    }
                    return *pd;
                };

                std::vector<BacktestRecord> rows;
                const std::size_t offset = config.include_equal_weight ? 1 : 0;
                for (std::size_t si = 0; si < names.size(); ++si) {
                    const std::string& name = names[si];
                    const Portfolio w = si < offset
                                            ? equal_weight(N)
                                            : min_variance(pd_estimate(),
                                                           config.min_variance_cs[si - offset]);
                    const AssessmentRow a =
                        assess_portfolio(est_panel, est, fit, w, config.L, config.tau, convention);
                    BacktestRecord r;
                    r.date = date;
                    r.strategy = name;
                    r.estimator = kind;
                    r.estimated_variance = a.variance_hat;
                    r.actual_variance = (held * w.weights()).squaredNorm() / static_cast<double>(hold);
                    r.delta = std::abs(r.actual_variance - r.estimated_variance);
                    r.u = a.u_variance;
                    r.true_risk_error = std::abs(std::sqrt(r.actual_variance) - a.risk_hat);
                    r.estimated_risk_error = a.u_risk;
                    r.clamped = a.clamped;
                    if (a.clamped) {
                        report.warnings.push_back(date + ": " + name + "/" + to_string(kind) +
                                                  ": long-run variance clamped at zero");
                    }
                    rows.push_back(std::move(r));
                }
                report.records.insert(report.records.end(), rows.begin(), rows.end());
            } catch (const std::exception& e) {
                report.warnings.push_back(date + ": " + to_string(kind) +
                                          " skipped: " + e.what());
            }
        }
    }
    report.averages = average_records(report.records, config);
    return report;
}

namespace {

std::vector<BacktestAverage> average_groups(const std::vector<BacktestRecord>& records,
                                            const std::vector<EstimatorKind>& kinds,
                                            const std::vector<std::string>& strategies) {
    std::vector<BacktestAverage> out;
    for (EstimatorKind kind : kinds) {
        for (const std::string& name : strategies) {
            BacktestAverage a;
            a.strategy = name;
            a.estimator = kind;
            for (const BacktestRecord& r : records) {
                if (r.estimator != kind || r.strategy != name) continue;
                ++a.windows;
                a.delta += r.delta;
                a.u += r.u;
                a.estimated_risk += std::sqrt(r.estimated_variance);
                a.actual_risk += std::sqrt(r.actual_variance);
                a.true_risk_error += r.true_risk_error;
                a.estimated_risk_error += r.estimated_risk_error;
            }
            if (a.windows > 0) {
                const double n = static_cast<double>(a.windows);
                a.delta /= n;
                a.u /= n;
                a.estimated_risk /= n;
                a.actual_risk /= n;
                a.true_risk_error /= n;
                a.estimated_risk_error /= n;
            }
            out.push_back(a);
        }
    }
    return out;
}

}  // namespace

std::vector<BacktestAverage> average_records(const std::vector<BacktestRecord>& records,
                                             const EmpiricalConfig& config) {
    return average_groups(records, config.estimators, strategy_names(config));
}

std::vector<BacktestAverage> average_records(const std::vector<BacktestRecord>& records) {
    std::vector<EstimatorKind> kinds;
    std::vector<std::string> strategies;
    for (const BacktestRecord& r : records) {
        if (std::find(kinds.begin(), kinds.end(), r.estimator) == kinds.end()) {
            kinds.push_back(r.estimator);
        }
        if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end()) {
            strategies.push_back(r.strategy);
        }
    }
    std::vector<BacktestAverage> out = average_groups(records, kinds, strategies);
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const BacktestAverage& a) { return a.windows == 0; }),
              out.end());
    return out;
}

BacktestReport read_backtest_records_csv(std::istream& in, const std::string& source) {
    static const std::string header =
        "date,strategy,estimator,estimated_variance,actual_variance,delta,u,"
        "true_risk_error,estimated_risk_error,clamped";
    BacktestReport report;
    std::string line;
    std::size_t line_no = 0;
    bool seen_header = false;
    std::vector<std::string> dates;
    auto fail = [&](const std::string& msg) {
        throw DataError(source + ": line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!seen_header) {
            if (line != header) fail("unexpected header '" + line + "'");
            seen_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10) fail("expected 10 fields, got " + std::to_string(cells.size()));
        BacktestRecord r;
        r.date = cells[0];
        r.strategy = cells[1];
        try {
            r.estimator = parse_estimator_kind(cells[2]);
            double* targets[] = {&r.estimated_variance, &r.actual_variance, &r.delta, &r.u,
                                 &r.true_risk_error, &r.estimated_risk_error};
            for (int j = 0; j < 6; ++j) {
                std::size_t used = 0;
                *targets[j] = std::stod(cells[3 + j], &used);
                if (used != cells[3 + j].size()) throw std::invalid_argument(cells[3 + j]);
            }
        } catch (const std::exception& e) {
            fail(std::string("bad value: ") + e.what());
        }
        if (cells[9] != "true" && cells[9] != "false") fail("clamped must be true or false");
        r.clamped = cells[9] == "true";
        if (r.actual_variance < 0.0 || r.estimated_variance < 0.0) fail("negative variance");
        if (std::find(dates.begin(), dates.end(), r.date) == dates.end()) dates.push_back(r.date);
        report.records.push_back(std::move(r));
    }
    if (!seen_header) throw DataError(source + ": missing header");
    report.rebalances = static_cast<Eigen::Index>(dates.size());
    report.averages = average_records(report.records);
    return report;
}

std::pair<ReturnsPanel, FactorPanel> synthetic_market(const CalibrationParams& params,
                                                      Eigen::Index N, Eigen::Index T,
                                                      std::uint64_t seed) {
    Rng model_rng = make_rng(derive_seed(seed, {0}));
    Rng data_rng = make_rng(derive_seed(seed, {1}));
    const ModelInstance model = generate_model(params, N, model_rng);
    SimulatedPanel sim = simulate_panel(params, model, T, data_rng);
    return {ReturnsPanel::from_matrix(std::move(sim.returns)),
            FactorPanel::from_matrix(std::move(sim.factors))};
}

void write_backtest_records_csv(std::ostream& out, const BacktestReport& report) {
    out << "date,strategy,estimator,estimated_variance,actual_variance,delta,u,"
           "true_risk_error,estimated_risk_error,clamped\n";
    for (const BacktestRecord& r : report.records) {
        out << r.date << ',' << r.strategy << ',' << to_string(r.estimator) << ','
            << fmt17(r.estimated_variance) << ',' << fmt17(r.actual_variance) << ','
            << fmt17(r.delta) << ',' << fmt17(r.u) << ',' << fmt17(r.true_risk_error) << ','
            << fmt17(r.estimated_risk_error) << ',' << (r.clamped ? "true" : "false") << '\n';
    }
}

void write_backtest_averages_csv(std::ostream& out, const BacktestReport& report,
                                 double periods_per_year) {
    const double ann = 100.0 * std::sqrt(periods_per_year);
    out << "estimator,strategy,windows,delta_e4,u_e4,true_risk_pct,estimated_risk_pct,"
           "true_risk_error_pct,estimated_risk_error_pct\n";
    for (const BacktestAverage& a : report.averages) {
        out << to_string(a.estimator) << ',' << a.strategy << ',' << a.windows << ','
            << fmt17(1e4 * a.delta) << ',' << fmt17(1e4 * a.u) << ','
            << fmt17(ann * a.actual_risk) << ',' << fmt17(ann * a.estimated_risk) << ','
            << fmt17(ann * a.true_risk_error) << ',' << fmt17(ann * a.estimated_risk_error)
            << '\n';
    }
}

void write_backtest_markdown(std::ostream& out, const BacktestReport& report,
                             double periods_per_year) {
    const double ann = 100.0 * std::sqrt(periods_per_year);
    out << "# Rolling backtest\n\n" << report.rebalances << " rebalances.\n\n";
    out << "| estimator | strategy | mean delta (1e-4) | mean U (1e-4) | true risk | "
           "true risk error | estimated risk error |\n";
    out << "|---|---|---|---|---|---|---|\n";
    char buf[256];
    for (const BacktestAverage& a : report.averages) {
        std::snprintf(buf, sizeof buf, "| %s | %s | %.3f | %.3f | %.2f%% | %.2f%% | %.2f%% |\n",
                      to_string(a.estimator).c_str(), a.strategy.c_str(), 1e4 * a.delta,
                      1e4 * a.u, ann * a.actual_risk, ann * a.true_risk_error,
                      ann * a.estimated_risk_error);
        out << buf;
    }
    if (!report.warnings.empty()) {
        out << "\n" << report.warnings.size() << " warnings; see the records file.\n";
    }
}

}  // namespace prl
