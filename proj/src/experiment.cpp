#include "prl/experiment.hpp"

#include "prl/errors.hpp"
#include "prl/linalg.hpp"
#include "prl/portfolio.hpp"
#include "prl/risk.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace prl {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct EstimatorState {
    EstimatorKind kind;
    Eigen::MatrixXd error;     ///< Sigma_hat - Sigma
    double max_error = 0.0;
    Eigen::MatrixXd series_map;  ///< T x N map from weights to the risk series
    Eigen::MatrixXd centre_form; ///< N x N quadratic form giving the centre
};

/// Maps a weight vector to the series whose squares feed the long-run variance.
EstimatorState prepare(EstimatorKind kind, const ExperimentConfig& config,
                       const ReturnsPanel& panel, const FactorPanel& factors,
                       const CovarianceEstimate& sample, const Eigen::MatrixXd& truth) {
    EstimatorState st{kind, {}, 0.0, {}, {}};
    switch (kind) {
        case EstimatorKind::sample: {
            st.error = sample.matrix() - truth;
            st.series_map = demean_columns(panel.values());
            st.centre_form = sample.matrix();
            break;
        }
        case EstimatorKind::factor: {
            const FactorModelFit fit = ols_factor_fit(panel, factors);
            const CovarianceEstimate est =
                factor_covariance(fit, config.factor_rule, config.factor_C);
            st.error = est.matrix() - truth;
            st.series_map = fit.factors * fit.loadings.transpose();
            st.centre_form = fit.loadings * fit.factor_cov * fit.loadings.transpose();
            break;
        }
        case EstimatorKind::poet: {
            const FactorModelFit fit = pca_factor_fit(panel, config.poet_K);
            const CovarianceEstimate est =
                poet_covariance(fit, sample, config.poet_rule, config.poet_C);
            st.error = est.matrix() - truth;
            st.series_map = fit.factors * fit.loadings.transpose();
            st.centre_form = fit.loadings * fit.loadings.transpose();
            break;
        }
    }
    st.max_error = st.error.cwiseAbs().maxCoeff();
    return st;
}

double sample_variance(const std::vector<double>& x, double& se) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double v : x) {
        const double d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    const double var = m2 / (n - 1.0);
    const double s2 = m2 / n;
    se = std::sqrt(std::max(m4 / n - s2 * s2, 0.0) / n);
    return var;
}

}  // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& msg) {
        throw std::invalid_argument(key + ": " + msg);
    };
    if (Ns.empty()) fail("Ns", "must list at least one N");
    if (Ts.empty()) fail("Ts", "must list at least one T");
    if (cs.empty()) fail("cs", "must list at least one gross exposure");
    if (estimators.empty()) fail("estimators", "must list at least one estimator");
    for (auto n : Ns) {
        if (n < 2) fail("Ns", "every N must be at least 2");
        if (n <= poet_K && std::find(estimators.begin(), estimators.end(), EstimatorKind::poet) !=
                               estimators.end()) {
            fail("Ns", "every N must exceed poet_K");
        }
    }
    for (auto t : Ts) {
        if (t < 5) fail("Ts", "every T must be at least 5");
        if (t <= L) fail("L", "must be smaller than every T");
        if (t <= poet_K) fail("Ts", "every T must exceed poet_K");
    }
    for (double c : cs) {
        if (!(c >= 1.0) || !std::isfinite(c)) fail("cs", "gross exposures must be >= 1");
        if (c > 1.0 && std::find_if(Ns.begin(), Ns.end(), [](auto n) { return n < 2; }) != Ns.end()) {
            fail("cs", "c > 1 needs N >= 2");
        }
    }
    if (L < 0) fail("L", "must be non-negative");
    if (!(tau > 0.0 && tau < 1.0)) fail("tau", "must lie in (0, 1)");
    if (portfolios_per_rep < 1) fail("portfolios_per_rep", "must be at least 1");
    if (replications < 1) fail("replications", "must be at least 1");
    if (!(factor_C >= 0.0)) fail("factor_C", "must be non-negative");
    if (!(poet_C >= 0.0)) fail("poet_C", "must be non-negative");
    if (poet_K < 1) fail("poet_K", "must be at least 1");
    try {
        factor_rule.validate();
        poet_rule.validate();
        calibration.validate();
    } catch (const std::invalid_argument& e) {
        fail("calibration", e.what());
    }
}

std::vector<Cell> grid_cells(const ExperimentConfig& config) {
    std::vector<Cell> cells;
    for (auto n : config.Ns) {
        for (auto t : config.Ts) cells.push_back({n, t});
    }
    return cells;
}

std::uint64_t replication_seed(std::uint64_t base_seed, const Cell& cell, int replication) {
    return derive_seed(base_seed, {static_cast<std::uint64_t>(cell.N),
                                   static_cast<std::uint64_t>(cell.T),
                                   static_cast<std::uint64_t>(replication)});
}

ReplicationRecord run_replication(const ExperimentConfig& config, const Cell& cell,
                                  int replication) {
    ReplicationRecord rec;
    rec.cell = cell;
    rec.replication = replication;
    rec.seed = replication_seed(config.base_seed, cell, replication);

    Rng model_rng = make_rng(derive_seed(rec.seed, {0}));
    Rng data_rng = make_rng(derive_seed(rec.seed, {1}));
    const ModelInstance model = generate_model(config.calibration, cell.N, model_rng);
    rec.error_threshold = model.threshold;
    rec.min_true_eigenvalue = sym_eigenvalues(model.Sigma_true).minCoeff();

    SimulatedPanel sim = simulate_panel(config.calibration, model, cell.T, data_rng);
    const ReturnsPanel panel = ReturnsPanel::from_matrix(std::move(sim.returns));
    const FactorPanel factors = FactorPanel::from_matrix(std::move(sim.factors));
    const CovarianceEstimate sample = sample_covariance(panel);

    std::vector<EstimatorState> states;
    for (EstimatorKind kind : config.estimators) {
        states.push_back(prepare(kind, config, panel, factors, sample, model.Sigma_true));
    }

    const double z = hclub_z(config.tau, config.paper_z ? ZConvention::paper : ZConvention::exact);
    const double t = static_cast<double>(cell.T);
    const auto P = static_cast<Eigen::Index>(config.portfolios_per_rep);
    for (double c : config.cs) {
        Rng port_rng = make_rng(derive_seed(rec.seed, {2, std::bit_cast<std::uint64_t>(c)}));
        Eigen::MatrixXd W(cell.N, P);
        std::vector<PortfolioOutcome> outcomes(static_cast<std::size_t>(P));
        for (Eigen::Index p = 0; p < P; ++p) {
            const Portfolio w = sample_random_portfolio(cell.N, c, port_rng);
            W.col(p) = w.weights();
            outcomes[p].gross_exposure = w.gross_exposure();
        }
        const Eigen::MatrixXd truth_w = model.Sigma_true * W;
        for (Eigen::Index p = 0; p < P; ++p) {
            outcomes[p].true_variance = W.col(p).dot(truth_w.col(p));
        }
        for (const EstimatorState& st : states) {
            const Eigen::MatrixXd err_w = st.error * W;
            const Eigen::MatrixXd series = st.series_map * W;
            const Eigen::MatrixXd centre_w = st.centre_form * W;
            for (Eigen::Index p = 0; p < P; ++p) {
                PortfolioOutcome& out = outcomes[p];
                EstimatorOutcome e;
                e.delta = std::abs(W.col(p).dot(err_w.col(p)));
                e.xi = out.gross_exposure * out.gross_exposure * st.max_error;
                const double centre = W.col(p).dot(centre_w.col(p));
                const LongRunVariance lrv = long_run_variance(series.col(p), centre, config.L);
                e.clamped = lrv.clamped;
                e.u = z * std::sqrt(lrv.sigma2 / t);
                e.covered = e.delta <= e.u;
                if (e.u > 0.0) {
                    e.re1 = e.xi / e.u;
                    e.re2 = e.u / (4.0 * out.true_variance);
                } else {
                    e.re1 = std::numeric_limits<double>::quiet_NaN();
                    e.re2 = std::numeric_limits<double>::quiet_NaN();
                }
                out.by_estimator.push_back(e);
            }
        }
        rec.by_c.push_back(std::move(outcomes));
    }
    return rec;
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    double total = 0.0;
    for (double v : values) {
        if (std::isfinite(v)) {
            total += v;
            ++s.n;
        }
    }
    if (s.n == 0) return s;
    s.mean = total / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) {
            if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

const CellReport& ExperimentReport::find(Eigen::Index N, Eigen::Index T, double c,
                                         EstimatorKind kind) const {
    for (const CellReport& r : rows) {
        if (r.N == N && r.T == T && r.c == c && r.estimator == kind) return r;
    }
    throw std::out_of_range("ExperimentReport: no row for N=" + std::to_string(N) +
                            " T=" + std::to_string(T) + " c=" + fmt(c) + " " + to_string(kind));
}

ExperimentReport aggregate(const ExperimentConfig& config, std::vector<ReplicationRecord> records) {
    ExperimentReport report;
    report.min_true_eigenvalue = std::numeric_limits<double>::infinity();
    for (const ReplicationRecord& r : records) {
        report.min_true_eigenvalue = std::min(report.min_true_eigenvalue, r.min_true_eigenvalue);
    }
    for (const Cell& cell : grid_cells(config)) {
        std::vector<const ReplicationRecord*> mine;
        for (const ReplicationRecord& r : records) {
            if (r.cell.N == cell.N && r.cell.T == cell.T) mine.push_back(&r);
        }
        for (std::size_t ci = 0; ci < config.cs.size(); ++ci) {
            std::vector<double> risk;
            for (const ReplicationRecord* r : mine) {
                for (const PortfolioOutcome& p : r->by_c[ci]) risk.push_back(std::sqrt(p.true_variance));
            }
            const Summary risk_summary = summarize(risk);
            for (std::size_t ei = 0; ei < config.estimators.size(); ++ei) {
                std::vector<double> delta, xi, u, re1, re2;
                long covered = 0;
                long clamped = 0;
                for (const ReplicationRecord* r : mine) {
                    for (const PortfolioOutcome& p : r->by_c[ci]) {
                        const EstimatorOutcome& e = p.by_estimator[ei];
                        delta.push_back(e.delta);
                        xi.push_back(e.xi);
                        u.push_back(e.u);
                        re1.push_back(e.re1);
                        re2.push_back(e.re2);
                        covered += e.covered ? 1 : 0;
                        clamped += e.clamped ? 1 : 0;
                        if (e.xi < e.delta) ++report.bound_violations;
                        ++report.pairs;
                    }
                }
                CellReport row;
                row.N = cell.N;
                row.T = cell.T;
                row.c = config.cs[ci];
                row.estimator = config.estimators[ei];
                row.replications = static_cast<int>(mine.size());
                row.portfolios = static_cast<long>(delta.size());
                row.delta = summarize(delta);
                row.xi = summarize(xi);
                row.u = summarize(u);
                row.re1 = summarize(re1);
                row.re2 = summarize(re2);
                row.risk = risk_summary;
                row.coverage = delta.empty() ? 0.0
                                             : static_cast<double>(covered) /
                                                   static_cast<double>(delta.size());
                row.clamped = clamped;
                report.rows.push_back(row);
            }
        }
    }
    report.records = std::move(records);
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, int workers) {
    config.validate();
    const std::vector<Cell> cells = grid_cells(config);
    const std::size_t reps = static_cast<std::size_t>(config.replications);
    const std::size_t total = cells.size() * reps;
    std::vector<ReplicationRecord> records(total);
    std::vector<std::exception_ptr> errors(total);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total || failed.load()) return;
            try {
                records[i] = run_replication(config, cells[i / reps], static_cast<int>(i % reps));
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(total)));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return aggregate(config, std::move(records));
}

int default_worker_count() {
    if (const char* env = std::getenv("PRL_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

DecompositionResult variance_decomposition_study(const CalibrationParams& params, Eigen::Index N,
                                                 Eigen::Index T, long replications,
                                                 std::uint64_t seed) {
    if (replications < 2) throw std::invalid_argument("variance_decomposition_study: need >= 2 replications");
    Rng model_rng = make_rng(derive_seed(seed, {0}));
    const ModelInstance model = generate_model(params, N, model_rng);
    Rng port_rng = make_rng(derive_seed(seed, {1}));
    const Eigen::VectorXd w = sample_random_portfolio(N, 1.0, port_rng).weights();
    const Eigen::VectorXd bw = model.B.transpose() * w;

    std::vector<double> total, systematic, idiosyncratic, cross;
    DecompositionResult out;
    for (long r = 0; r < replications; ++r) {
        Rng rng = make_rng(derive_seed(seed, {2, static_cast<std::uint64_t>(r)}));
        const SimulatedPanel sim = simulate_panel(params, model, T, rng);
        const Eigen::VectorXd a = sim.factors * bw;
        const Eigen::VectorXd b = sim.errors * w;
        const Eigen::VectorXd y = sim.returns * w;
        for (Eigen::Index t = 0; t < T; ++t) {
            const double gap = std::abs(y(t) * y(t) - a(t) * a(t) - 2.0 * a(t) * b(t) - b(t) * b(t));
            out.max_identity_gap = std::max(out.max_identity_gap, gap);
        }
        total.push_back(y.squaredNorm());
        systematic.push_back(a.squaredNorm());
        idiosyncratic.push_back(b.squaredNorm());
        cross.push_back(2.0 * a.dot(b));
    }
    out.replications = replications;
    out.var_total = sample_variance(total, out.se_total);
    out.var_systematic = sample_variance(systematic, out.se_systematic);
    out.var_idiosyncratic = sample_variance(idiosyncratic, out.se_idiosyncratic);
    out.var_cross = sample_variance(cross, out.se_cross);
    return out;
}

double annualized_risk_percent(double variance, double periods_per_year) {
    return 100.0 * std::sqrt(std::max(variance, 0.0) * periods_per_year);
}

const std::vector<std::string>& cell_csv_columns() {
    static const std::vector<std::string> cols = {
        "N",        "T",       "c",        "estimator", "replications", "portfolios",
        "mean_delta", "sd_delta", "mean_xi", "sd_xi",    "mean_u",       "sd_u",
        "mean_re1", "sd_re1",  "mean_re2", "sd_re2",    "mean_risk",    "sd_risk",
        "mean_risk_annual_pct", "coverage", "clamped"};
    return cols;
}

namespace {

void write_cell_rows(std::ostream& out, const ExperimentReport& report, const Cell* only) {
    const auto& cols = cell_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const CellReport& r : report.rows) {
        if (only && (r.N != only->N || r.T != only->T)) continue;
        out << r.N << ',' << r.T << ',' << fmt(r.c) << ',' << to_string(r.estimator) << ','
            << r.replications << ',' << r.portfolios << ',' << fmt(r.delta.mean) << ','
            << fmt(r.delta.sd) << ',' << fmt(r.xi.mean) << ',' << fmt(r.xi.sd) << ','
            << fmt(r.u.mean) << ',' << fmt(r.u.sd) << ',' << fmt(r.re1.mean) << ','
            << fmt(r.re1.sd) << ',' << fmt(r.re2.mean) << ',' << fmt(r.re2.sd) << ','
            << fmt(r.risk.mean) << ',' << fmt(r.risk.sd) << ','
            << fmt(annualized_risk_percent(r.risk.mean * r.risk.mean)) << ',' << fmt(r.coverage)
            << ',' << r.clamped << '\n';
    }
}

}  // namespace

void write_cell_csv(std::ostream& out, const ExperimentReport& report, Eigen::Index N,
                    Eigen::Index T) {
    const Cell cell{N, T};
    write_cell_rows(out, report, &cell);
}

void write_cells_csv(std::ostream& out, const ExperimentReport& report) {
    write_cell_rows(out, report, nullptr);
}

void write_markdown_summary(std::ostream& out, const ExperimentConfig& config,
                            const ExperimentReport& report) {
    out << "# Simulation summary\n\n";
    out << "Replications per cell: " << config.replications
        << ", portfolios per replication: " << config.portfolios_per_rep << ", L = " << config.L
        << ", tau = " << fmt(config.tau) << (config.paper_z ? " (rounded z)" : "") << ".\n\n";
    out << "Crude bound below |w'(S-Sigma)w| in " << report.bound_violations << " of "
        << report.pairs << " portfolio draws.\n\n";

    const std::vector<std::string> head = {"N",    "T",    "c",    "estimator", "risk % p.a.",
                                           "mean delta", "mean U", "mean xi", "RE1",
                                           "RE2 %", "coverage"};
    std::vector<std::vector<std::string>> body;
    char buf[64];
    for (const CellReport& r : report.rows) {
        std::vector<std::string> line;
        line.push_back(std::to_string(r.N));
        line.push_back(std::to_string(r.T));
        line.push_back(fmt(r.c));
        line.push_back(to_string(r.estimator));
        std::snprintf(buf, sizeof buf, "%.2f", annualized_risk_percent(r.risk.mean * r.risk.mean));
        line.push_back(buf);
        std::snprintf(buf, sizeof buf, "%.4e", r.delta.mean);
        line.push_back(buf);
        std::snprintf(buf, sizeof buf, "%.4e", r.u.mean);
        line.push_back(buf);
        std::snprintf(buf, sizeof buf, "%.4e", r.xi.mean);
        line.push_back(buf);
        std::snprintf(buf, sizeof buf, "%.3f (%.3f)", r.re1.mean, r.re1.sd);
        line.push_back(buf);
        std::snprintf(buf, sizeof buf, "%.2f (%.2f)", 100.0 * r.re2.mean, 100.0 * r.re2.sd);
        line.push_back(buf);
        std::snprintf(buf, sizeof buf, "%.3f", r.coverage);
        line.push_back(buf);
        body.push_back(std::move(line));
    }
    std::vector<std::size_t> width(head.size());
    for (std::size_t j = 0; j < head.size(); ++j) {
        width[j] = head[j].size();
        for (const auto& line : body) width[j] = std::max(width[j], line[j].size());
    }
    auto emit = [&](const std::vector<std::string>& line) {
        out << '|';
        for (std::size_t j = 0; j < line.size(); ++j) {
            out << ' ' << line[j] << std::string(width[j] - line[j].size(), ' ') << " |";
        }
        out << '\n';
    };
    emit(head);
    out << '|';
    for (std::size_t j = 0; j < head.size(); ++j) out << std::string(width[j] + 2, '-') << '|';
    out << '\n';
    for (const auto& line : body) emit(line);
}

void write_risk_curve_csv(std::ostream& out, const ExperimentReport& report) {
    out << "N,T,c,mean_risk,mean_risk_annual_pct\n";
    for (const CellReport& r : report.rows) {
        // risk does not depend on the estimator; emit it once per (N, T, c)
        if (&r != &report.find(r.N, r.T, r.c, report.rows.front().estimator)) continue;
        out << r.N << ',' << r.T << ',' << fmt(r.c) << ',' << fmt(r.risk.mean) << ','
            << fmt(annualized_risk_percent(r.risk.mean * r.risk.mean)) << '\n';
    }
}

void write_bounds_curve_csv(std::ostream& out, const ExperimentReport& report, EstimatorKind kind) {
    out << "N,T,c,mean_delta,mean_u,mean_xi,mean_risk\n";
    for (const CellReport& r : report.rows) {
        if (r.estimator != kind) continue;
        out << r.N << ',' << r.T << ',' << fmt(r.c) << ',' << fmt(r.delta.mean) << ','
            << fmt(r.u.mean) << ',' << fmt(r.xi.mean) << ',' << fmt(r.risk.mean) << '\n';
    }
}

}  // namespace prl
