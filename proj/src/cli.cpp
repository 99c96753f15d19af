#include "prl/cli.hpp"

#include "prl/config.hpp"
#include "prl/covariance.hpp"
#include "prl/empirical.hpp"
#include "prl/errors.hpp"
#include "prl/experiment.hpp"
#include "prl/portfolio.hpp"
#include "prl/risk.hpp"
#include "prl/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>

namespace prl {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct GlobalArgs {
    std::uint64_t seed = 20120629;
    int threads = 0;
    std::string output_dir = ".";
};

struct DataArgs {
    std::string returns;
    std::string factors;
    std::string riskfree;
    std::string riskfree_file;
    std::vector<std::string> exclude;
    bool percent = false;
};

struct EstimatorArgs {
    std::string estimator = "sample";
    int k = 3;
    std::optional<double> c_const;
    std::string rule;
    double scad_a = 3.7;
    std::string weights;
    bool equal = false;
};

struct HclubArgs {
    double tau = 0.05;
    int lags = 5;
    bool paper_z = false;
    double periods_per_year = 252.0;
};

struct Inputs {
    std::optional<ReturnsPanel> returns;
    std::optional<FactorPanel> factors;
};

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

fs::path prepare_dir(const GlobalArgs& g) {
    const fs::path dir(g.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + g.output_dir + "': " + ec.message());
    return dir;
}

/// Risk-free values on the returns panel's dates.
DatedSeries riskfree_on(const DatedSeries& rf, const std::vector<std::string>& dates) {
    std::map<std::string, double> by_date;
    for (std::size_t i = 0; i < rf.dates.size(); ++i) by_date[rf.dates[i]] = rf.values(static_cast<Eigen::Index>(i));
    DatedSeries out{dates, Eigen::VectorXd(static_cast<Eigen::Index>(dates.size()))};
    for (std::size_t i = 0; i < dates.size(); ++i) {
        const auto it = by_date.find(dates[i]);
        if (it == by_date.end()) throw DataError("no risk-free rate for date '" + dates[i] + "'");
        out.values(static_cast<Eigen::Index>(i)) = it->second;
    }
    return out;
}

Inputs load_inputs(const DataArgs& a) {
    ParseOptions opt;
    opt.percent_units = a.percent;
    opt.excluded_columns = a.exclude;
    if (!a.riskfree.empty()) opt.riskfree_column = a.riskfree;

    Inputs in;
    in.returns = load_returns_csv(a.returns, opt);
    if (!a.factors.empty()) {
        in.factors = load_factors_csv(a.factors, opt);
        auto [r, f] = align_panels(*in.returns, *in.factors);
        in.returns = std::move(r);
        in.factors = std::move(f);
    }
    if (!a.riskfree.empty()) {
        const std::string& source = !a.riskfree_file.empty() ? a.riskfree_file
                                    : !a.factors.empty()     ? a.factors
                                                             : a.returns;
        const DatedSeries rf = load_column_csv(source, a.riskfree, opt);
        in.returns = compute_excess_returns(*in.returns, riskfree_on(rf, in.returns->dates()));
    }
    return in;
}

struct Built {
    std::optional<CovarianceEstimate> estimate;
    std::optional<FactorModelFit> fit;
};

ThresholdRule resolve_rule(const EstimatorArgs& a, ThresholdRule fallback) {
    if (a.rule.empty()) return fallback;
    ThresholdRule rule{parse_threshold_kind(a.rule), a.scad_a};
    rule.validate();
    return rule;
}

Built build_estimator(const EstimatorArgs& a, const Inputs& in) {
    const EstimatorKind kind = parse_estimator_kind(a.estimator);
    Built b;
    switch (kind) {
        case EstimatorKind::sample:
            b.estimate = sample_covariance(*in.returns);
            break;
        case EstimatorKind::factor:
            if (!in.factors) throw std::invalid_argument("--factors is required with --estimator factor");
            b.fit = ols_factor_fit(*in.returns, *in.factors);
            b.estimate = factor_covariance(*b.fit, resolve_rule(a, ThresholdRule::hard()),
                                           a.c_const.value_or(0.3));
            break;
        case EstimatorKind::poet: {
            if (a.k < 1) throw std::invalid_argument("--k must be at least 1");
            b.fit = pca_factor_fit(*in.returns, a.k);
            b.estimate = poet_covariance(*b.fit, sample_covariance(*in.returns),
                                         resolve_rule(a, ThresholdRule::soft()),
                                         a.c_const.value_or(0.5));
            break;
        }
    }
    return b;
}

/// Weights from --weights, matched to the panel's assets by name, or equal weights.
Portfolio resolve_weights(const EstimatorArgs& a, const ReturnsPanel& panel) {
    if (a.weights.empty()) return equal_weight(panel.N());
    const auto [labels, w] = read_portfolio_csv(a.weights);
    if (labels == panel.assets()) return w;
    if (labels.size() != panel.assets().size()) {
        throw DataError(a.weights + ": " + std::to_string(labels.size()) + " weights for " +
                        std::to_string(panel.N()) + " assets");
    }
    Eigen::VectorXd ordered(panel.N());
    for (Eigen::Index i = 0; i < panel.N(); ++i) {
        const auto it = std::find(labels.begin(), labels.end(), panel.assets()[static_cast<std::size_t>(i)]);
        if (it == labels.end()) {
            throw DataError(a.weights + ": no weight for asset '" +
                            panel.assets()[static_cast<std::size_t>(i)] + "'");
        }
        ordered(i) = w.weights()(std::distance(labels.begin(), it));
    }
    return Portfolio(std::move(ordered));
}

std::string canonical_inputs(const DataArgs& d, const EstimatorArgs& e) {
    std::ostringstream s;
    s << "returns=" << d.returns << "\nfactors=" << d.factors << "\nriskfree=" << d.riskfree
      << "\nriskfree_file=" << d.riskfree_file << "\npercent=" << d.percent << "\nexclude=";
    for (const auto& x : d.exclude) s << x << ';';
    s << "\nestimator=" << e.estimator << "\nk=" << e.k
      << "\nc_const=" << (e.c_const ? fmt(*e.c_const) : "default") << "\nrule=" << e.rule
      << "\nscad_a=" << fmt(e.scad_a) << "\nweights=" << (e.weights.empty() ? "equal" : e.weights)
      << '\n';
    return s.str();
}

void add_data_options(CLI::App* cmd, DataArgs& d) {
    cmd->add_option("--returns", d.returns, "Returns CSV (date column, one column per asset)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--factors", d.factors, "Observed factor CSV")->check(CLI::ExistingFile);
    cmd->add_flag("--percent", d.percent, "Input values are percentages");
    cmd->add_option("--riskfree", d.riskfree,
                    "Risk-free column; returns become excess returns and the column is dropped");
    cmd->add_option("--riskfree-file", d.riskfree_file,
                    "File holding the risk-free column (default: factors file, else returns file)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--exclude", d.exclude, "Columns to ignore")->delimiter(',');
}

void add_estimator_options(CLI::App* cmd, EstimatorArgs& e) {
    cmd->add_option("--estimator", e.estimator, "sample, factor or poet")
        ->check(CLI::IsMember({"sample", "factor", "poet"}));
    cmd->add_option("--k", e.k, "Number of principal components for poet");
    cmd->add_option("--c-const", e.c_const,
                    "Threshold constant (default 0.3 for factor, 0.5 for poet)");
    cmd->add_option("--rule", e.rule, "Threshold rule: hard, soft or scad")
        ->check(CLI::IsMember({"hard", "soft", "scad"}));
    cmd->add_option("--scad-a", e.scad_a, "SCAD shape parameter (> 2)");
    auto* weights = cmd->add_option("--weights", e.weights, "Portfolio CSV (asset,weight)")
                        ->check(CLI::ExistingFile);
    auto* equal = cmd->add_flag("--equal", e.equal, "Equal weights (the default)");
    weights->excludes(equal);
}

int cmd_estimate(const GlobalArgs& g, const DataArgs& d, const EstimatorArgs& e, bool binary,
                 std::ostream& out) {
    const Inputs in = load_inputs(d);
    const Built b = build_estimator(e, in);
    const Portfolio w = resolve_weights(e, *in.returns);
    const CovarianceEstimate& est = *b.estimate;

    const std::string header = provenance_line(g.seed, fnv1a64(canonical_inputs(d, e)));
    const fs::path dir = prepare_dir(g);
    write_covariance_csv(est, (dir / "covariance.csv").string(), header);
    if (binary) write_covariance_binary(est, (dir / "covariance.bin").string());

    const double variance = portfolio_variance(est, w);
    std::ostringstream row;
    row << "estimator,N,T,K,C,rule,gross_exposure,variance,risk,annualized_risk_pct,min_eigenvalue\n"
        << to_string(est.kind()) << ',' << est.N() << ',' << in.returns->T() << ','
        << (b.fit ? std::to_string(b.fit->K()) : "") << ','
        << (est.kind() == EstimatorKind::sample ? "" : fmt(est.tuning().C)) << ','
        << (est.kind() == EstimatorKind::sample ? "" : to_string(est.tuning().rule.kind)) << ','
        << fmt(w.gross_exposure()) << ',' << fmt(variance) << ',' << fmt(std::sqrt(variance))
        << ',' << fmt(annualized_risk_percent(variance)) << ',' << fmt(est.min_eigenvalue())
        << '\n';
    std::ofstream file = open_output(dir / "risk_summary.csv");
    file << "# " << header << '\n' << row.str();
    out << "# " << header << '\n' << row.str();
    return exit_ok;
}

int cmd_hclub(const GlobalArgs& g, const DataArgs& d, const EstimatorArgs& e, const HclubArgs& h,
              std::ostream& out, std::ostream& err) {
    if (!(h.tau > 0.0 && h.tau < 1.0)) throw std::invalid_argument("--tau must lie in (0, 1)");
    if (h.lags < 0) throw std::invalid_argument("--lags must be non-negative");
    const Inputs in = load_inputs(d);
    if (h.lags >= in.returns->T()) throw std::invalid_argument("--lags must be below T");
    const Built b = build_estimator(e, in);
    const Portfolio w = resolve_weights(e, *in.returns);
    const AssessmentRow row =
        assess_portfolio(*in.returns, *b.estimate, b.fit ? &*b.fit : nullptr, w, h.lags, h.tau,
                         h.paper_z ? ZConvention::paper : ZConvention::exact);

    std::string canon = canonical_inputs(d, e);
    canon += "tau=" + fmt(h.tau) + "\nlags=" + std::to_string(h.lags) +
             "\npaper_z=" + std::to_string(h.paper_z) + '\n';
    const std::string header = provenance_line(g.seed, fnv1a64(canon));
    const fs::path dir = prepare_dir(g);
    std::ofstream file = open_output(dir / "hclub.csv");
    file << "# " << header << '\n';
    write_assessment_header(file);
    write_assessment_row(file, row);

    if (row.clamped) {
        err << "warning: long-run variance estimate was negative and has been clamped to zero; "
               "the H-CLUB is zero\n";
    }
    const double ann = std::sqrt(h.periods_per_year);
    out << "# " << header << '\n'
        << "estimator = " << to_string(row.estimator) << '\n'
        << "tau = " << fmt(row.tau) << '\n'
        << "lags = " << row.L << '\n'
        << "variance = " << fmt(row.variance_hat) << '\n'
        << "risk = " << fmt(row.risk_hat) << '\n'
        << "sigma2 = " << fmt(row.sigma2_hat) << '\n'
        << "hclub_variance = " << fmt(row.u_variance) << '\n'
        << "hclub_risk = " << fmt(row.u_risk) << '\n'
        << "risk_interval = [" << fmt(row.risk_hat - row.u_risk) << ", "
        << fmt(row.risk_hat + row.u_risk) << "]\n"
        << "annualized_risk_pct = " << fmt(100.0 * ann * row.risk_hat) << '\n'
        << "annualized_hclub_risk_pct = " << fmt(100.0 * ann * row.u_risk) << '\n';
    return exit_ok;
}

int cmd_sample_portfolios(const GlobalArgs& g, Eigen::Index n, double c, int count,
                          std::ostream& out) {
    if (n < 1) throw std::invalid_argument("--n must be positive");
    if (!(c >= 1.0)) throw std::invalid_argument("--c must be at least 1");
    if (count < 1) throw std::invalid_argument("--count must be positive");
    Rng rng = make_rng(g.seed);
    std::vector<Portfolio> batch;
    batch.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) batch.push_back(sample_random_portfolio(n, c, rng));
    std::vector<std::string> assets;
    for (Eigen::Index i = 0; i < n; ++i) assets.push_back("a" + std::to_string(i + 1));

    const std::string canon = "n=" + std::to_string(n) + "\nc=" + fmt(c) +
                              "\ncount=" + std::to_string(count) + '\n';
    const fs::path dir = prepare_dir(g);
    const fs::path path = dir / "portfolios.csv";
    write_portfolio_batch_csv(batch, assets, path.string(),
                              provenance_line(g.seed, fnv1a64(canon)));
    out << "wrote " << count << " portfolios to " << path.string() << '\n';
    return exit_ok;
}

int cmd_simulate(const GlobalArgs& g, bool seed_given, const std::string& config_path,
                 const std::vector<std::string>& overrides, std::ostream& out) {
    ExperimentConfig config = experiment_config_from(read_key_value_file(config_path));
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + o + "'");
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        apply_setting(config, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
    }
    if (seed_given) config.base_seed = g.seed;
    config = experiment_config_from({}, config);

    const int workers = g.threads > 0 ? g.threads : default_worker_count();
    const ExperimentReport report = run_experiment(config, workers);

    const std::string canon = canonical_string(config);
    const std::string header = "# " + provenance_line(config.base_seed, fnv1a64(canon));
    const fs::path dir = prepare_dir(g);
    {
        std::ofstream f = open_output(dir / "config_resolved.txt");
        f << header << '\n' << canon;
    }
    {
        std::ofstream f = open_output(dir / "cells.csv");
        f << header << '\n';
        write_cells_csv(f, report);
    }
    {
        std::ofstream f = open_output(dir / "risk_curve.csv");
        f << header << '\n';
        write_risk_curve_csv(f, report);
    }
    for (EstimatorKind kind : config.estimators) {
        std::ofstream f = open_output(dir / ("bounds_" + to_string(kind) + ".csv"));
        f << header << '\n';
        write_bounds_curve_csv(f, report, kind);
    }
    std::ostringstream md;
    write_markdown_summary(md, config, report);
    {
        std::ofstream f = open_output(dir / "summary.md");
        f << "<!-- " << header.substr(2) << " -->\n" << md.str();
    }
    out << header << '\n' << md.str();
    return exit_ok;
}

struct EmpiricalArgs {
    std::string estimators;
    std::vector<double> cs{1.0, 1.6};
    bool no_equal = false;
    Eigen::Index estimation_window = 252;
    Eigen::Index holding_window = 21;
    double tau = 0.01;
    int lags = 5;
    bool exact_z = false;
    int k = 3;
    Eigen::Index synthetic_n = 0;
    Eigen::Index synthetic_t = 0;
};

std::string canonical_empirical(const EmpiricalConfig& c) {
    std::ostringstream s;
    s << "estimation_window=" << c.estimation_window << "\nholding_window=" << c.holding_window
      << "\nestimators=";
    for (EstimatorKind k : c.estimators) s << to_string(k) << ';';
    s << "\nequal=" << c.include_equal_weight << "\ncs=";
    for (double x : c.min_variance_cs) s << fmt(x) << ';';
    s << "\ntau=" << fmt(c.tau) << "\npaper_z=" << c.paper_z << "\nL=" << c.L
      << "\nfactor=" << to_string(c.factor_rule.kind) << ',' << fmt(c.factor_C)
      << "\npoet=" << to_string(c.poet_rule.kind) << ',' << fmt(c.poet_C) << ',' << c.poet_K
      << '\n';
    return s.str();
}

void write_backtest_outputs(const fs::path& dir, const std::string& header,
                            const BacktestReport& report, bool with_records, std::ostream& out) {
    if (with_records) {
        std::ofstream f = open_output(dir / "backtest_records.csv");
        f << header << '\n';
        write_backtest_records_csv(f, report);
    }
    {
        std::ofstream f = open_output(dir / "backtest_averages.csv");
        f << header << '\n';
        write_backtest_averages_csv(f, report);
    }
    std::ostringstream md;
    write_backtest_markdown(md, report);
    {
        std::ofstream f = open_output(dir / "backtest.md");
        f << "<!-- " << header.substr(2) << " -->\n" << md.str();
    }
    out << header << '\n' << md.str();
}

int cmd_empirical(const GlobalArgs& g, const DataArgs& d, const EmpiricalArgs& a,
                  std::ostream& out, std::ostream& err) {
    const bool synthetic = a.synthetic_n > 0 || a.synthetic_t > 0;
    if (synthetic == !d.returns.empty()) {
        throw std::invalid_argument("give either --returns or --synthetic-n and --synthetic-t");
    }
    if (synthetic && (a.synthetic_n < 2 || a.synthetic_t < 2)) {
        throw std::invalid_argument("--synthetic-n and --synthetic-t must both be at least 2");
    }

    Inputs in;
    if (synthetic) {
        auto [r, f] = synthetic_market(default_calibration(), a.synthetic_n, a.synthetic_t, g.seed);
        in.returns = std::move(r);
        in.factors = std::move(f);
    } else {
        in = load_inputs(d);
    }

    EmpiricalConfig config;
    config.estimation_window = a.estimation_window;
    config.holding_window = a.holding_window;
    config.include_equal_weight = !a.no_equal;
    config.min_variance_cs = a.cs;
    config.tau = a.tau;
    config.L = a.lags;
    config.paper_z = !a.exact_z;
    config.poet_K = a.k;
    if (!a.estimators.empty()) {
        config.estimators.clear();
        for (const std::string& name : split_list(a.estimators)) {
            config.estimators.push_back(parse_estimator_kind(name));
        }
    } else if (!in.factors) {
        config.estimators = {EstimatorKind::sample, EstimatorKind::poet};
        err << "note: no factors file; running the sample and poet estimators only\n";
    }
    const bool wants_factor = std::find(config.estimators.begin(), config.estimators.end(),
                                        EstimatorKind::factor) != config.estimators.end();
    if (wants_factor && !in.factors) {
        throw std::invalid_argument("--factors is required with the factor estimator");
    }
    if (in.returns->T() < config.estimation_window + config.holding_window) {
        throw DataError("need at least " +
                        std::to_string(config.estimation_window + config.holding_window) +
                        " rows after alignment, got " + std::to_string(in.returns->T()));
    }

    const BacktestReport report =
        run_empirical_study(*in.returns, in.factors ? &*in.factors : nullptr, config);
    for (const std::string& w : report.warnings) err << "warning: " << w << '\n';

    std::string canon = canonical_empirical(config);
    canon += synthetic ? "synthetic=" + std::to_string(a.synthetic_n) + "x" +
                             std::to_string(a.synthetic_t) + '\n'
                       : canonical_inputs(d, EstimatorArgs{});
    const std::string header = "# " + provenance_line(g.seed, fnv1a64(canon));
    write_backtest_outputs(prepare_dir(g), header, report, true, out);
    return exit_ok;
}

int cmd_report(const GlobalArgs& g, const std::string& records_path, std::ostream& out) {
    std::ifstream in(records_path);
    if (!in) throw DataError("cannot open '" + records_path + "'");
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::istringstream stream(content);
    const BacktestReport report = read_backtest_records_csv(stream, records_path);
    const std::string header = "# " + provenance_line(g.seed, fnv1a64(content));
    write_backtest_outputs(prepare_dir(g), header, report, false, out);
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Portfolio risk estimation with high-confidence upper bounds", "prl"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (default: PRL_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--output-dir", g.output_dir, "Directory for output files")
        ->capture_default_str();

    DataArgs data;
    EstimatorArgs est;
    HclubArgs hc;

    auto* estimate = app.add_subcommand("estimate", "Estimate a covariance matrix and portfolio risk");
    add_data_options(estimate, data);
    add_estimator_options(estimate, est);
    bool binary = false;
    estimate->add_flag("--binary", binary, "Also write covariance.bin");

    auto* hclub_cmd = app.add_subcommand("hclub", "Risk estimate with its H-CLUB and confidence interval");
    add_data_options(hclub_cmd, data);
    add_estimator_options(hclub_cmd, est);
    hclub_cmd->add_option("--tau", hc.tau, "Confidence level parameter in (0, 1)");
    hclub_cmd->add_option("--lags", hc.lags, "Truncation lag L");
    hclub_cmd->add_flag("--paper-z", hc.paper_z, "Use z = 2 at tau = 0.05 and 2.58 at tau = 0.01");
    hclub_cmd->add_option("--periods-per-year", hc.periods_per_year, "Annualization factor");

    auto* sample_cmd = app.add_subcommand("sample-portfolios", "Draw random exposure-constrained portfolios");
    Eigen::Index n = 0;
    double c = 1.0;
    int count = 1;
    sample_cmd->add_option("--n", n, "Number of assets")->required();
    sample_cmd->add_option("--c", c, "Gross exposure ||w||_1 (>= 1)");
    sample_cmd->add_option("--count", count, "Number of portfolios");

    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo grid from a config file");
    std::string config_path;
    std::vector<std::string> overrides;
    simulate->add_option("--config", config_path, "Key-value config file")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--set", overrides, "Override a config key (key=value)");

    auto* empirical = app.add_subcommand("empirical", "Rolling estimate-then-hold backtest");
    DataArgs emp_data;
    EmpiricalArgs emp;
    empirical->add_option("--returns", emp_data.returns, "Returns CSV")->check(CLI::ExistingFile);
    empirical->add_option("--factors", emp_data.factors, "Observed factor CSV")->check(CLI::ExistingFile);
    empirical->add_flag("--percent", emp_data.percent, "Input values are percentages");
    empirical->add_option("--riskfree", emp_data.riskfree, "Risk-free column for excess returns");
    empirical->add_option("--riskfree-file", emp_data.riskfree_file, "File holding the risk-free column")
        ->check(CLI::ExistingFile);
    empirical->add_option("--exclude", emp_data.exclude, "Columns to ignore")->delimiter(',');
    empirical->add_option("--estimators", emp.estimators, "Comma-separated estimators");
    empirical->add_option("--cs", emp.cs, "Minimum-variance gross exposures")->delimiter(',');
    empirical->add_flag("--no-equal", emp.no_equal, "Skip the equal-weight strategy");
    empirical->add_option("--estimation-window", emp.estimation_window, "Rows per estimation window");
    empirical->add_option("--holding-window", emp.holding_window, "Rows per holding period");
    empirical->add_option("--tau", emp.tau, "H-CLUB tau");
    empirical->add_option("--lags", emp.lags, "Truncation lag L");
    empirical->add_flag("--exact-z", emp.exact_z, "Exact normal quantile instead of 2.58 / 2");
    empirical->add_option("--k", emp.k, "Principal components for poet");
    empirical->add_option("--synthetic-n", emp.synthetic_n, "Assets in a synthetic market");
    empirical->add_option("--synthetic-t", emp.synthetic_t, "Rows in a synthetic market");

    auto* report = app.add_subcommand("report", "Recompute backtest averages from a records file");
    std::string records_path;
    report->add_option("--records", records_path, "backtest_records.csv")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*estimate) return cmd_estimate(g, data, est, binary, out);
        if (*hclub_cmd) return cmd_hclub(g, data, est, hc, out, err);
        if (*sample_cmd) return cmd_sample_portfolios(g, n, c, count, out);
        if (*simulate) return cmd_simulate(g, seed_opt->count() > 0, config_path, overrides, out);
        if (*empirical) return cmd_empirical(g, emp_data, emp, out, err);
        if (*report) return cmd_report(g, records_path, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_numerical;
    }
    return exit_usage;
}

}  // namespace prl
