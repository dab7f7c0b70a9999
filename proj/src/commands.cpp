#include "gevreg/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

#include "gevreg/compare.hpp"
#include "gevreg/diagnostics.hpp"
#include "gevreg/effects.hpp"
#include "gevreg/error.hpp"

namespace gevreg {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct LinkFit {
  LinkKind link = LinkKind::Gev;
  std::unique_ptr<RegressionTarget> target;
  std::vector<Chain> chains;
  Chain pooled;

  const ModelSpec& model() const { return target->model(); }
  Eigen::VectorXd mean() const { return posterior_mean(pooled); }
};

ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson vec_json(const Eigen::VectorXd& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

ojson vec_json(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Chain pool_chains(const std::vector<Chain>& chains) {
  if (chains.size() == 1) return chains.front();
  Chain pooled = chains.front();
  Eigen::Index rows = 0;
  for (const auto& c : chains) rows += c.draws.rows();
  pooled.draws.resize(rows, chains.front().draws.cols());
  pooled.log_post.resize(rows);
  pooled.log_lik.resize(rows);
  Eigen::Index at = 0;
  double accept = 0.0;
  for (const auto& c : chains) {
    pooled.draws.middleRows(at, c.draws.rows()) = c.draws;
    pooled.log_post.segment(at, c.draws.rows()) = c.log_post;
    pooled.log_lik.segment(at, c.draws.rows()) = c.log_lik;
    at += c.draws.rows();
    accept += c.acceptance_rate.empty() ? 0.0 : c.acceptance_rate.front();
  }
  pooled.acceptance_rate = {accept / static_cast<double>(chains.size())};
  return pooled;
}

// One fit per link, run concurrently; each fit is a pure function of its
// inputs so the order of completion does not matter.
std::vector<LinkFit> fit_links(const Dataset& data, const RunConfig& config) {
  std::vector<LinkFit> fits(config.links.size());
  std::vector<std::exception_ptr> errors(config.links.size());
  McmcConfig mcmc = config.mcmc;
  mcmc.seed = config.seed;
  {
    std::vector<std::jthread> workers;
    for (std::size_t l = 0; l < config.links.size(); ++l) {
      workers.emplace_back([&, l] {
        try {
          LinkFit& f = fits[l];
          f.link = config.links[l];
          f.target = std::make_unique<RegressionTarget>(
              ModelSpec(data, f.link, make_prior(config.prior, data.k())));
          f.chains = run_mh(*f.target, mcmc);
          f.pooled = pool_chains(f.chains);
        } catch (...) {
          errors[l] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return fits;
}

ojson data_json(const Dataset& data, const RunConfig& config) {
  ojson j;
  j["source"] = config.simulate ? "simulate:" + to_string(config.simulate->id) : config.input;
  j["n"] = data.n();
  j["k"] = data.k();
  j["n_ones"] = data.y.sum();
  ojson cols = ojson::array();
  for (std::size_t c = 0; c < data.k(); ++c) {
    const auto& st = data.standardization[c];
    cols.push_back({{"name", data.column_names[c]},
                    {"kind", to_string(data.column_kinds[c])},
                    {"log_applied", st.log_applied},
                    {"center", st.center},
                    {"scale", st.scale}});
  }
  j["columns"] = std::move(cols);
  return j;
}

ojson report_header(const std::string& command, const RunConfig& config) {
  ojson r;
  r["command"] = command;
  r["generated_at"] = timestamp();
  r["seed"] = config.seed;
  r["config"] = to_json(config);
  return r;
}

std::string csv_name(const std::string& stem, LinkKind link, std::size_t n_links) {
  return n_links == 1 ? stem + ".csv" : stem + "_" + to_string(link) + ".csv";
}

std::string bins_csv(const std::vector<FitBin>& bins) {
  std::ostringstream out;
  out << "bin,lower,upper,n_obs,observed_ones,expected_ones\n";
  for (const auto& b : bins) {
    out << '"' << b.label << "\"," << format_double(b.lower) << ',' << format_double(b.upper) << ',' << b.n_obs
        << ',' << format_double(b.observed_ones) << ',' << format_double(b.expected_ones) << '\n';
  }
  return out.str();
}

ojson bins_json(const std::vector<FitBin>& bins) {
  ojson a = ojson::array();
  for (const auto& b : bins) {
    a.push_back({{"bin", b.label},
                 {"lower", number(b.lower)},
                 {"upper", number(b.upper)},
                 {"n_obs", b.n_obs},
                 {"observed_ones", b.observed_ones},
                 {"expected_ones", b.expected_ones}});
  }
  return a;
}

ojson fit_json(const LinkFit& f) {
  ojson j;
  j["link"] = to_string(f.link);
  j["prior"] = prior_name(f.model().prior());
  const Eigen::VectorXd mean = posterior_mean(f.pooled);
  const Eigen::VectorXd sd = posterior_sd(f.pooled);
  ojson params = ojson::array();
  for (std::size_t p = 0; p < f.pooled.dim(); ++p) {
    const auto [lo, hi] = hpd_interval(f.pooled, p, 0.95);
    params.push_back({{"name", f.pooled.names[p]},
                      {"mean", mean[static_cast<Eigen::Index>(p)]},
                      {"sd", sd[static_cast<Eigen::Index>(p)]},
                      {"hpd95", {lo, hi}}});
  }
  j["parameters"] = std::move(params);
  ojson chains = ojson::array();
  for (const auto& c : f.chains) {
    const ChainDiagnostics d = diagnostics(c);
    chains.push_back({{"index", c.chain_index},
                      {"seed", c.seed_used},
                      {"retained", c.rows()},
                      {"acceptance_rate", d.acceptance_rate},
                      {"proposal_sd", vec_json(Eigen::VectorXd(c.proposal_cov.diagonal().cwiseSqrt()))},
                      {"geweke_z", vec_json(d.geweke_z)},
                      {"ess", vec_json(d.ess)},
                      {"degenerate", d.degenerate}});
  }
  j["chains"] = std::move(chains);
  return j;
}

void write_report(const RunConfig& config, const ojson& report) {
  write_file_atomic(fs::path(config.out) / "report.json", report.dump(2) + "\n");
}

void write_table(const RunConfig& config, const std::string& name, const std::string& contents) {
  write_file_atomic(fs::path(config.out) / name, contents);
}

std::vector<double> edges_of(const RunConfig& config) { return config.bins ? config.bins->edges : std::vector<double>{}; }

ComparisonReport criteria_for(const LinkFit& f, const RunConfig& config) {
  ComparisonReport r;
  const DicResult d = dic(f.pooled, *f.target);
  r.d_avg = d.d_avg;
  r.d_at_mean = d.d_at_mean;
  r.p_d = d.p_d;
  r.dic = d.dic;
  r.bic = bic(f.pooled, *f.target);
  if (f.target->prior_is_proper()) {
    const MarginalLikelihood ml =
        marginal_likelihood_cj(f.chains.front(), *f.target, CjConfig{config.cj_draws, config.seed});
    r.log_ml = ml.log_ml;
    r.log_ml_se = ml.mc_se;
  } else {
    r.log_ml = std::numeric_limits<double>::quiet_NaN();
    r.log_ml_se = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::pair<Dataset, Dataset> train_and_holdout(const Dataset& data, const RunConfig& config) {
  if (config.holdout_fraction > 0.0) return holdout_split(data, config.holdout_fraction, config.seed);
  return {data, data};
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cli", "io", "cannot write '" + tmp.string() + "'");
    out << contents;
    if (!out.flush()) throw Error("cli", "io", "write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

ojson simulate_command(const RunConfig& config) {
  if (!config.simulate) throw Error("cli", "config", "simulate needs a 'simulate' section");
  const Dataset data = ingest(config);
  std::ostringstream csv;
  export_csv(data, config.response, csv);
  write_table(config, "data.csv", csv.str());

  // A config that fits the exported file back to the same design.
  RunConfig next = config;
  next.simulate.reset();
  next.input = (fs::path(config.out) / "data.csv").string();
  next.covariates = covariate_specs_for(data);
  next.flip_response = false;
  write_table(config, "config.json", to_json(next).dump(2) + "\n");

  const SimTruth truth = sim_truth(config.simulate->id);
  ojson r = report_header("simulate", config);
  r["data"] = data_json(data, config);
  r["truth"] = {{"link", to_string(truth.link.kind)}, {"beta", vec_json(truth.beta)}};
  r["files"] = {"data.csv", "config.json"};
  write_report(config, r);
  return r;
}

ojson fit_command(const RunConfig& config) {
  const Dataset data = ingest(config);
  const auto fits = fit_links(data, config);
  ojson r = report_header("fit", config);
  r["data"] = data_json(data, config);
  ojson files = ojson::array();
  ojson results = ojson::array();
  for (const auto& f : fits) {
    ojson j = fit_json(f);
    for (const auto& c : f.chains) {
      std::string stem = "chain";
      if (fits.size() > 1) stem += "_" + to_string(f.link);
      if (f.chains.size() > 1) stem += "_c" + std::to_string(c.chain_index);
      std::ostringstream out;
      write_chain_csv(c, out);
      write_table(config, stem + ".csv", out.str());
      files.push_back(stem + ".csv");
    }
    if (config.bins) {
      const auto edges = edges_of(config);
      const auto bins = binned_fit_table(f.pooled, f.model(), config.bins->column, edges);
      const std::string name = csv_name("bins", f.link, fits.size());
      write_table(config, name, bins_csv(bins));
      files.push_back(name);
      j["bins"] = bins_json(bins);
    }
    results.push_back(std::move(j));
  }
  r["fits"] = std::move(results);
  r["files"] = std::move(files);
  write_report(config, r);
  return r;
}

ojson compare_command(const RunConfig& config) {
  const Dataset data = ingest(config);
  const auto [train, holdout] = train_and_holdout(data, config);
  const auto fits = fit_links(train, config);
  ojson r = report_header("compare", config);
  r["data"] = data_json(data, config);
  r["n_train"] = train.n();
  r["n_holdout"] = config.holdout_fraction > 0.0 ? holdout.n() : 0;
  std::ostringstream csv;
  csv << "link,d_avg,d_at_mean,p_d,dic,bic,log_ml,log_ml_se,d_post\n";
  ojson rows = ojson::array();
  for (const auto& f : fits) {
    ComparisonReport c = criteria_for(f, config);
    if (config.holdout_fraction > 0.0) {
      const Eigen::VectorXd m = f.mean();
      c.d_post = posterior_predictive_deviance({m.data(), static_cast<std::size_t>(m.size())}, f.model(), holdout);
    }
    csv << to_string(f.link) << ',' << format_double(c.d_avg) << ',' << format_double(c.d_at_mean) << ','
        << format_double(c.p_d) << ',' << format_double(c.dic) << ',' << format_double(c.bic) << ','
        << format_double(c.log_ml) << ',' << format_double(c.log_ml_se) << ','
        << (c.d_post ? format_double(*c.d_post) : "") << '\n';
    ojson row;
    row["link"] = to_string(f.link);
    row.update(to_json(c));
    rows.push_back(std::move(row));
  }
  write_table(config, "criteria.csv", csv.str());
  r["criteria"] = std::move(rows);
  r["files"] = {"criteria.csv"};
  write_report(config, r);
  return r;
}

ojson ace_command(const RunConfig& config) {
  if (config.ace.empty()) throw Error("cli", "config", "ace needs at least one entry in 'ace'");
  const Dataset data = ingest(config);
  std::vector<CovariateChange> changes;
  for (const auto& a : config.ace) {
    data.column_index(a.column);
    changes.push_back(parse_change(a.column, a.change));
  }
  const auto fits = fit_links(data, config);
  ojson r = report_header("ace", config);
  r["data"] = data_json(data, config);
  std::ostringstream csv;
  csv << "link,column,change,ace,mc_se\n";
  ojson rows = ojson::array();
  for (const auto& f : fits) {
    for (const auto& ch : changes) {
      const AceResult a = average_covariate_effect(f.pooled, f.model(), ch);
      csv << to_string(f.link) << ',' << ch.column << ",\"" << describe(ch) << "\"," << format_double(a.ace) << ','
          << format_double(a.mc_se) << '\n';
      rows.push_back({{"link", to_string(f.link)},
                      {"column", ch.column},
                      {"change", describe(ch)},
                      {"ace", a.ace},
                      {"mc_se", a.mc_se}});
    }
  }
  write_table(config, "ace.csv", csv.str());
  r["effects"] = std::move(rows);
  r["files"] = {"ace.csv"};
  write_report(config, r);
  return r;
}

ojson predict_command(const RunConfig& config) {
  const Dataset data = ingest(config);
  const auto [train, target_rows] = train_and_holdout(data, config);
  const auto fits = fit_links(train, config);
  ojson r = report_header("predict", config);
  r["data"] = data_json(data, config);
  r["n_train"] = train.n();
  r["predicted_on"] = config.holdout_fraction > 0.0 ? "holdout" : "training";
  r["n_predicted"] = target_rows.n();

  std::vector<Eigen::VectorXd> p_hat;
  ojson results = ojson::array();
  ojson files = ojson::array({"predictions.csv"});
  for (const auto& f : fits) {
    const Eigen::VectorXd m = f.mean();
    const std::span<const double> theta(m.data(), static_cast<std::size_t>(m.size()));
    p_hat.push_back(fitted_probabilities(theta, f.model(), target_rows));
    ojson j;
    j["link"] = to_string(f.link);
    j["posterior_mean"] = vec_json(m);
    j["d_post"] = posterior_predictive_deviance(theta, f.model(), target_rows);
    if (config.bins) {
      const auto bins = binned_fit_table(theta, f.model(), target_rows, config.bins->column, edges_of(config));
      const std::string name = csv_name("predicted_bins", f.link, fits.size());
      write_table(config, name, bins_csv(bins));
      files.push_back(name);
      j["bins"] = bins_json(bins);
    }
    results.push_back(std::move(j));
  }
  std::ostringstream csv;
  csv << "row,y";
  for (const auto& f : fits) csv << ",p_" << to_string(f.link);
  csv << '\n';
  for (std::size_t i = 0; i < target_rows.n(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    csv << i << ',' << format_double(target_rows.y[ii]);
    for (const auto& p : p_hat) csv << ',' << format_double(p[ii]);
    csv << '\n';
  }
  write_table(config, "predictions.csv", csv.str());
  r["predictions"] = std::move(results);
  r["files"] = std::move(files);
  write_report(config, r);
  return r;
}

ojson check_command(const RunConfig& config) {
  const Dataset data = ingest(config);
  const SeparationReport sep = separation_check(data);
  ojson r = report_header("check", config);
  r["data"] = data_json(data, config);
  r["separation"] = to_json(sep);
  std::ostringstream csv;
  csv << "column,kind,log_applied,center,scale,min,max,mean\n";
  for (std::size_t c = 0; c < data.k(); ++c) {
    const auto col = data.X.col(static_cast<Eigen::Index>(c));
    const auto& st = data.standardization[c];
    csv << data.column_names[c] << ',' << to_string(data.column_kinds[c]) << ',' << (st.log_applied ? 1 : 0) << ','
        << format_double(st.center) << ',' << format_double(st.scale) << ',' << format_double(col.minCoeff()) << ','
        << format_double(col.maxCoeff()) << ',' << format_double(col.mean()) << '\n';
  }
  write_table(config, "columns.csv", csv.str());
  r["files"] = {"columns.csv"};
  write_report(config, r);
  return r;
}

ojson run_command(const std::string& name, const RunConfig& config) {
  config.validate();
  if (name == "simulate") return simulate_command(config);
  if (name == "fit") return fit_command(config);
  if (name == "compare") return compare_command(config);
  if (name == "ace") return ace_command(config);
  if (name == "predict") return predict_command(config);
  if (name == "check") return check_command(config);
  throw Error("cli", "usage", "unknown command '" + name + "'");
}

}  // namespace gevreg
