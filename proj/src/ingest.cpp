#include "gevreg/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gevreg/error.hpp"

namespace gevreg {

namespace {

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." || s == "null";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string join_rows(const std::vector<std::size_t>& rows) {
  std::ostringstream out;
  const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) out << (i ? "," : "") << rows[i];
  if (rows.size() > shown) out << ",... (" << rows.size() << " rows)";
  return out.str();
}

std::string role_name(CovariateRole role) {
  switch (role) {
    case CovariateRole::Continuous: return "continuous";
    case CovariateRole::Binary: return "binary";
    case CovariateRole::Categorical: return "categorical";
  }
  return "continuous";
}

CovariateRole parse_role(const std::string& s) {
  if (s == "continuous") return CovariateRole::Continuous;
  if (s == "binary") return CovariateRole::Binary;
  if (s == "categorical") return CovariateRole::Categorical;
  throw Error("cli", "config", "unknown covariate role '" + s + "'");
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      throw Error("cli", "config", "unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

McmcConfig parse_mcmc(const nlohmann::json& j) {
  reject_unknown(j,
                 {"n_iterations", "burn_in", "thin", "n_chains", "proposal_scales", "adapt_window",
                  "target_acceptance", "proposal_shape"},
                 "mcmc");
  McmcConfig c;
  c.n_iterations = get_or(j, "n_iterations", c.n_iterations);
  c.burn_in = get_or(j, "burn_in", c.burn_in);
  c.thin = get_or(j, "thin", c.thin);
  c.n_chains = get_or(j, "n_chains", c.n_chains);
  c.adapt_window = get_or(j, "adapt_window", c.adapt_window);
  c.target_acceptance = get_or(j, "target_acceptance", c.target_acceptance);
  if (j.contains("proposal_scales") && !j.at("proposal_scales").is_null()) {
    if (!j.at("proposal_scales").is_string() || j.at("proposal_scales").get<std::string>() != "auto") {
      c.proposal_scales = j.at("proposal_scales").get<std::vector<double>>();
    }
  }
  if (j.contains("proposal_shape")) c.proposal_shape = parse_proposal_shape(j.at("proposal_shape").get<std::string>());
  return c;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error("cli", "missing_column", "no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error("cli", "csv", "unterminated quoted field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw Error("cli", "csv", "input has no header row");
  CsvTable table;
  table.header = std::move(records.front());
  if (!table.header.empty() && table.header[0].starts_with("\xEF\xBB\xBF")) table.header[0].erase(0, 3);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error("cli", "csv",
                  "row " + std::to_string(r) + " has " + std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cli", "io", "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void RunConfig::validate() const {
  if (links.empty()) throw Error("cli", "config", "at least one link is required");
  if (input.empty() && !simulate) throw Error("cli", "config", "either 'input' or 'simulate' is required");
  if (!input.empty() && simulate) throw Error("cli", "config", "'input' and 'simulate' are mutually exclusive");
  if (simulate && simulate->n == 0) throw Error("cli", "config", "simulate.n must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw Error("cli", "config", "holdout_fraction must lie in [0, 1)");
  }
  if (cj_draws && *cj_draws == 0) throw Error("compare", "config", "cj_draws must be positive");
  if (prior.type != "normal" && prior.type != "flat" && prior.type != "jeffreys") {
    throw Error("cli", "config", "unknown prior type '" + prior.type + "'");
  }
  std::set<std::string> seen;
  for (const auto& c : covariates) {
    if (c.name == response) throw Error("cli", "config", "response '" + c.name + "' listed as a covariate");
    if (!seen.insert(c.name).second) throw Error("cli", "config", "covariate '" + c.name + "' listed twice");
    if (c.scale && !(*c.scale > 0.0)) throw Error("cli", "config", "scale of '" + c.name + "' must be positive");
  }
}

RunConfig parse_run_config(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error("cli", "config", "config must be a JSON object");
    reject_unknown(j,
                   {"input", "simulate", "response", "covariates", "links", "prior", "mcmc", "holdout_fraction",
                    "flip_response", "out", "seed", "cj_draws", "ace", "bins"},
                   "config");
    RunConfig c;
    c.input = get_or<std::string>(j, "input", "");
    if (j.contains("simulate") && !j.at("simulate").is_null()) {
      const auto& s = j.at("simulate");
      reject_unknown(s, {"preset", "n"}, "simulate");
      SimulatedSource src;
      src.id = parse_sim_id(get_or<std::string>(s, "preset", "sim1"));
      src.n = get_or(s, "n", src.n);
      c.simulate = src;
    }
    c.response = get_or<std::string>(j, "response", c.response);
    if (j.contains("covariates")) {
      for (const auto& e : j.at("covariates")) {
        CovariateSpec spec;
        if (e.is_string()) {
          spec.name = e.get<std::string>();
        } else {
          reject_unknown(e, {"name", "role", "log", "standardize", "center", "scale", "reference"}, "covariate");
          spec.name = e.at("name").get<std::string>();
          spec.role = parse_role(get_or<std::string>(e, "role", "continuous"));
          spec.log = get_or(e, "log", false);
          spec.standardize = get_or(e, "standardize", spec.role == CovariateRole::Continuous);
          if (e.contains("center") && !e.at("center").is_null()) spec.center = e.at("center").get<double>();
          if (e.contains("scale") && !e.at("scale").is_null()) spec.scale = e.at("scale").get<double>();
          spec.reference = get_or<std::string>(e, "reference", "");
        }
        c.covariates.push_back(std::move(spec));
      }
    }
    if (j.contains("links")) {
      c.links.clear();
      for (const auto& l : j.at("links")) c.links.push_back(parse_link_kind(l.get<std::string>()));
    }
    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      reject_unknown(p, {"type", "variance", "xi_variance", "xi_low", "xi_high"}, "prior");
      c.prior.type = get_or<std::string>(p, "type", c.prior.type);
      c.prior.variance = get_or(p, "variance", c.prior.variance);
      c.prior.xi_variance = get_or(p, "xi_variance", c.prior.xi_variance);
      c.prior.xi_low = get_or(p, "xi_low", c.prior.xi_low);
      c.prior.xi_high = get_or(p, "xi_high", c.prior.xi_high);
    }
    if (j.contains("mcmc")) c.mcmc = parse_mcmc(j.at("mcmc"));
    c.holdout_fraction = get_or(j, "holdout_fraction", c.holdout_fraction);
    c.flip_response = get_or(j, "flip_response", c.flip_response);
    c.out = get_or<std::string>(j, "out", c.out);
    c.seed = get_or(j, "seed", c.seed);
    if (j.contains("cj_draws") && !j.at("cj_draws").is_null()) c.cj_draws = j.at("cj_draws").get<std::size_t>();
    if (j.contains("ace")) {
      for (const auto& a : j.at("ace")) {
        reject_unknown(a, {"column", "change"}, "ace");
        c.ace.push_back({a.at("column").get<std::string>(), a.at("change").get<std::string>()});
      }
    }
    if (j.contains("bins") && !j.at("bins").is_null()) {
      const auto& b = j.at("bins");
      reject_unknown(b, {"column", "edges"}, "bins");
      c.bins = BinSpec{b.at("column").get<std::string>(), get_or(b, "edges", std::vector<double>{})};
    }
    c.mcmc.seed = c.seed;
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error("cli", "config", std::string("malformed config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cli", "io", "cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("cli", "config", std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["input"] = c.input;
  if (c.simulate) {
    j["simulate"] = {{"preset", to_string(c.simulate->id)}, {"n", c.simulate->n}};
  } else {
    j["simulate"] = nullptr;
  }
  j["response"] = c.response;
  j["covariates"] = nlohmann::ordered_json::array();
  for (const auto& s : c.covariates) {
    nlohmann::ordered_json e;
    e["name"] = s.name;
    e["role"] = role_name(s.role);
    e["log"] = s.log;
    e["standardize"] = s.standardize;
    e["center"] = s.center ? nlohmann::ordered_json(*s.center) : nlohmann::ordered_json(nullptr);
    e["scale"] = s.scale ? nlohmann::ordered_json(*s.scale) : nlohmann::ordered_json(nullptr);
    e["reference"] = s.reference;
    j["covariates"].push_back(std::move(e));
  }
  j["links"] = nlohmann::ordered_json::array();
  for (LinkKind l : c.links) j["links"].push_back(to_string(l));
  j["prior"] = {{"type", c.prior.type},
                {"variance", c.prior.variance},
                {"xi_variance", c.prior.xi_variance},
                {"xi_low", c.prior.xi_low},
                {"xi_high", c.prior.xi_high}};
  nlohmann::ordered_json m;
  m["n_iterations"] = c.mcmc.n_iterations;
  m["burn_in"] = c.mcmc.burn_in;
  m["thin"] = c.mcmc.thin;
  m["n_chains"] = c.mcmc.n_chains;
  m["proposal_scales"] =
      c.mcmc.proposal_scales ? nlohmann::ordered_json(*c.mcmc.proposal_scales) : nlohmann::ordered_json("auto");
  m["adapt_window"] = c.mcmc.adapt_window;
  m["target_acceptance"] = c.mcmc.target_acceptance;
  m["proposal_shape"] = to_string(c.mcmc.proposal_shape);
  j["mcmc"] = std::move(m);
  j["holdout_fraction"] = c.holdout_fraction;
  j["flip_response"] = c.flip_response;
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["cj_draws"] = c.cj_draws ? nlohmann::ordered_json(*c.cj_draws) : nlohmann::ordered_json(nullptr);
  j["ace"] = nlohmann::ordered_json::array();
  for (const auto& a : c.ace) j["ace"].push_back({{"column", a.column}, {"change", a.change}});
  if (c.bins) {
    j["bins"] = {{"column", c.bins->column}, {"edges", c.bins->edges}};
  } else {
    j["bins"] = nullptr;
  }
  return j;
}

PriorSpec make_prior(const PriorConfig& config, std::size_t k) {
  if (config.type == "normal") {
    return NormalIndependent{std::vector<double>(k, config.variance), config.xi_variance};
  }
  if (config.type == "flat") return FlatBetaUniformXi{config.xi_low, config.xi_high};
  if (config.type == "jeffreys") return Jeffreys{config.xi_variance};
  throw Error("cli", "config", "unknown prior type '" + config.type + "'");
}

Dataset ingest_table(const CsvTable& table, const RunConfig& config) {
  const std::size_t n = table.rows.size();
  if (n == 0) throw Error("cli", "empty_input", "input has no data rows");
  const std::size_t y_col = table.column(config.response);

  std::vector<CovariateSpec> specs = config.covariates;
  if (specs.empty()) {
    for (const auto& name : table.header) {
      if (name != config.response) {
        CovariateSpec s;
        s.name = name;
        specs.push_back(std::move(s));
      }
    }
  }

  // Missing values in any used column, reported by 1-based data row.
  std::vector<std::size_t> used{y_col};
  for (const auto& s : specs) used.push_back(table.column(s.name));
  std::vector<std::size_t> missing;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::any_of(used.begin(), used.end(), [&](std::size_t c) { return is_missing(table.rows[r][c]); })) {
      missing.push_back(r + 1);
    }
  }
  if (!missing.empty()) throw Error("cli", "missing_values", "missing values in rows " + join_rows(missing));

  auto numeric_column = [&](std::size_t c, const std::string& name) {
    std::vector<double> v(n);
    for (std::size_t r = 0; r < n; ++r) {
      const auto x = parse_number(table.rows[r][c]);
      if (!x) {
        throw Error("cli", "not_numeric",
                    "column '" + name + "' row " + std::to_string(r + 1) + ": '" + table.rows[r][c] + "'");
      }
      v[r] = *x;
    }
    return v;
  };

  Dataset d;
  d.y.resize(static_cast<Eigen::Index>(n));
  const auto y_raw = numeric_column(y_col, config.response);
  for (std::size_t r = 0; r < n; ++r) {
    if (y_raw[r] != 0.0 && y_raw[r] != 1.0) {
      throw Error("cli", "response_not_binary", "response row " + std::to_string(r + 1) + " is not 0 or 1");
    }
    d.y[static_cast<Eigen::Index>(r)] = config.flip_response ? 1.0 - y_raw[r] : y_raw[r];
  }

  std::vector<std::vector<double>> columns{std::vector<double>(n, 1.0)};
  d.column_names = {"intercept"};
  d.column_kinds = {ColumnKind::Intercept};
  d.standardization = {Standardization{}};

  for (const auto& s : specs) {
    const std::size_t c = table.column(s.name);
    if (s.role == CovariateRole::Categorical) {
      std::set<std::string> levels;
      for (const auto& row : table.rows) levels.insert(row[c]);
      const std::string ref = s.reference.empty() ? *levels.begin() : s.reference;
      if (!levels.contains(ref)) {
        throw Error("cli", "config", "reference level '" + ref + "' does not occur in '" + s.name + "'");
      }
      for (const auto& level : levels) {
        if (level == ref) continue;
        std::vector<double> v(n);
        for (std::size_t r = 0; r < n; ++r) v[r] = table.rows[r][c] == level ? 1.0 : 0.0;
        columns.push_back(std::move(v));
        d.column_names.push_back(s.name + ":" + level);
        d.column_kinds.push_back(ColumnKind::Dummy);
        d.standardization.push_back(Standardization{});
      }
      continue;
    }
    auto v = numeric_column(c, s.name);
    if (s.role == CovariateRole::Binary) {
      for (std::size_t r = 0; r < n; ++r) {
        if (v[r] != 0.0 && v[r] != 1.0) {
          throw Error("cli", "not_binary", "column '" + s.name + "' row " + std::to_string(r + 1) + " is not 0 or 1");
        }
      }
      columns.push_back(std::move(v));
      d.column_names.push_back(s.name);
      d.column_kinds.push_back(ColumnKind::Dummy);
      d.standardization.push_back(Standardization{});
      continue;
    }
    Standardization st;
    if (s.log) {
      std::vector<std::size_t> bad;
      for (std::size_t r = 0; r < n; ++r) {
        if (!(v[r] > 0.0)) bad.push_back(r + 1);
      }
      if (!bad.empty()) {
        throw Error("cli", "nonpositive_log", "column '" + s.name + "' has nonpositive values in rows " + join_rows(bad));
      }
      for (double& x : v) x = std::log(x);
      st.log_applied = true;
    }
    if (s.standardize || s.center || s.scale) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      st.center = s.center.value_or(s.standardize ? mean : 0.0);
      if (s.scale) {
        st.scale = *s.scale;
      } else if (s.standardize) {
        if (!(sd > 0.0)) throw Error("cli", "constant_column", "column '" + s.name + "' is constant");
        st.scale = sd;
      }
      for (double& x : v) x = (x - st.center) / st.scale;
    }
    columns.push_back(std::move(v));
    d.column_names.push_back(s.name);
    d.column_kinds.push_back(ColumnKind::ContinuousStandardized);
    d.standardization.push_back(st);
  }

  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t r = 0; r < n; ++r) d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = columns[j][r];
  }
  d.validate();
  return d;
}

Dataset ingest(const RunConfig& config) {
  config.validate();
  if (config.simulate) {
    Dataset d = preset(config.simulate->id, config.simulate->n, config.seed);
    if (config.flip_response) d.y = (1.0 - d.y.array()).matrix();
    return d;
  }
  return ingest_table(read_csv(config.input), config);
}

void export_csv(const Dataset& data, const std::string& response, std::ostream& out) {
  out << response;
  for (std::size_t j = 0; j < data.k(); ++j) {
    if (data.column_kinds[j] != ColumnKind::Intercept) out << ',' << data.column_names[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << format_double(data.y[r]);
    for (std::size_t j = 0; j < data.k(); ++j) {
      if (data.column_kinds[j] == ColumnKind::Intercept) continue;
      double v = data.X(r, static_cast<Eigen::Index>(j));
      const Standardization& st = data.standardization[j];
      if (data.column_kinds[j] == ColumnKind::ContinuousStandardized) {
        v = v * st.scale + st.center;
        if (st.log_applied) v = std::exp(v);
      }
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

std::vector<CovariateSpec> covariate_specs_for(const Dataset& data) {
  std::vector<CovariateSpec> specs;
  for (std::size_t j = 0; j < data.k(); ++j) {
    CovariateSpec s;
    s.name = data.column_names[j];
    switch (data.column_kinds[j]) {
      case ColumnKind::Intercept: continue;
      case ColumnKind::Dummy:
        s.role = CovariateRole::Binary;
        s.standardize = false;
        break;
      case ColumnKind::ContinuousStandardized:
        s.log = data.standardization[j].log_applied;
        s.standardize = false;
        s.center = data.standardization[j].center;
        s.scale = data.standardization[j].scale;
        break;
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

}  // namespace gevreg
