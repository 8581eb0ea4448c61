#include "tedvae/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tedvae {

namespace {

const std::set<std::string> kReserved = {"t", "y", "y0", "y1", "mu0", "mu1"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delimiter)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) out.emplace_back();
  return out;
}

std::string row_error(std::size_t row, const std::string& column, const std::string& what) {
  return "row " + std::to_string(row) + ", column '" + column + "': " + what;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc{} || ptr != end) {
    throw std::invalid_argument(row_error(row, column, "cannot parse '" + cell + "' as a number"));
  }
  if (!std::isfinite(v)) throw std::invalid_argument(row_error(row, column, "non-finite value '" + cell + "'"));
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

std::vector<double> random_direction(std::size_t dim, double norm, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(dim);
  double ss = 0.0;
  for (double& v : w) {
    v = normal(rng);
    ss += v * v;
  }
  if (ss > 0.0)
    for (double& v : w) v *= norm / std::sqrt(ss);
  return w;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> Dataset::true_cate() const {
  if (!has_cate_truth()) throw std::logic_error("dataset has no treatment-effect ground truth");
  const bool means = mu0 && mu1;
  const auto& hi = means ? *mu1 : *y1;
  const auto& lo = means ? *mu0 : *y0;
  std::vector<double> tau(size());
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = hi[i] - lo[i];
  return tau;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  auto pick = [&](const std::vector<double>& v) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v.at(rows[i]);
    return out;
  };
  Dataset d;
  d.x = x.select_rows(rows);
  d.t = pick(t);
  d.y = pick(y);
  if (y0) d.y0 = pick(*y0);
  if (y1) d.y1 = pick(*y1);
  if (mu0) d.mu0 = pick(*mu0);
  if (mu1) d.mu1 = pick(*mu1);
  if (propensity) d.propensity = pick(*propensity);
  d.covariate_names = covariate_names;
  d.schema = schema;
  d.provenance = provenance;
  d.dropped_columns = dropped_columns;
  return d;
}

void Dataset::validate() const {
  const std::size_t n = t.size();
  if (n == 0) throw std::invalid_argument("dataset is empty");
  if (y.size() != n || x.rows() != n) throw std::invalid_argument("dataset columns have different lengths");
  if (schema.size() != x.cols()) throw std::invalid_argument("schema does not match covariate count");
  for (const auto* v : {&y0, &y1, &mu0, &mu1})
    if (*v && (*v)->size() != n) throw std::invalid_argument("ground-truth column has the wrong length");
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] != 0.0 && t[i] != 1.0) {
      throw std::invalid_argument(row_error(i + 1, "t", "treatment " + format_double(t[i]) + " is not binary"));
    }
  }
  if (y0 && y1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = t[i] == 1.0 ? (*y1)[i] : (*y0)[i];
      if (std::abs(expected - y[i]) > 1e-9 * std::max(1.0, std::abs(y[i]))) {
        throw std::invalid_argument(row_error(i + 1, "y", "factual outcome disagrees with y0/y1"));
      }
    }
  }
}

Dataset parse_dataset(std::istream& in, const SchemaSpec& spec, std::string provenance) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(provenance + ": missing header row");
  const std::vector<std::string> header = split_line(line, spec.delimiter);
  std::map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!index.emplace(header[j], j).second) throw std::invalid_argument(provenance + ": duplicate column '" + header[j] + "'");
  }
  for (const char* required : {"t", "y"}) {
    if (!index.contains(required)) throw std::invalid_argument(provenance + ": missing mandatory column '" + required + "'");
  }
  for (const auto& [name, kind] : spec.column_kinds) {
    if (!index.contains(name)) throw std::invalid_argument(provenance + ": override for unknown column '" + name + "'");
  }

  std::vector<std::vector<double>> columns(header.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_line(line, spec.delimiter);
    if (cells.size() != header.size()) {
      throw std::invalid_argument(provenance + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                  " cells, header has " + std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (std::find(spec.ignore_columns.begin(), spec.ignore_columns.end(), header[j]) != spec.ignore_columns.end()) continue;
      columns[j].push_back(parse_cell(cells[j], row, header[j]));
    }
  }
  if (row == 0) throw std::invalid_argument(provenance + ": no data rows");

  Dataset d;
  d.provenance = provenance;
  d.t = columns[index.at("t")];
  d.y = columns[index.at("y")];
  for (std::size_t i = 0; i < d.t.size(); ++i) {
    if (d.t[i] != 0.0 && d.t[i] != 1.0) {
      throw std::invalid_argument(provenance + ": " +
                                  row_error(i + 1, "t", "treatment " + format_double(d.t[i]) + " is not binary"));
    }
  }
  auto optional_column = [&](const char* name) -> std::optional<std::vector<double>> {
    if (auto it = index.find(name); it != index.end()) return columns[it->second];
    return std::nullopt;
  };
  d.y0 = optional_column("y0");
  d.y1 = optional_column("y1");
  d.mu0 = optional_column("mu0");
  d.mu1 = optional_column("mu1");

  std::vector<std::size_t> kept;
  std::vector<ColumnKind> kinds;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& name = header[j];
    if (kReserved.contains(name)) continue;
    if (std::find(spec.ignore_columns.begin(), spec.ignore_columns.end(), name) != spec.ignore_columns.end()) continue;
    auto& col = columns[j];
    const std::set<double> distinct(col.begin(), col.end());
    if (distinct.size() <= 1 && spec.drop_constant_columns) {
      std::clog << "warning: " << provenance << ": dropping constant column '" << name << "'\n";
      d.dropped_columns.push_back(name);
      continue;
    }
    ColumnKind kind = distinct.size() <= 2 ? ColumnKind::binary : ColumnKind::continuous;
    if (auto it = spec.column_kinds.find(name); it != spec.column_kinds.end()) kind = it->second;
    if (kind == ColumnKind::binary) {
      const bool zero_one = std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 0.0 || v == 1.0; });
      if (!zero_one) {
        if (distinct.size() != 2) {
          for (std::size_t i = 0; i < col.size(); ++i)
            if (col[i] != 0.0 && col[i] != 1.0)
              throw std::invalid_argument(provenance + ": " + row_error(i + 1, name, "binary column holds " + format_double(col[i])));
        }
        // Two-valued codes such as {1, 2} map to {0, 1}.
        const double low = *distinct.begin();
        for (double& v : col) v = v == low ? 0.0 : 1.0;
      }
    }
    kept.push_back(j);
    kinds.push_back(kind);
    d.covariate_names.push_back(name);
  }
  if (kept.empty()) throw std::invalid_argument(provenance + ": no covariate columns");

  d.x = Matrix(d.t.size(), kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k)
    for (std::size_t i = 0; i < d.t.size(); ++i) d.x(i, k) = columns[kept[k]][i];
  d.schema.covariates = std::move(kinds);
  if (spec.outcome_kind) {
    d.schema.outcome = *spec.outcome_kind;
  } else {
    const bool binary_y = std::all_of(d.y.begin(), d.y.end(), [](double v) { return v == 0.0 || v == 1.0; });
    d.schema.outcome = binary_y ? ColumnKind::binary : ColumnKind::continuous;
  }
  if (d.schema.outcome == ColumnKind::binary) {
    for (std::size_t i = 0; i < d.y.size(); ++i)
      if (d.y[i] != 0.0 && d.y[i] != 1.0)
        throw std::invalid_argument(provenance + ": " + row_error(i + 1, "y", "binary outcome holds " + format_double(d.y[i])));
  }
  d.validate();
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const SchemaSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open dataset file " + path.string());
  return parse_dataset(in, spec, path.string());
}

void write_dataset(const Dataset& d, std::ostream& out, char delimiter) {
  std::vector<std::pair<std::string, const std::vector<double>*>> extra;
  if (d.y0) extra.emplace_back("y0", &*d.y0);
  if (d.y1) extra.emplace_back("y1", &*d.y1);
  if (d.mu0) extra.emplace_back("mu0", &*d.mu0);
  if (d.mu1) extra.emplace_back("mu1", &*d.mu1);
  out << 't' << delimiter << 'y';
  for (const auto& [name, col] : extra) out << delimiter << name;
  for (std::size_t j = 0; j < d.x.cols(); ++j) {
    out << delimiter << (j < d.covariate_names.size() ? d.covariate_names[j] : "x" + std::to_string(j + 1));
  }
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) {
    out << format_double(d.t[i]) << delimiter << format_double(d.y[i]);
    for (const auto& [name, col] : extra) out << delimiter << format_double((*col)[i]);
    for (std::size_t j = 0; j < d.x.cols(); ++j) out << delimiter << format_double(d.x(i, j));
    out << '\n';
  }
}

void write_dataset(const Dataset& d, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file " + path.string());
  write_dataset(d, out, delimiter);
}

std::array<std::vector<std::size_t>, 3> split_indices(std::size_t n, const SplitFractions& f, std::uint64_t seed) {
  if (!(f.train > 0 && f.validation > 0 && f.test > 0)) throw std::invalid_argument("split fractions must be positive");
  if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
  const auto n_train = static_cast<std::size_t>(std::llround(f.train * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(f.validation * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw std::invalid_argument("split: " + std::to_string(n) + " rows are too few for three nonempty splits");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  std::array<std::vector<std::size_t>, 3> out;
  out[0].assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  out[1].assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out[2].assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return out;
}

DataSplit split_dataset(const Dataset& d, const SplitFractions& fractions, std::uint64_t seed) {
  auto idx = split_indices(d.size(), fractions, seed);
  DataSplit s{d.subset(idx[0]), d.subset(idx[1]), d.subset(idx[2]), std::move(idx)};
  return s;
}

const char* to_string(OutcomeLink link) { return link == OutcomeLink::linear ? "linear" : "nonlinear"; }

OutcomeLink outcome_link_from_string(const std::string& name) {
  if (name == "linear") return OutcomeLink::linear;
  if (name == "nonlinear") return OutcomeLink::nonlinear;
  throw std::invalid_argument("unknown outcome link '" + name + "'");
}

void SynthConfig::validate() const {
  if (!(treated_fraction > 0.05 && treated_fraction < 0.95)) {
    throw std::invalid_argument("synthetic: treated fraction must lie in (0.05, 0.95)");
  }
  if (!(outcome_scale > 0.0)) throw std::invalid_argument("synthetic: outcome scale must be positive");
  if (!(effect_scale >= 0.0)) throw std::invalid_argument("synthetic: effect scale must be nonnegative");
  if (!(treatment_strength >= 0.0) || !(proxy_noise >= 0.0) || !(noise_fraction >= 0.0) ||
      !(effect_heterogeneity >= 0.0)) {
    throw std::invalid_argument("synthetic: strengths and noise levels must be nonnegative");
  }
  if (dim_instrumental + dim_confounding + dim_risk == 0 || proxies_per_factor == 0) {
    throw std::invalid_argument("synthetic: no covariates would be generated");
  }
  if (n == 0) throw std::invalid_argument("synthetic: n must be positive");
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = cfg.n;
  const std::array<std::size_t, 3> dims = {cfg.dim_instrumental, cfg.dim_confounding, cfg.dim_risk};
  const std::array<const char*, 3> prefixes = {"xt", "xc", "xy"};

  // Structural coefficients first, so they depend on the seed only.
  std::array<std::vector<double>, 3> maps;
  for (std::size_t b = 0; b < 3; ++b) {
    maps[b].resize(dims[b] * cfg.proxies_per_factor * dims[b]);
    const double s = dims[b] > 0 ? 1.0 / std::sqrt(static_cast<double>(dims[b])) : 0.0;
    for (double& v : maps[b]) v = normal(rng) * s;
  }
  const std::size_t dim_tc = cfg.dim_instrumental + cfg.dim_confounding;
  const std::size_t dim_cy = cfg.dim_confounding + cfg.dim_risk;
  const std::vector<double> w_t = random_direction(dim_tc, cfg.treatment_strength, rng);
  const std::vector<double> a0 = random_direction(dim_cy, 1.0, rng);
  const std::vector<double> a1 = random_direction(dim_cy, 1.0, rng);
  constexpr std::size_t kFeatures = 4;
  std::vector<std::vector<double>> u0, u1;
  std::vector<double> c0(kFeatures), c1(kFeatures);
  for (std::size_t k = 0; k < kFeatures; ++k) {
    u0.push_back(random_direction(dim_cy, 1.5, rng));
    u1.push_back(random_direction(dim_cy, 1.5, rng));
    c0[k] = normal(rng) / std::sqrt(0.5 * kFeatures);
    c1[k] = normal(rng) / std::sqrt(0.5 * kFeatures);
  }

  std::array<Matrix, 3> z;
  for (std::size_t b = 0; b < 3; ++b) {
    z[b] = Matrix(n, dims[b]);
    for (double& v : z[b].data()) v = normal(rng);
  }

  std::size_t d_total = 0;
  for (std::size_t b = 0; b < 3; ++b) d_total += dims[b] * cfg.proxies_per_factor;
  Dataset d;
  d.x = Matrix(n, d_total);
  std::size_t col = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t k = dims[b] * cfg.proxies_per_factor;
    for (std::size_t j = 0; j < k; ++j) d.covariate_names.push_back(std::string(prefixes[b]) + "_" + std::to_string(j + 1));
    for (std::size_t i = 0; i < n; ++i) {
      const auto zi = z[b].row(i);
      for (std::size_t j = 0; j < k; ++j) {
        double s = dot(std::span<const double>(maps[b]).subspan(j * dims[b], dims[b]), zi);
        if (cfg.link == OutcomeLink::nonlinear) s = std::tanh(s);
        d.x(i, col + j) = s + cfg.proxy_noise * normal(rng);
      }
    }
    col += k;
  }
  d.schema.covariates.assign(d_total, ColumnKind::continuous);
  d.schema.outcome = ColumnKind::continuous;

  // Treatment: logits from [z_t, z_c], intercept calibrated on the realized
  // assignments so the treated fraction hits the target.
  std::vector<double> logits(n), uniforms(n), zc_y(dim_cy);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ztc;
    ztc.insert(ztc.end(), z[0].row(i).begin(), z[0].row(i).end());
    ztc.insert(ztc.end(), z[1].row(i).begin(), z[1].row(i).end());
    logits[i] = dot(w_t, ztc);
    uniforms[i] = uniform(rng);
  }
  auto treated_fraction = [&](double bias) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += uniforms[i] < sigmoid(logits[i] + bias) ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(n);
  };
  const double tolerance = std::max(0.01, 1.0 / static_cast<double>(n));
  double lo = -30.0, hi = 30.0, bias = 0.0;
  bool calibrated = false;
  for (int step = 0; step < 100; ++step) {
    bias = 0.5 * (lo + hi);
    const double frac = treated_fraction(bias);
    if (std::abs(frac - cfg.treated_fraction) <= tolerance) {
      calibrated = true;
      break;
    }
    (frac < cfg.treated_fraction ? lo : hi) = bias;
  }
  if (!calibrated) throw std::runtime_error("synthetic: treated-fraction calibration failed after 100 bisection steps");

  d.t.resize(n);
  d.y.resize(n);
  std::vector<double> y0(n), y1(n), mu0(n), mu1(n), propensity(n);
  const double noise_sd = cfg.noise_fraction * cfg.outcome_scale;
  for (std::size_t i = 0; i < n; ++i) {
    propensity[i] = sigmoid(logits[i] + bias);
    d.t[i] = uniforms[i] < propensity[i] ? 1.0 : 0.0;
    std::vector<double> zcy;
    zcy.insert(zcy.end(), z[1].row(i).begin(), z[1].row(i).end());
    zcy.insert(zcy.end(), z[2].row(i).begin(), z[2].row(i).end());
    double g0 = 0.0, g1 = 1.0;
    if (cfg.link == OutcomeLink::linear) {
      g0 = dot(a0, zcy);
      g1 = 1.0 + cfg.effect_heterogeneity * dot(a1, zcy);
    } else {
      double h0 = 0.0, h1 = 0.0;
      for (std::size_t k = 0; k < kFeatures; ++k) {
        h0 += c0[k] * std::tanh(dot(u0[k], zcy));
        h1 += c1[k] * std::tanh(dot(u1[k], zcy));
      }
      g0 = h0;
      g1 = 1.0 + cfg.effect_heterogeneity * h1;
    }
    mu0[i] = cfg.outcome_scale * g0;
    mu1[i] = mu0[i] + cfg.effect_scale * g1;
    y0[i] = mu0[i] + noise_sd * normal(rng);
    y1[i] = mu1[i] + noise_sd * normal(rng);
    d.y[i] = d.t[i] == 1.0 ? y1[i] : y0[i];
  }
  d.y0 = std::move(y0);
  d.y1 = std::move(y1);
  d.mu0 = std::move(mu0);
  d.mu1 = std::move(mu1);
  d.propensity = std::move(propensity);
  std::ostringstream prov;
  prov << "synthetic(" << cfg.dim_instrumental << '-' << cfg.dim_confounding << '-' << cfg.dim_risk
       << ", link=" << to_string(cfg.link) << ", rho=" << cfg.treated_fraction << ", seed=" << cfg.seed << ')';
  d.provenance = prov.str();
  d.validate();
  return d;
}

Dataset biased_subsample(const Dataset& d, std::span<const double> direction, double strength, std::uint64_t seed) {
  if (direction.size() != d.covariate_count()) throw std::invalid_argument("biased_subsample: direction has the wrong length");
  if (!(strength >= 0.0 && strength <= 1.0)) throw std::invalid_argument("biased_subsample: strength must be in [0, 1]");
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double u = uniform(rng);
    if (d.t[i] == 1.0 && u < strength * sigmoid(dot(direction, d.x.row(i)))) continue;
    keep.push_back(i);
  }
  Dataset out = d.subset(keep);
  out.provenance = d.provenance + " | biased_subsample";
  return out;
}

}  // namespace tedvae
