#include "tedvae/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tedvae {

namespace {
constexpr const char* kFormat = "tedvae-checkpoint";
constexpr int kVersion = 1;
}  // namespace

void save_model(const TedvaeModel& m, std::ostream& out) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  const auto& c = m.config();
  j["config"] = {{"dim_instrumental", c.dims.instrumental},
                 {"dim_confounding", c.dims.confounding},
                 {"dim_risk", c.dims.risk},
                 {"hidden_depth", c.hidden_depth},
                 {"hidden_width", c.hidden_width},
                 {"variance_floor", c.variance_floor},
                 {"alpha_t", c.alpha_t},
                 {"alpha_y", c.alpha_y},
                 {"aux_heads", to_string(c.aux_heads)}};
  std::vector<std::string> kinds;
  for (ColumnKind k : m.schema().covariates) kinds.emplace_back(to_string(k));
  j["schema"] = {{"covariates", kinds}, {"outcome", to_string(m.schema().outcome)}};
  const auto& p = m.preprocessing();
  j["preprocessing"] = {{"x_mean", p.x_mean}, {"x_scale", p.x_scale}, {"y_mean", p.y_mean}, {"y_scale", p.y_scale}};
  auto params = nlohmann::ordered_json::array();
  for (const ad::Parameter* param : m.parameters()) {
    params.push_back({{"name", param->name()},
                      {"shape", param->shape()},
                      {"values", std::vector<double>(param->values().begin(), param->values().end())}});
  }
  j["parameters"] = std::move(params);
  out << j.dump() << '\n';
}

void save_model(const TedvaeModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  save_model(m, out);
}

TedvaeModel load_model(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != kFormat) throw std::invalid_argument("not a tedvae checkpoint");
  if (j.value("version", 0) != kVersion) throw std::invalid_argument("unsupported checkpoint version");
  const auto& jc = j.at("config");
  ModelConfig cfg;
  cfg.dims = {jc.at("dim_instrumental").get<std::size_t>(), jc.at("dim_confounding").get<std::size_t>(),
              jc.at("dim_risk").get<std::size_t>()};
  cfg.hidden_depth = jc.at("hidden_depth").get<std::size_t>();
  cfg.hidden_width = jc.at("hidden_width").get<std::size_t>();
  cfg.variance_floor = jc.at("variance_floor").get<double>();
  cfg.alpha_t = jc.at("alpha_t").get<double>();
  cfg.alpha_y = jc.at("alpha_y").get<double>();
  cfg.aux_heads = aux_head_mode_from_string(jc.at("aux_heads").get<std::string>());

  ColumnSchema schema;
  for (const auto& k : j.at("schema").at("covariates")) schema.covariates.push_back(column_kind_from_string(k.get<std::string>()));
  schema.outcome = column_kind_from_string(j.at("schema").at("outcome").get<std::string>());

  TedvaeModel m(cfg, schema, 0);
  const auto& jp = j.at("preprocessing");
  m.set_preprocessing({jp.at("x_mean").get<std::vector<double>>(), jp.at("x_scale").get<std::vector<double>>(),
                       jp.at("y_mean").get<double>(), jp.at("y_scale").get<double>()});

  const auto& stored = j.at("parameters");
  ad::ParameterList params = m.parameters();
  if (stored.size() != params.size()) {
    throw std::invalid_argument("checkpoint holds " + std::to_string(stored.size()) + " parameters, model has " +
                                std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& e = stored[k];
    if (e.at("name").get<std::string>() != params[k]->name() || e.at("shape").get<ad::Shape>() != params[k]->shape()) {
      throw std::invalid_argument("checkpoint parameter " + std::to_string(k) + " ('" + e.at("name").get<std::string>() +
                                  "') does not match model parameter '" + params[k]->name() + "'");
    }
    const auto values = e.at("values").get<std::vector<double>>();
    std::copy(values.begin(), values.end(), params[k]->values().begin());
  }
  return m;
}

TedvaeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open checkpoint " + path.string());
  return load_model(in);
}

}  // namespace tedvae
