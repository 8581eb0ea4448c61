#include "tedvae/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace tedvae {

double pehe(std::span<const double> tau_hat, std::span<const double> tau_true) {
  if (tau_hat.size() != tau_true.size()) {
    throw std::invalid_argument("pehe: length mismatch (" + std::to_string(tau_hat.size()) + " vs " +
                                std::to_string(tau_true.size()) + ")");
  }
  if (tau_hat.empty()) throw std::invalid_argument("pehe: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < tau_hat.size(); ++i) {
    const double r = tau_hat[i] - tau_true[i];
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(tau_hat.size()));
}

double rct_contrast(const Dataset& rct) {
  if (rct.size() == 0) throw std::invalid_argument("rct_contrast: empty dataset");
  double s = 0.0;
  for (std::size_t i = 0; i < rct.size(); ++i) {
    const double t = rct.t[i];
    if (t != 0.0 && t != 1.0) throw std::invalid_argument("rct_contrast: non-binary treatment in row " + std::to_string(i + 1));
    s += t * rct.y[i] - (1.0 - t) * rct.y[i];
  }
  return s / static_cast<double>(rct.size());
}

double ate_error(double ate_hat, const Dataset& rct) { return std::abs(ate_hat - rct_contrast(rct)); }

double difference_in_means(const Dataset& d) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.t[i] == 1.0) {
      s1 += d.y[i];
      ++n1;
    } else {
      s0 += d.y[i];
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) throw std::invalid_argument("difference_in_means: one arm is empty");
  return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

void EvalReport::validate() const {
  if (!pehe && !ate_error) throw std::invalid_argument("eval report carries no metric");
  if ((pehe && !(*pehe >= 0.0)) || (ate_error && !(*ate_error >= 0.0))) {
    throw std::invalid_argument("eval report metric is negative or NaN");
  }
}

std::string EvalReport::to_json_line() const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["n"] = n;
  j["seed"] = seed;
  j["label"] = label;
  j["pehe"] = pehe ? nlohmann::ordered_json(*pehe) : nlohmann::ordered_json(nullptr);
  j["ate_error"] = ate_error ? nlohmann::ordered_json(*ate_error) : nlohmann::ordered_json(nullptr);
  j["ate_estimate"] = ate_estimate ? nlohmann::ordered_json(*ate_estimate) : nlohmann::ordered_json(nullptr);
  j["ate_reference"] = ate_reference;
  j["config_hash"] = config_hash;
  j["config"] = config_json.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json::parse(config_json);
  return j.dump();
}

EvalReport EvalReport::from_json_line(const std::string& line) {
  const auto j = nlohmann::ordered_json::parse(line);
  EvalReport r;
  r.split = j.at("split").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.label = j.value("label", "");
  if (!j.at("pehe").is_null()) r.pehe = j.at("pehe").get<double>();
  if (!j.at("ate_error").is_null()) r.ate_error = j.at("ate_error").get<double>();
  if (j.contains("ate_estimate") && !j.at("ate_estimate").is_null()) r.ate_estimate = j.at("ate_estimate").get<double>();
  r.ate_reference = j.value("ate_reference", "");
  r.config_hash = j.at("config_hash").get<std::string>();
  if (!j.at("config").is_null()) r.config_json = j.at("config").dump();
  return r;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tedvae
