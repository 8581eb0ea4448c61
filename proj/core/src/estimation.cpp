#include "tedvae/estimation.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tedvae/train.hpp"

namespace tedvae {

CatePrediction predict_cate(const TedvaeModel& m, const Matrix& x, std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("predict_cate: sample count must be at least 1");
  const std::size_t n = x.rows();
  const ad::Tensor xm = model_covariates(m, x);
  const dist::DiagGaussian q_c = encode_block(m, LatentBlock::confounding, xm);
  const dist::DiagGaussian q_y = encode_block(m, LatentBlock::risk, xm);

  Rng rng(mix_seed(seed, 0x63617465ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::size_t cols) {
    std::vector<double> v(n * cols);
    for (double& e : v) e = normal(rng);
    return ad::Tensor({n, cols}, std::move(v));
  };

  CatePrediction out;
  out.samples = samples;
  out.y0.assign(n, 0.0);
  out.y1.assign(n, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    const ad::Tensor z_c = dist::rsample(q_c, draw(q_c.dim()));
    const ad::Tensor z_y = dist::rsample(q_y, draw(q_y.dim()));
    const auto treated = expected_outcome(m, 1, z_c, z_y);
    const auto control = expected_outcome(m, 0, z_c, z_y);
    for (std::size_t i = 0; i < n; ++i) {
      out.y1[i] += treated[i];
      out.y0[i] += control[i];
    }
  }

  const auto& p = m.preprocessing();
  const bool continuous = m.schema().outcome == ColumnKind::continuous;
  const double inv = 1.0 / static_cast<double>(samples);
  out.tau.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.y1[i] *= inv;
    out.y0[i] *= inv;
    if (continuous) {
      out.y1[i] = out.y1[i] * p.y_scale + p.y_mean;
      out.y0[i] = out.y0[i] * p.y_scale + p.y_mean;
    }
    out.tau[i] = out.y1[i] - out.y0[i];
  }
  return out;
}

double average_effect(const CatePrediction& p) {
  if (p.tau.empty()) throw std::invalid_argument("average effect of an empty prediction");
  double s = 0.0;
  for (double v : p.tau) s += v;
  return s / static_cast<double>(p.tau.size());
}

double predict_ate(const TedvaeModel& m, const Matrix& x, std::size_t samples, std::uint64_t seed) {
  if (x.rows() == 0) throw std::invalid_argument("predict_ate: empty batch");
  return average_effect(predict_cate(m, x, samples, seed));
}

namespace {
std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
}  // namespace

void write_predictions(const CatePrediction& p, std::ostream& out) {
  out << "id,y0_hat,y1_hat,tau_hat\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << i << ',' << format_double(p.y0[i]) << ',' << format_double(p.y1[i]) << ',' << format_double(p.tau[i]) << '\n';
  }
}

void write_predictions(const CatePrediction& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions to " + path.string());
  write_predictions(p, out);
}

CatePrediction read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open predictions file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("id,y0_hat,y1_hat,tau_hat", 0) != 0) {
    throw std::invalid_argument(path.string() + ": expected header id,y0_hat,y1_hat,tau_hat");
  }
  CatePrediction p;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::istringstream ss(line);
    std::string cell;
    double values[4];
    for (double& v : values) {
      if (!std::getline(ss, cell, ',')) throw std::invalid_argument(path.string() + ": short row " + std::to_string(row));
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{}) throw std::invalid_argument(path.string() + ": bad number in row " + std::to_string(row));
    }
    p.y0.push_back(values[1]);
    p.y1.push_back(values[2]);
    p.tau.push_back(values[3]);
  }
  return p;
}

}  // namespace tedvae
