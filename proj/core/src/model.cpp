#include "tedvae/model.hpp"

#include <cmath>
#include <stdexcept>

namespace tedvae {

const char* to_string(LatentBlock block) {
  switch (block) {
    case LatentBlock::instrumental: return "z_t";
    case LatentBlock::confounding: return "z_c";
    case LatentBlock::risk: return "z_y";
  }
  return "?";
}

LatentBlock latent_block_from_string(const std::string& name) {
  if (name == "z_t" || name == "zt" || name == "t" || name == "instrumental") return LatentBlock::instrumental;
  if (name == "z_c" || name == "zc" || name == "c" || name == "confounding") return LatentBlock::confounding;
  if (name == "z_y" || name == "zy" || name == "y" || name == "risk") return LatentBlock::risk;
  throw std::invalid_argument("unknown latent block '" + name + "' (expected z_t, z_c or z_y)");
}

const char* to_string(AuxHeadMode mode) { return mode == AuxHeadMode::aliased ? "aliased" : "separate"; }

AuxHeadMode aux_head_mode_from_string(const std::string& name) {
  if (name == "aliased") return AuxHeadMode::aliased;
  if (name == "separate") return AuxHeadMode::separate;
  throw std::invalid_argument("unknown auxiliary head mode '" + name + "'");
}

Mlp::Mlp(const std::string& name, std::size_t in_dim, std::size_t out_dim, std::size_t depth, std::size_t width,
         Rng& rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
  std::size_t fan_in = in_dim;
  for (std::size_t layer = 0; layer <= depth; ++layer) {
    const std::size_t fan_out = layer == depth ? out_dim : width;
    std::vector<double> w(fan_in * fan_out, 0.0);
    if (fan_in > 0) {
      // Gain sqrt(2) ahead of an ELU, 1 for the identity output layer.
      const double gain_sq = layer == depth ? 1.0 : 2.0;
      const double bound = std::sqrt(3.0 * gain_sq / static_cast<double>(fan_in));
      std::uniform_real_distribution<double> uniform(-bound, bound);
      for (double& v : w) v = uniform(rng);
    }
    weights_.emplace_back(name + ".w" + std::to_string(layer), ad::Shape{fan_in, fan_out}, std::move(w));
    biases_.emplace_back(name + ".b" + std::to_string(layer), ad::Shape{fan_out});
    fan_in = fan_out;
  }
}

ad::Tensor Mlp::forward(const ad::Tensor& x, ad::Graph* graph) const {
  if (x.rank() != 2 || x.dim(1) != in_dim_) {
    throw std::invalid_argument("mlp: input shape " + ad::to_string(x.shape()) + " does not match input width " +
                                std::to_string(in_dim_));
  }
  auto bind = [graph](const ad::Parameter& p) {
    if (graph != nullptr) return graph->parameter(p);
    return ad::Tensor(p.shape(), std::vector<double>(p.values().begin(), p.values().end()));
  };
  ad::Tensor h = x;
  for (std::size_t layer = 0; layer < weights_.size(); ++layer) {
    h = ad::broadcast_add(ad::matmul(h, bind(weights_[layer])), bind(biases_[layer]));
    if (layer + 1 < weights_.size()) h = ad::elu(h);
  }
  return h;
}

void Mlp::append_parameters(ad::ParameterList& out) {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out.push_back(&weights_[i]);
    out.push_back(&biases_[i]);
  }
}

void Mlp::append_parameters(std::vector<const ad::Parameter*>& out) const {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    out.push_back(&weights_[i]);
    out.push_back(&biases_[i]);
  }
}

void OutcomeHeads::append_parameters(ad::ParameterList& out) {
  treated_mean.append_parameters(out);
  control_mean.append_parameters(out);
  if (treated_variance) treated_variance->append_parameters(out);
  if (control_variance) control_variance->append_parameters(out);
}

void OutcomeHeads::append_parameters(std::vector<const ad::Parameter*>& out) const {
  treated_mean.append_parameters(out);
  control_mean.append_parameters(out);
  if (treated_variance) treated_variance->append_parameters(out);
  if (control_variance) control_variance->append_parameters(out);
}

namespace {

OutcomeHeads make_outcome_heads(const std::string& prefix, std::size_t in_dim, bool continuous,
                                const ModelConfig& cfg, Rng& rng) {
  OutcomeHeads heads;
  heads.treated_mean = Mlp(prefix + ".treated_mean", in_dim, 1, cfg.hidden_depth, cfg.hidden_width, rng);
  heads.control_mean = Mlp(prefix + ".control_mean", in_dim, 1, cfg.hidden_depth, cfg.hidden_width, rng);
  if (continuous) {
    heads.treated_variance = Mlp(prefix + ".treated_variance", in_dim, 1, cfg.hidden_depth, cfg.hidden_width, rng);
    heads.control_variance = Mlp(prefix + ".control_variance", in_dim, 1, cfg.hidden_depth, cfg.hidden_width, rng);
  }
  return heads;
}

}  // namespace

TedvaeModel::TedvaeModel(ModelConfig config, ColumnSchema schema, std::uint64_t seed)
    : config_(config), schema_(std::move(schema)) {
  const LatentDims& d = config_.dims;
  if (d.total() == 0) throw std::invalid_argument("model: latent dimensions are all zero");
  if (schema_.covariates.empty()) throw std::invalid_argument("model: schema has no covariates");
  if (!(config_.variance_floor >= 0.0)) throw std::invalid_argument("model: variance floor must be >= 0");

  Rng rng(seed);
  const std::size_t n_cov = schema_.size();
  const std::size_t depth = config_.hidden_depth;
  const std::size_t width = config_.hidden_width;
  if (d.instrumental > 0) encoder_t_ = Mlp("encoder_t", n_cov, 2 * d.instrumental, depth, width, rng);
  if (d.confounding > 0) encoder_c_ = Mlp("encoder_c", n_cov, 2 * d.confounding, depth, width, rng);
  if (d.risk > 0) encoder_y_ = Mlp("encoder_y", n_cov, 2 * d.risk, depth, width, rng);

  const std::size_t n_cont = schema_.count(ColumnKind::continuous);
  const std::size_t n_bin = schema_.count(ColumnKind::binary);
  decoder_ = Mlp("decoder", d.total(), 2 * n_cont + n_bin, depth, width, rng);
  treatment_head_ = Mlp("f1", d.instrumental + d.confounding, 1, depth, width, rng);
  const bool continuous = schema_.outcome == ColumnKind::continuous;
  outcome_heads_ = make_outcome_heads("f", d.confounding + d.risk, continuous, config_, rng);
  if (config_.aux_heads == AuxHeadMode::separate) {
    aux_t_ = Mlp("aux_t", d.instrumental + d.confounding, 1, depth, width, rng);
    aux_y_ = make_outcome_heads("aux_y", d.confounding + d.risk, continuous, config_, rng);
  }

  preprocessing_.x_mean.assign(n_cov, 0.0);
  preprocessing_.x_scale.assign(n_cov, 1.0);
}

void TedvaeModel::set_preprocessing(Preprocessing p) {
  if (p.x_mean.size() != schema_.size() || p.x_scale.size() != schema_.size()) {
    throw std::invalid_argument("preprocessing does not match the covariate count");
  }
  for (double s : p.x_scale)
    if (!(s > 0.0)) throw std::invalid_argument("preprocessing scale must be positive");
  if (!(p.y_scale > 0.0)) throw std::invalid_argument("outcome scale must be positive");
  preprocessing_ = std::move(p);
}

const Mlp* TedvaeModel::encoder(LatentBlock block) const {
  switch (block) {
    case LatentBlock::instrumental: return encoder_t_ ? &*encoder_t_ : nullptr;
    case LatentBlock::confounding: return encoder_c_ ? &*encoder_c_ : nullptr;
    case LatentBlock::risk: return encoder_y_ ? &*encoder_y_ : nullptr;
  }
  return nullptr;
}

Mlp* TedvaeModel::encoder(LatentBlock block) {
  return const_cast<Mlp*>(static_cast<const TedvaeModel&>(*this).encoder(block));
}

const Mlp& TedvaeModel::treatment_classifier() const { return aux_t_ ? *aux_t_ : treatment_head_; }
Mlp& TedvaeModel::treatment_classifier() { return aux_t_ ? *aux_t_ : treatment_head_; }
const OutcomeHeads& TedvaeModel::outcome_classifier() const { return aux_y_ ? *aux_y_ : outcome_heads_; }
OutcomeHeads& TedvaeModel::outcome_classifier() { return aux_y_ ? *aux_y_ : outcome_heads_; }

ad::ParameterList TedvaeModel::parameters() {
  ad::ParameterList out;
  for (auto* e : {&encoder_t_, &encoder_c_, &encoder_y_})
    if (*e) (*e)->append_parameters(out);
  decoder_.append_parameters(out);
  treatment_head_.append_parameters(out);
  outcome_heads_.append_parameters(out);
  if (aux_t_) aux_t_->append_parameters(out);
  if (aux_y_) aux_y_->append_parameters(out);
  return out;
}

std::vector<const ad::Parameter*> TedvaeModel::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const auto* e : {&encoder_t_, &encoder_c_, &encoder_y_})
    if (*e) (*e)->append_parameters(out);
  decoder_.append_parameters(out);
  treatment_head_.append_parameters(out);
  outcome_heads_.append_parameters(out);
  if (aux_t_) aux_t_->append_parameters(out);
  if (aux_y_) aux_y_->append_parameters(out);
  return out;
}

ad::ParameterList TedvaeModel::parameters(ParameterGroup group) {
  ad::ParameterList out;
  switch (group) {
    case ParameterGroup::encoder_instrumental:
      if (encoder_t_) encoder_t_->append_parameters(out);
      break;
    case ParameterGroup::encoder_confounding:
      if (encoder_c_) encoder_c_->append_parameters(out);
      break;
    case ParameterGroup::encoder_risk:
      if (encoder_y_) encoder_y_->append_parameters(out);
      break;
    case ParameterGroup::decoder: decoder_.append_parameters(out); break;
    case ParameterGroup::treatment_head: treatment_head_.append_parameters(out); break;
    case ParameterGroup::outcome_heads: outcome_heads_.append_parameters(out); break;
    case ParameterGroup::treatment_classifier: treatment_classifier().append_parameters(out); break;
    case ParameterGroup::outcome_classifier: outcome_classifier().append_parameters(out); break;
  }
  return out;
}

const dist::DiagGaussian& Posterior::block(LatentBlock b) const {
  switch (b) {
    case LatentBlock::instrumental: return instrumental;
    case LatentBlock::confounding: return confounding;
    case LatentBlock::risk: return risk;
  }
  return confounding;
}

namespace {

dist::DiagGaussian encode_with(const Mlp* encoder, std::size_t dim, const ad::Tensor& x, double floor,
                                ad::Graph* graph) {
  const std::size_t batch = x.dim(0);
  if (encoder == nullptr) {
    return {ad::Tensor::zeros({batch, 0}), ad::Tensor::zeros({batch, 0})};
  }
  const ad::Tensor out = encoder->forward(x, graph);
  return {ad::slice_cols(out, 0, dim), ad::add_scalar(ad::softplus(ad::slice_cols(out, dim, 2 * dim)), floor)};
}

void require_latent(const char* what, const ad::Tensor& z, std::size_t batch, std::size_t dim) {
  if (z.rank() != 2 || z.dim(0) != batch || z.dim(1) != dim) {
    throw std::invalid_argument(std::string(what) + ": latent shape " + ad::to_string(z.shape()) + ", expected [" +
                                std::to_string(batch) + ", " + std::to_string(dim) + "]");
  }
}

// Untracked columns of a constant tensor.
ad::Tensor gather_constant_cols(const ad::Tensor& x, const std::vector<std::size_t>& cols) {
  const std::size_t rows = x.dim(0), width = x.dim(1);
  std::vector<double> out(rows * cols.size());
  const auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols.size(); ++j) out[r * cols.size() + j] = xv[r * width + cols[j]];
  return ad::Tensor({rows, cols.size()}, std::move(out));
}

}  // namespace

void require_binary(const char* what, const ad::Tensor& t) {
  for (double v : t.values()) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument(std::string(what) + ": treatment must be 0 or 1, got " + std::to_string(v));
  }
}

Posterior encode(const TedvaeModel& m, const ad::Tensor& x, ad::Graph* graph) {
  if (x.rank() != 2 || x.dim(1) != m.schema().size()) {
    throw std::invalid_argument("encode: covariate batch " + ad::to_string(x.shape()) + " does not match schema with " +
                                std::to_string(m.schema().size()) + " columns");
  }
  const auto& d = m.config().dims;
  const double floor = m.config().variance_floor;
  return {encode_with(m.encoder(LatentBlock::instrumental), d.instrumental, x, floor, graph),
          encode_with(m.encoder(LatentBlock::confounding), d.confounding, x, floor, graph),
          encode_with(m.encoder(LatentBlock::risk), d.risk, x, floor, graph)};
}

dist::DiagGaussian encode_block(const TedvaeModel& m, LatentBlock block, const ad::Tensor& x, ad::Graph* graph) {
  if (x.rank() != 2 || x.dim(1) != m.schema().size()) {
    throw std::invalid_argument("encode: covariate batch " + ad::to_string(x.shape()) + " does not match schema with " +
                                std::to_string(m.schema().size()) + " columns");
  }
  const auto& d = m.config().dims;
  const std::size_t dim = block == LatentBlock::instrumental ? d.instrumental
                          : block == LatentBlock::confounding ? d.confounding
                                                               : d.risk;
  return encode_with(m.encoder(block), dim, x, m.config().variance_floor, graph);
}

DecodedCovariates decode_x(const TedvaeModel& m, const ad::Tensor& z_t, const ad::Tensor& z_c, const ad::Tensor& z_y,
                           ad::Graph* graph) {
  const auto& d = m.config().dims;
  const std::size_t batch = z_c.rank() == 2 ? z_c.dim(0) : 0;
  require_latent("decode_x", z_t, batch, d.instrumental);
  require_latent("decode_x", z_c, batch, d.confounding);
  require_latent("decode_x", z_y, batch, d.risk);
  const ad::Tensor parts[] = {z_t, z_c, z_y};
  const ad::Tensor out = m.decoder().forward(ad::concat_cols(parts), graph);
  const std::size_t n_cont = m.schema().count(ColumnKind::continuous);
  const std::size_t n_bin = m.schema().count(ColumnKind::binary);
  DecodedCovariates decoded{
      {ad::slice_cols(out, 0, n_cont),
       ad::add_scalar(ad::softplus(ad::slice_cols(out, n_cont, 2 * n_cont)), m.config().variance_floor)},
      {ad::slice_cols(out, 2 * n_cont, 2 * n_cont + n_bin)}};
  return decoded;
}

ad::Tensor reconstruction_log_prob(const TedvaeModel& m, const DecodedCovariates& decoded, const ad::Tensor& x) {
  if (x.tracked()) throw std::logic_error("reconstruction_log_prob: covariates must be constant data");
  const ad::Tensor x_cont = gather_constant_cols(x, m.schema().indices_of(ColumnKind::continuous));
  const ad::Tensor x_bin = gather_constant_cols(x, m.schema().indices_of(ColumnKind::binary));
  return ad::add(dist::gaussian_log_prob(decoded.continuous, x_cont), dist::bernoulli_log_prob(decoded.binary, x_bin));
}

OutcomeParams outcome_params(const TedvaeModel& m, const OutcomeHeads& heads, const ad::Tensor& t,
                             const ad::Tensor& z_c, const ad::Tensor& z_y, ad::Graph* graph) {
  const auto& d = m.config().dims;
  const std::size_t batch = t.rank() == 2 ? t.dim(0) : 0;
  if (t.rank() != 2 || t.dim(1) != 1) throw std::invalid_argument("outcome_params: t must be (batch x 1)");
  require_binary("outcome_params", t);
  require_latent("outcome_params", z_c, batch, d.confounding);
  require_latent("outcome_params", z_y, batch, d.risk);

  const ad::Tensor parts[] = {z_c, z_y};
  const ad::Tensor z = ad::concat_cols(parts);
  const ad::Tensor control = ad::add_scalar(ad::neg(t), 1.0);
  auto arm_switch = [&](const ad::Tensor& treated, const ad::Tensor& untreated) {
    return ad::add(ad::mul(t, treated), ad::mul(control, untreated));
  };
  OutcomeParams out{arm_switch(heads.treated_mean.forward(z, graph), heads.control_mean.forward(z, graph)), {}};
  if (m.schema().outcome == ColumnKind::continuous) {
    if (!heads.treated_variance || !heads.control_variance) {
      throw std::logic_error("outcome_params: continuous outcome without variance heads");
    }
    const ad::Tensor v = arm_switch(ad::softplus(heads.treated_variance->forward(z, graph)),
                                    ad::softplus(heads.control_variance->forward(z, graph)));
    out.variance = ad::add_scalar(v, m.config().variance_floor);
  }
  return out;
}

OutcomeParams outcome_params(const TedvaeModel& m, const ad::Tensor& t, const ad::Tensor& z_c, const ad::Tensor& z_y,
                             ad::Graph* graph) {
  return outcome_params(m, m.outcome_heads(), t, z_c, z_y, graph);
}

std::vector<double> expected_outcome(const TedvaeModel& m, int arm, const ad::Tensor& z_c, const ad::Tensor& z_y) {
  const ad::Tensor parts[] = {z_c, z_y};
  const ad::Tensor z = ad::concat_cols(parts);
  const OutcomeHeads& heads = m.outcome_classifier();
  const ad::Tensor loc = arm == 1 ? heads.treated_mean.forward(z) : heads.control_mean.forward(z);
  std::vector<double> out(loc.values().begin(), loc.values().end());
  if (m.schema().outcome == ColumnKind::binary) {
    for (double& v : out) v = ad::stable_sigmoid(v);
  }
  return out;
}

}  // namespace tedvae
