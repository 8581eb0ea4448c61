#include "tedvae/schema.hpp"

#include <stdexcept>

namespace tedvae {

const char* to_string(ColumnKind kind) { return kind == ColumnKind::binary ? "binary" : "continuous"; }

ColumnKind column_kind_from_string(const std::string& name) {
  if (name == "binary") return ColumnKind::binary;
  if (name == "continuous") return ColumnKind::continuous;
  throw std::invalid_argument("unknown column kind '" + name + "'");
}

std::vector<std::size_t> ColumnSchema::indices_of(ColumnKind kind) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < covariates.size(); ++j)
    if (covariates[j] == kind) out.push_back(j);
  return out;
}

}  // namespace tedvae
