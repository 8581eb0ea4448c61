#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tedvae {

enum class ColumnKind { continuous, binary };

const char* to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& name);

// Likelihood family of each covariate column and of the outcome.
struct ColumnSchema {
  std::vector<ColumnKind> covariates;
  ColumnKind outcome = ColumnKind::continuous;

  std::size_t size() const { return covariates.size(); }
  std::vector<std::size_t> indices_of(ColumnKind kind) const;
  std::size_t count(ColumnKind kind) const { return indices_of(kind).size(); }

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

}  // namespace tedvae
