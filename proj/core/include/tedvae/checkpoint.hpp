#pragma once

#include <filesystem>
#include <iosfwd>

#include "tedvae/model.hpp"

namespace tedvae {

// JSON checkpoint holding the model config, column schema, preprocessing and
// every parameter tensor. Doubles are written with round-trip precision, so
// save -> load reproduces the model bit for bit.
void save_model(const TedvaeModel& m, std::ostream& out);
void save_model(const TedvaeModel& m, const std::filesystem::path& path);
TedvaeModel load_model(std::istream& in);
TedvaeModel load_model(const std::filesystem::path& path);

}  // namespace tedvae
