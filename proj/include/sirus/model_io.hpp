#pragma once

#include <string>

#include "sirus/aggregation.hpp"

namespace sirus {

// JSON document with every double written in shortest round-trip form, so
// save followed by load reproduces the model bit for bit.
std::string model_to_json(const SirusModel& model);
SirusModel model_from_json(const std::string& text);

void save_model(const SirusModel& model, const std::string& path);
SirusModel load_model(const std::string& path);

}  // namespace sirus
