#pragma once

#include <filesystem>

#include "json.hpp"
#include "lagvar/model.hpp"

namespace lagvar {

/// Model file schema (JSON); see docs/model-file.md.
ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& model);
ModelSpec load_model_file(const std::filesystem::path& path);

}  // namespace lagvar
