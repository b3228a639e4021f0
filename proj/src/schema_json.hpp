#pragma once

// src-local bridge between KeySchema and its JSON form, shared by the schema
// file I/O and the generator-spec file I/O.

#include <json.hpp>
#include <string>

#include "mecrl/schema.hpp"

namespace mecrl::detail {

nlohmann::json schema_to_json(const KeySchema& schema);
KeySchema schema_from_json(const nlohmann::json& j, const std::string& origin);

}  // namespace mecrl::detail
