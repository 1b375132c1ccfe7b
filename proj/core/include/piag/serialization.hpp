#pragma once

// JSON documents for problem instances: dense matrices row-major as
// {"rows", "cols", "data"}, infinite box bounds as null, plus the ground-truth
// metadata (Phi*, beta, solution point and null-space basis).

#include <nlohmann/json.hpp>

#include "piag/model.hpp"

namespace piag {

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

/// Throws InputError for components or regularizers without a JSON form
/// (FunctionComponent, user subclasses).
nlohmann::json instance_to_json(const ProblemInstance& problem);
ProblemInstance instance_from_json(const nlohmann::json& j);

}  // namespace piag
