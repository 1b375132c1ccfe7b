#include "piag/serialization.hpp"

#include <cmath>
#include <string>

namespace piag {

namespace {

constexpr const char* kFormat = "piag-instance/1";

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("instance JSON: missing field '") + key + "'");
  return j.at(key);
}

double bound_from_json(const nlohmann::json& value, double infinite) {
  if (value.is_null()) return infinite;
  if (!value.is_number()) throw InputError("instance JSON: box bound must be a number or null");
  return value.get<double>();
}

nlohmann::json bounds_to_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i]))
      out.push_back(v[i]);
    else
      out.push_back(nullptr);
  }
  return out;
}

Vector bounds_from_json(const nlohmann::json& j, double infinite) {
  if (!j.is_array()) throw InputError("instance JSON: box bounds must be an array");
  Vector out(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out[static_cast<Index>(i)] = bound_from_json(j[i], infinite);
  return out;
}

nlohmann::json component_to_json(const SmoothComponent& component) {
  if (const auto* ls = dynamic_cast<const LeastSquaresComponent*>(&component))
    return {{"kind", "least_squares"}, {"A", matrix_to_json(ls->matrix())}, {"b", vector_to_json(ls->rhs())}};
  if (const auto* quad = dynamic_cast<const QuadraticComponent*>(&component))
    return {{"kind", "quadratic"}, {"Q", matrix_to_json(quad->hessian())}, {"q", vector_to_json(quad->linear())}};
  throw InputError("instance JSON: component type has no serialized form");
}

ComponentPtr component_from_json(const nlohmann::json& j) {
  const auto kind = field(j, "kind").get<std::string>();
  if (kind == "least_squares")
    return std::make_shared<LeastSquaresComponent>(matrix_from_json(field(j, "A")), vector_from_json(field(j, "b")));
  if (kind == "quadratic")
    return std::make_shared<QuadraticComponent>(matrix_from_json(field(j, "Q")), vector_from_json(field(j, "q")));
  throw InputError("instance JSON: unknown component kind '" + kind + "'");
}

nlohmann::json regularizer_to_json(const Regularizer& h) {
  if (dynamic_cast<const ZeroRegularizer*>(&h)) return {{"kind", "zero"}};
  if (const auto* l1 = dynamic_cast<const L1Regularizer*>(&h)) return {{"kind", "l1"}, {"lambda", l1->weight()}};
  if (const auto* box = dynamic_cast<const BoxIndicator*>(&h))
    return {{"kind", "box"}, {"lower", bounds_to_json(box->lower())}, {"upper", bounds_to_json(box->upper())}};
  throw InputError("instance JSON: regularizer type has no serialized form");
}

RegularizerPtr regularizer_from_json(const nlohmann::json& j) {
  const auto kind = field(j, "kind").get<std::string>();
  if (kind == "zero") return std::make_shared<ZeroRegularizer>();
  if (kind == "l1") return std::make_shared<L1Regularizer>(field(j, "lambda").get<double>());
  if (kind == "box")
    return std::make_shared<BoxIndicator>(bounds_from_json(field(j, "lower"), -kInfinity),
                                          bounds_from_json(field(j, "upper"), kInfinity));
  throw InputError("instance JSON: unknown regularizer kind '" + kind + "'");
}

}  // namespace

nlohmann::json matrix_to_json(const Matrix& M) {
  auto data = nlohmann::json::array();
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) data.push_back(M(i, j));
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = field(j, "rows").get<Index>();
  const auto cols = field(j, "cols").get<Index>();
  const auto& data = field(j, "data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Index>(data.size()) != rows * cols)
    throw InputError("instance JSON: matrix data does not match rows x cols");
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) M(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
  return M;
}

nlohmann::json vector_to_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InputError("instance JSON: expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError("instance JSON: expected an array of numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

nlohmann::json instance_to_json(const ProblemInstance& problem) {
  nlohmann::json out;
  out["format"] = kFormat;
  out["dimension"] = problem.dimension();
  out["total_lipschitz"] = problem.total_lipschitz();
  auto components = nlohmann::json::array();
  for (const auto& f : problem.components()) components.push_back(component_to_json(*f));
  out["components"] = std::move(components);
  out["regularizer"] = regularizer_to_json(problem.regularizer());
  if (const auto& truth = problem.ground_truth()) {
    nlohmann::json gt;
    gt["optimal_value"] = truth->optimal_value;
    gt["qg_constant"] = truth->qg_constant;
    gt["beta_estimated"] = truth->beta_estimated;
    if (truth->qg_sample_minimum) gt["qg_sample_minimum"] = *truth->qg_sample_minimum;
    gt["solution_point"] = vector_to_json(truth->solutions.point);
    gt["null_basis"] = matrix_to_json(truth->solutions.null_basis);
    if (truth->solutions.has_box()) {
      gt["box_lower"] = bounds_to_json(*truth->solutions.box_lower);
      gt["box_upper"] = bounds_to_json(*truth->solutions.box_upper);
    }
    out["ground_truth"] = std::move(gt);
  }
  return out;
}

ProblemInstance instance_from_json(const nlohmann::json& j) {
  try {
    if (field(j, "format").get<std::string>() != kFormat) throw InputError("instance JSON: unsupported format");
    std::vector<ComponentPtr> components;
    const auto& list = field(j, "components");
    if (!list.is_array()) throw InputError("instance JSON: 'components' must be an array");
    for (const auto& c : list) components.push_back(component_from_json(c));
    auto regularizer = regularizer_from_json(field(j, "regularizer"));

    std::optional<GroundTruth> truth;
    if (j.contains("ground_truth")) {
      const auto& gt = j.at("ground_truth");
      GroundTruth value;
      value.optimal_value = field(gt, "optimal_value").get<double>();
      value.qg_constant = field(gt, "qg_constant").get<double>();
      value.beta_estimated = field(gt, "beta_estimated").get<bool>();
      if (gt.contains("qg_sample_minimum")) value.qg_sample_minimum = gt.at("qg_sample_minimum").get<double>();
      value.solutions.point = vector_from_json(field(gt, "solution_point"));
      value.solutions.null_basis = matrix_from_json(field(gt, "null_basis"));
      if (gt.contains("box_lower")) {
        value.solutions.box_lower = bounds_from_json(gt.at("box_lower"), -kInfinity);
        value.solutions.box_upper = bounds_from_json(field(gt, "box_upper"), kInfinity);
      }
      truth = std::move(value);
    }
    return ProblemInstance(std::move(components), std::move(regularizer), std::move(truth));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("instance JSON: ") + e.what());
  }
}

}  // namespace piag
