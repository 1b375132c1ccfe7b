#include <doctest.h>

#include <memory>

#include "piag/problems.hpp"
#include "piag/serialization.hpp"

using namespace piag;

TEST_CASE("matrices are row-major") {
  Matrix M(2, 3);
  M << 1, 2, 3, 4, 5, 6;
  const auto j = matrix_to_json(M);
  CHECK(j.at("rows") == 2);
  CHECK(j.at("cols") == 3);
  CHECK(j.at("data") == nlohmann::json::array({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}));
  CHECK(matrix_from_json(j) == M);
  nlohmann::json bad = j;
  bad["cols"] = 4;
  CHECK_THROWS_AS(matrix_from_json(bad), InputError);
}

TEST_CASE("least-squares instance round-trips exactly") {
  RandomLeastSquaresOptions options;
  options.seed = 9;
  const auto p = random_least_squares(options);
  const auto q = instance_from_json(nlohmann::json::parse(instance_to_json(p).dump()));
  CHECK(q.size() == p.size());
  CHECK(q.total_lipschitz() == p.total_lipschitz());
  CHECK(q.is_pure_least_squares());
  const auto& a = p.require_ground_truth();
  const auto& b = q.require_ground_truth();
  CHECK(a.optimal_value == b.optimal_value);
  CHECK(a.qg_constant == b.qg_constant);
  CHECK(a.solutions.point == b.solutions.point);
  CHECK(a.solutions.null_basis == b.solutions.null_basis);
  const Vector x = random_point(options.d, 3);
  CHECK(objective(p, x) == objective(q, x));
  CHECK(full_gradient(p, x) == full_gradient(q, x));
  CHECK(instance_to_json(q) == instance_to_json(p));
}

TEST_CASE("box and l1 regularizers round-trip") {
  const auto box = random_box_quadratic(4, 8, -1.0, 1.0, 2, 3);
  const auto j = instance_to_json(box);
  CHECK(j.at("regularizer").at("kind") == "box");
  const auto back = instance_from_json(j);
  CHECK(back.require_ground_truth().solutions.has_box());
  CHECK(back.require_ground_truth().beta_estimated);
  CHECK(instance_to_json(back) == j);

  const auto lasso = random_lasso(4, 8, 0.2, 2, 5);
  const auto jl = instance_to_json(lasso);
  CHECK(jl.at("regularizer").at("lambda") == 0.2);
  CHECK(instance_to_json(instance_from_json(jl)) == jl);
}

TEST_CASE("infinite box bounds are null") {
  Vector lo(2), hi(2);
  lo << 0.0, -kInfinity;
  hi << kInfinity, 1.0;
  ProblemInstance p({std::make_shared<QuadraticComponent>(Matrix::Identity(2, 2), Vector::Zero(2))},
                    std::make_shared<BoxIndicator>(lo, hi));
  const auto j = instance_to_json(p);
  CHECK(j.at("regularizer").at("upper")[0].is_null());
  CHECK(j.at("regularizer").at("lower")[1].is_null());
  const auto back = instance_from_json(j);
  Vector y(2);
  y << -5.0, 5.0;
  const Vector x = prox_step(back, 1.0, y);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 1.0);
  CHECK_FALSE(back.has_ground_truth());
}

TEST_CASE("function components cannot be serialized") {
  ProblemInstance p({std::make_shared<FunctionComponent>(
                        1, [](const Vector& x) { return x.squaredNorm(); }, [](const Vector& x) { return Vector(2 * x); },
                        2.0)},
                    std::make_shared<ZeroRegularizer>());
  CHECK_THROWS_AS(instance_to_json(p), InputError);
}

TEST_CASE("malformed documents are input errors") {
  CHECK_THROWS_AS(instance_from_json(nlohmann::json::object()), InputError);
  auto j = instance_to_json(make_least_squares(Matrix::Identity(2, 2), Vector::Zero(2), 1, 1));
  j["components"][0]["kind"] = "logistic";
  CHECK_THROWS_AS(instance_from_json(j), InputError);
  j = instance_to_json(make_least_squares(Matrix::Identity(2, 2), Vector::Zero(2), 1, 1));
  j["format"] = "other";
  CHECK_THROWS_AS(instance_from_json(j), InputError);
}
