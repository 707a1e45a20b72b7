#pragma once

#include "stratsel/errors.hpp"
#include "stratsel/types.hpp"

namespace stratsel {

// Radial projection onto the unit sphere. Throws on (numerically) zero input;
// callers that step a policy treat that as "keep the previous iterate".
inline Vec project_sphere(const Vec& v) {
  const double norm = v.norm();
  if (norm < 1e-12)
    throw DegenerateStepError("project_sphere: vector norm below 1e-12");
  return v / norm;
}

// Component of v orthogonal to beta: (I - beta beta') v.
inline Vec tangent_project(const Vec& beta, const Vec& v) {
  return v - beta.dot(v) * beta;
}

}  // namespace stratsel
