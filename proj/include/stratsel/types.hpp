#pragma once

#include <Eigen/Dense>
#include <string>

#include "stratsel/errors.hpp"

namespace stratsel {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class CostKind { Quadratic };

// Diagonal quadratic cost c(v) = v' Diag(g) v. The strong-convexity modulus
// is alpha = 2 * min_j g_j (smallest eigenvalue of the Hessian 2 Diag(g)).
struct CostSpec {
  CostKind kind = CostKind::Quadratic;
  Vec g;

  double alpha() const { return 2.0 * g.minCoeff(); }

  void validate() const {
    if (g.size() == 0) throw InvalidInputError("cost: empty weight vector");
    if ((g.array() <= 0.0).any())
      throw InvalidInputError("cost: weights must be strictly positive");
  }
};

// Axis-aligned covariate box X.
struct CovariateBox {
  Vec lo;
  Vec hi;

  static CovariateBox centered(Eigen::Index d, double half_width = 100.0) {
    CovariateBox b;
    b.lo = Vec::Constant(d, -half_width);
    b.hi = Vec::Constant(d, half_width);
    return b;
  }

  void validate() const {
    if (lo.size() != hi.size())
      throw InvalidInputError("box: lo/hi dimension mismatch");
    if ((lo.array() >= hi.array()).any())
      throw InvalidInputError("box: lo must be strictly below hi");
  }

  bool contains(const Vec& x, double margin = 1e-9) const {
    return (x.array() >= lo.array() + margin).all() &&
           (x.array() <= hi.array() - margin).all();
  }
};

// One agent profile: raw covariates, modification cost, potential outcomes.
struct AgentType {
  Vec z;
  CostSpec cost;
  double y0 = 0.0;
  double y1 = 0.0;

  double delta() const { return y1 - y0; }

  void validate(const CovariateBox& box) const {
    cost.validate();
    if (z.size() != cost.g.size())
      throw InvalidInputError("agent: covariate/cost dimension mismatch");
    if (z.size() != box.lo.size())
      throw InvalidInputError("agent: covariate/box dimension mismatch");
    if (!box.contains(z, 0.0))
      throw InvalidInputError("agent: raw covariates outside the covariate box");
  }
};

// Isotropic Gaussian reporting noise, epsilon ~ N(0, sigma^2 I).
struct NoiseModel {
  double sigma = 1.0;

  void validate() const {
    if (!(sigma > 0.0)) throw InvalidInputError("noise: sigma must be positive");
  }
};

// Linear threshold rule: unit-norm selection criterion plus current threshold.
struct Policy {
  Vec beta;
  double threshold = 0.0;

  void validate() const {
    if (beta.size() == 0) throw InvalidInputError("policy: empty beta");
    if (std::abs(beta.norm() - 1.0) > 1e-12)
      throw InvalidInputError("policy: beta must have unit Euclidean norm");
  }
};

}  // namespace stratsel
