#pragma once

#include <cmath>
#include <numbers>

#include "trusthresh/errors.hpp"

namespace trusthresh {

// Heaviside step with a strict inequality: a score exactly at the threshold
// classifies as 0.
inline int hsf(double z) { return z > 0.0 ? 1 : 0; }

inline void check_width(double w) {
  if (!(w > 0.0 && w < 1.0)) throw WidthOutOfRange(w);
}

// Truncated-sine smooth approximation of the step. Flat at 0 below -w,
// flat at 1 above +w, half-sine ramp in between; continuous at the junctions.
inline double smoothed_hsf(double z, double w) {
  check_width(w);
  if (z < -w) return 0.0;
  if (z > w) return 1.0;
  return 0.5 * std::sin(std::numbers::pi * z / (2.0 * w)) + 0.5;
}

struct SurrogateGrads {
  double grad_z;
  double grad_w;
};

// Derivatives of smoothed_hsf in z and in w, truncated to zero outside the
// window. |z| == w falls in the truncated branch; cos vanishes there so the
// derivative is continuous.
inline SurrogateGrads surrogate_grads(double z, double w) {
  check_width(w);
  if (std::abs(z) >= w) return {0.0, 0.0};
  const double c = std::cos(std::numbers::pi * z / (2.0 * w));
  const double grad_z = std::numbers::pi / (4.0 * w) * c;
  const double grad_w = -std::numbers::pi * z / (4.0 * w * w) * c;
  return {grad_z, grad_w};
}

struct SurrogateEval {
  double z;
  double w;
  int hard;
  double grad_z;
  double grad_w;
};

inline SurrogateEval evaluate_surrogate(double z, double w) {
  const auto g = surrogate_grads(z, w);
  return {z, w, hsf(z), g.grad_z, g.grad_w};
}

// Numerically stable logistic; never over/underflows to 0 or 1 harmfully
// for finite input magnitudes below ~700.
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logistic_derivative(double x) {
  const double s = logistic(x);
  return s * (1.0 - s);
}

// Inverse of logistic on (0,1); used to seed width parameters.
inline double logit(double p) {
  return std::log(p / (1.0 - p));
}

}  // namespace trusthresh
