#include "ltcar/tire.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ltcar::tire {

namespace {

double magic_formula(double slip, double d, double c, double b, double e) {
  const double bs = b * slip;
  return d * std::sin(c * std::atan(bs - e * (bs - std::atan(bs))));
}

void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string("non-finite ") + name);
  }
}

}  // namespace

void TireParams::validate() const {
  if (!(d_x > 0 && d_y > 0 && c_x > 0 && c_y > 0 && b_x > 0 && b_y > 0)) {
    throw std::invalid_argument(
        "tire shape coefficients d, c, b must be positive");
  }
  if (!(r_bx1 >= 0 && r_bx2 >= 0 && r_by1 >= 0 && r_by2 >= 0)) {
    throw std::invalid_argument("tire loss coefficients must be non-negative");
  }
}

double pure_longitudinal(double kappa, const TireParams& p) {
  require_finite(kappa, "longitudinal slip");
  return magic_formula(kappa, p.d_x, p.c_x, p.b_x, p.e_x);
}

double pure_lateral(double beta, const TireParams& p) {
  require_finite(beta, "sideslip");
  return magic_formula(beta, p.d_y, p.c_y, p.b_y, p.e_y);
}

double longitudinal_loss(double kappa, double beta, const TireParams& p) {
  const double shape = p.r_bx1 / (1.0 + p.r_bx2 * p.r_bx2 * kappa * kappa);
  return std::cos(p.c_xb * std::atan(beta * shape));
}

double lateral_loss(double kappa, double beta, const TireParams& p) {
  const double shape = p.r_by1 / (1.0 + p.r_by2 * p.r_by2 * beta * beta);
  return std::cos(p.c_yk * std::atan(kappa * shape));
}

FrictionPair combined(const SlipState& slip, const TireParams& p) {
  require_finite(slip.kappa, "longitudinal slip");
  require_finite(slip.beta, "sideslip");
  if (!(slip.kappa > -1.0)) {
    throw std::invalid_argument("longitudinal slip must exceed -1");
  }
  return {pure_longitudinal(slip.kappa, p) *
              longitudinal_loss(slip.kappa, slip.beta, p),
          pure_lateral(slip.beta, p) * lateral_loss(slip.kappa, slip.beta, p)};
}

FrictionPair steered_frame(const FrictionPair& pair, double delta) {
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  return {pair.mu_x * c - pair.mu_y * s, pair.mu_x * s + pair.mu_y * c};
}

double linear_lateral(double beta, double stiffness) {
  return stiffness * beta;
}

TireModel tire_model_from_string(std::string_view name) {
  if (name == "pacejka") return TireModel::kPacejka;
  if (name == "linear") return TireModel::kLinear;
  throw std::invalid_argument("unknown tire model '" + std::string(name) +
                              "' (expected pacejka or linear)");
}

std::string_view to_string(TireModel model) {
  return model == TireModel::kPacejka ? "pacejka" : "linear";
}

FrictionPair evaluate(const SlipState& slip, const AxleTire& tire,
                      TireModel model) {
  if (model == TireModel::kPacejka) return combined(slip, tire.params);
  require_finite(slip.kappa, "longitudinal slip");
  require_finite(slip.beta, "sideslip");
  return {tire.linear_longitudinal_stiffness * slip.kappa,
          linear_lateral(slip.beta, tire.linear_lateral_stiffness)};
}

}  // namespace ltcar::tire
