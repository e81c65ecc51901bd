#pragma once

#include <string_view>

namespace ltcar::tire {

/// Magic-formula coefficients of one tire plus the combined-slip loss
/// coefficients. All values are dimensionless; forces scale with the normal
/// load.
struct TireParams {
  double d_x, c_x, b_x, e_x;
  double d_y, c_y, b_y, e_y;
  double c_xb, r_bx1, r_bx2;
  double c_yk, r_by1, r_by2;

  /// Throws std::invalid_argument when a shape coefficient is non-positive or
  /// a loss coefficient is negative.
  void validate() const;

  /// Slope of the pure-slip curves at zero slip (d*c*b).
  double longitudinal_stiffness() const { return d_x * c_x * b_x; }
  double lateral_stiffness() const { return d_y * c_y * b_y; }
};

struct SlipState {
  double kappa = 0.0;  // longitudinal slip ratio, > -1
  double beta = 0.0;   // sideslip at the contact point [rad]
  double delta = 0.0;  // steer angle [rad], zero for the rear axle
};

struct FrictionPair {
  double mu_x = 0.0;
  double mu_y = 0.0;
};

/// Pure longitudinal magic formula f_x0(kappa).
double pure_longitudinal(double kappa, const TireParams& p);

/// Pure lateral magic formula f_y0(beta).
double pure_lateral(double beta, const TireParams& p);

/// Combined-slip loss factors; both lie in (0, 1].
double longitudinal_loss(double kappa, double beta, const TireParams& p);
double lateral_loss(double kappa, double beta, const TireParams& p);

/// mu_x = f_x0(kappa) g_xb(kappa, beta), mu_y = f_y0(beta) g_yk(kappa, beta).
FrictionPair combined(const SlipState& slip, const TireParams& p);

/// Rotates tire-frame coefficients into the body frame by the steer angle.
FrictionPair steered_frame(const FrictionPair& pair, double delta);

/// Linear tire: lateral coefficient proportional to sideslip, unsaturated.
double linear_lateral(double beta, double stiffness);

enum class TireModel { kPacejka, kLinear };

TireModel tire_model_from_string(std::string_view name);
std::string_view to_string(TireModel model);

/// One axle's tire: the magic-formula parameters and the linear-model
/// stiffnesses, which default to the magic-formula slopes at the origin.
struct AxleTire {
  TireParams params;
  double linear_longitudinal_stiffness;
  double linear_lateral_stiffness;

  static AxleTire from_params(const TireParams& p) {
    return {p, p.longitudinal_stiffness(), p.lateral_stiffness()};
  }
};

/// Tire-frame friction coefficients for the selected model. Under the linear
/// model the longitudinal coefficient is the commanded slip times the
/// longitudinal stiffness and the two directions are decoupled.
FrictionPair evaluate(const SlipState& slip, const AxleTire& tire,
                      TireModel model);

struct TirePair {
  AxleTire rear;
  AxleTire front;
  TireModel model = TireModel::kPacejka;
};

}  // namespace ltcar::tire
