#include "ltcar/params.hpp"

#include <stdexcept>

namespace ltcar {

namespace {

void require_known(std::string_view name) {
  if (name != "sports" && name != "adams") {
    throw std::invalid_argument("unknown parameter set '" + std::string(name) +
                                "' (expected sports or adams)");
  }
}

// Combined-slip loss coefficients shared by every built-in tire.
tire::TireParams with_common_losses(tire::TireParams p) {
  p.c_xb = 1.1231;
  p.r_bx1 = 13.476;
  p.r_bx2 = 11.354;
  p.c_yk = 1.0533;
  p.r_by1 = 7.7856;
  p.r_by2 = 8.1697;
  return p;
}

}  // namespace

VehicleParams vehicle_preset(std::string_view name) {
  require_known(name);
  if (name == "sports") {
    return {.m = 1480.0,
            .a = 1.421,
            .b = 1.029,
            .h = 0.42,
            .I_zz = 1950.0,
            .I_xz = -50.0,
            .I_yy = 1730.0,
            .g = 9.81};
  }
  return {.m = 1528.68,
          .a = 1.48,
          .b = 1.08,
          .h = 0.43,
          .I_zz = 6022.36,
          .I_xz = -1.91,
          .I_yy = 6129.12,
          .g = 9.81};
}

tire::TireParams rear_tire_preset(std::string_view name) {
  require_known(name);
  tire::TireParams p{};
  if (name == "sports") {
    p.d_x = 1.688, p.c_x = 1.65, p.b_x = 8.22, p.e_x = -10.0;
    p.d_y = 1.688, p.c_y = 1.79, p.b_y = 8.822, p.e_y = -2.02;
  } else {
    p.d_x = 1.48, p.c_x = 1.37, p.b_x = 18.22, p.e_x = -0.46;
    p.d_y = 1.22, p.c_y = 1.25, p.b_y = 17.8, p.e_y = 0.02;
  }
  return with_common_losses(p);
}

tire::TireParams front_tire_preset(std::string_view name) {
  tire::TireParams p = rear_tire_preset(name);
  if (name == "sports") {
    p.b_y = 12.848;
    p.e_y = -1.206;
  }
  return p;
}

CarModel car_preset(std::string_view name, tire::TireModel model) {
  CarModel car;
  car.vehicle = vehicle_preset(name);
  car.tires.rear = tire::AxleTire::from_params(rear_tire_preset(name));
  car.tires.front = tire::AxleTire::from_params(front_tire_preset(name));
  car.tires.model = model;
  return car;
}

std::vector<std::string> preset_names() { return {"sports", "adams"}; }

}  // namespace ltcar
