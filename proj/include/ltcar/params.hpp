#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ltcar/tire.hpp"
#include "ltcar/vehicle.hpp"

namespace ltcar {

/// Built-in parameter sets: "sports" (a rear-driven sports car) and "adams"
/// (the multibody reference vehicle, same tire on both axles).
VehicleParams vehicle_preset(std::string_view name);
tire::TireParams rear_tire_preset(std::string_view name);
tire::TireParams front_tire_preset(std::string_view name);

/// Vehicle and both tires of a named set, Pacejka model by default.
CarModel car_preset(std::string_view name,
                    tire::TireModel model = tire::TireModel::kPacejka);

std::vector<std::string> preset_names();

}  // namespace ltcar
