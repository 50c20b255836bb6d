#pragma once

#include <iosfwd>
#include <string>

#include "isoprnu/sensor_sim.hpp"

namespace isoprnu {

/// Batch front end. Returns 0 on success, 2 on argument errors, 1 on runtime errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Sensor profile as "key=value" lines; unknown keys are rejected, missing keys keep defaults.
SensorProfile parse_profile(const std::string& text);
std::string profile_text(const SensorProfile& profile);

/// ISO label used for simulator output: 100 at gain 1e-5, proportional to gain.
inline double gain_to_iso(double gain) { return gain / 1e-5 * 100.0; }

}  // namespace isoprnu
