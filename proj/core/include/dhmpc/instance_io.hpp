#pragma once

#include <iosfwd>
#include <string>

#include "dhmpc/mpc_model.hpp"

namespace dhmpc {

/// Parses an instance from its JSON form:
///
/// {
///   "dims": {"nx":..,"nu":..,"nw":..,"N":..},
///   "time_invariant": {"A":[..],"B":[..],"E":[..],"F":[..],
///                      "q":[..],"r":[..],
///                      "x_lo":[..],"x_hi":[..],"u_lo":[..],"u_hi":[..]},
///   "series": {"v":[[..],..], "w":[[..],..], "q":[[..],..], "r":[[..],..]}
/// }
///
/// Matrices are flat row-major arrays validated against dims. Entries under
/// "series" override the time-invariant defaults per stage; v and w default
/// to zero when absent.
MpcProblem parse_instance_json(const std::string& text);
MpcProblem load_instance(const std::string& path);

std::string instance_to_json(const MpcProblem& problem);
void save_instance(const MpcProblem& problem, const std::string& path);

}  // namespace dhmpc
