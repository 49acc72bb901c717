#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace nmpg {

/// decay, subchain, potentials, gradients, regret-sandwich, critic-fixed-point, chain-example.
const std::vector<std::string>& check_suites();

/// Runs one suite on fixed fixtures and seeds. The report always carries "suite",
/// "passed" and "max_violation"; unknown names throw std::invalid_argument.
nlohmann::json run_check(const std::string& suite);

}  // namespace nmpg
