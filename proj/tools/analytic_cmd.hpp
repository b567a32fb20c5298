#pragma once

#include <string>
#include <vector>

// Evaluates one analytic formula from key=value parameters and returns the printed result.
std::string run_analytic(const std::string& formula, const std::vector<std::string>& params);
std::vector<std::string> analytic_formulas();
