#pragma once

// Textual specs used by the CLI: eigenvalue lists, theta grids, and noise
// model descriptions.  Grammar (see README):
//   noise  := part ('+' part)*
//   part   := 'zero'
//           | 'gaussian:sigma2=<v>'
//           | 'biased:sigma2=<v>,M=<v>'        (constant bias M e_1)
//           | 'adversarial:delta=<v>,n=<count>'
//           | 'minibatch:b=<count>'
//   grid   := '<v>(,<v>)*' | 'lin:<lo>:<hi>:<n>' | 'log:<lo>:<hi>:<n>'

#include <string>
#include <vector>

#include "rsopt/noise.hpp"
#include "rsopt/types.hpp"

namespace rsopt {

// "1,3,10" -> vector; entries must be positive and non-decreasing order is
// not required (the quadratic constructor sorts).
Vector<double> parse_eigenvalue_list(const std::string& text);

NoiseModel parse_noise_spec(const std::string& text, Eigen::Index dim);

std::vector<double> parse_theta_grid(const std::string& text);

}  // namespace rsopt
