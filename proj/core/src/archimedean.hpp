#pragma once

#include "vcmm/bicop.hpp"

namespace vcmm::detail {

// Unrotated Archimedean copulas (Clayton, Gumbel, Frank, Joe, BB1, BB6, BB8)
// evaluated through their generators in log space.
struct ArchimedeanSpec {
  CopulaFamily family;
  double theta;
  double delta = 1.0;
};

double archimedean_log_pdf(const ArchimedeanSpec& spec, double u, double v);
double archimedean_cdf(const ArchimedeanSpec& spec, double u, double v);
/// dC/dv.
double archimedean_h2(const ArchimedeanSpec& spec, double u, double v);
double archimedean_tau(const ArchimedeanSpec& spec);

}  // namespace vcmm::detail
