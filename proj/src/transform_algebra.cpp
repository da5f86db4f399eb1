#include "cskin/transform_algebra.hpp"

#include <string>

namespace cskin {

Affine34 blend_to_transform(std::span<const double> c, std::span<const Params6> theta_j) {
  if (c.size() != theta_j.size()) {
    throw Error(ErrorKind::LengthMismatch, "blendweight vector has " + std::to_string(c.size()) +
                                               " entries, expected " + std::to_string(theta_j.size()));
  }
  Params6 blended;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k] == 0.0) continue;
    for (std::size_t d = 0; d < kParamsPerBlock; ++d) blended[d] += c[k] * theta_j[k][d];
  }
  return identity_plus_hat(blended);
}

}  // namespace cskin
