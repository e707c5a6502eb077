#include "scpw/types.hpp"

#include <cmath>

#include "scpw/errors.hpp"

namespace scpw {

double CpwGeometry::complementary_modulus() const {
  const double k = modulus();
  return std::sqrt((1.0 - k) * (1.0 + k));
}

void CpwGeometry::validate(bool require_length) const {
  if (!(width > 0.0)) throw DomainError("CpwGeometry: width must be > 0");
  if (!(gap > 0.0)) throw DomainError("CpwGeometry: gap must be > 0");
  if (!(thickness > 0.0)) throw DomainError("CpwGeometry: thickness must be > 0");
  if (require_length && !(length > 0.0)) {
    throw DomainError("CpwGeometry: length must be > 0");
  }
}

void Material::validate() const {
  if (!(lambda0 > 0.0)) throw DomainError("Material: lambda0 must be > 0");
  if (!(eps_r >= 1.0)) throw DomainError("Material: eps_r must be >= 1");
  if (!(temperature > 0.0)) throw DomainError("Material: temperature must be > 0");
}

double TransmissionLine::phase_velocity() const {
  return 1.0 / std::sqrt(c_per_len * total_inductance());
}

}  // namespace scpw
