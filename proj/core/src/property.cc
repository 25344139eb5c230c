#include "shadowprobe/property.h"

#include "shadowprobe/error.h"

namespace shadowprobe {

Property PropertyFromString(const std::string& s) {
  if (s == kLabelP) return Property::kP;
  if (s == kLabelNotP) return Property::kNotP;
  throw ContractError("unknown property label '" + s + "'");
}

}  // namespace shadowprobe
