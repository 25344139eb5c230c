#ifndef SHADOWPROBE_PROPERTY_H_
#define SHADOWPROBE_PROPERTY_H_

#include <string>

namespace shadowprobe {

// Whether a training set preserved the hidden property.
enum class Property { kP, kNotP };

inline constexpr const char* kLabelP = "P";
inline constexpr const char* kLabelNotP = "NotP";

inline const char* ToString(Property p) {
  return p == Property::kP ? kLabelP : kLabelNotP;
}
// Throws ContractError for anything but "P" / "NotP".
Property PropertyFromString(const std::string& s);

struct PropertyLabel {
  Property value = Property::kNotP;
  std::string description;
};

}  // namespace shadowprobe

#endif  // SHADOWPROBE_PROPERTY_H_
