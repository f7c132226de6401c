#ifndef RHOSPHERE_VERSION_HPP
#define RHOSPHERE_VERSION_HPP

namespace rhosphere {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rhosphere

#endif  // RHOSPHERE_VERSION_HPP
