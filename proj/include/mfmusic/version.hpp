#ifndef MFMUSIC_VERSION_HPP
#define MFMUSIC_VERSION_HPP

namespace mfmusic {

inline constexpr const char* version_string = "0.1.0";

} // namespace mfmusic

#endif
