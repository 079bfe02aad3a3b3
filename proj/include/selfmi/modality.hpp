#pragma once

#include <array>
#include <string_view>

namespace selfmi {

// Iteration over modalities always follows this enum order so that runs are
// reproducible regardless of container choice elsewhere.
enum class Modality { text = 0, audio = 1, visual = 2 };

inline constexpr std::array<Modality, 3> kModalities{
    Modality::text, Modality::audio, Modality::visual};

const char* modality_name(Modality m);          // "text" / "audio" / "visual"
char modality_letter(Modality m);               // 't' / 'a' / 'v'
Modality modality_from_name(std::string_view);  // throws ConfigError

}  // namespace selfmi
