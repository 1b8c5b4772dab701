#pragma once

#include <cstdint>

// Sub-stream keys. Each block of each segment draws from its own stream so
// that blocks can be regenerated independently.
namespace lily::datagen::streams {

inline constexpr std::uint64_t kFixedNet = 1;
inline constexpr std::uint64_t kChangingNet = 2;
inline constexpr std::uint64_t kLinearA = 3;
inline constexpr std::uint64_t kMixing = 4;
inline constexpr std::uint64_t kSegmentChange = 5;
inline constexpr std::uint64_t kGainProbe = 6;
inline constexpr std::uint64_t kInitialState = 10;
inline constexpr std::uint64_t kFixedNoise = 11;
inline constexpr std::uint64_t kChangingNoise = 12;
inline constexpr std::uint64_t kObsNoise = 13;
inline constexpr std::uint64_t kLinearNoise = 14;

}  // namespace lily::datagen::streams
