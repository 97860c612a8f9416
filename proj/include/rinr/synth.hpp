#pragma once

// Deterministic synthetic test sequences: moving rectangles, bouncing
// textured balls, drifting sinusoid gratings. Same (kind, dims, seed) gives
// bit-identical frames on every platform.

#include <cstdint>
#include <string>

#include "rinr/image_io.hpp"

namespace rinr {

enum class SynthKind { rects, balls, gratings };

SynthKind synth_kind_from_string(const std::string& s);
const char* synth_kind_name(SynthKind k);

FrameSequence make_sequence(SynthKind kind, int frame_count, int height,
                            int width, std::uint32_t seed);

}  // namespace rinr
