#pragma once

#include <cstdint>
#include <vector>

#include "mdcn/image.hpp"

namespace mdcn {

/// Deterministic procedural test image: a sum of random-frequency sinusoids
/// plus a radial blob, squashed into [0, 1]. Channels share geometry but get
/// independent phases, so the content is correlated across RGB the way
/// photographs are.
ImageRGB synth_image(int64_t height, int64_t width, uint64_t seed);

/// `src` resampled at (y + dy, x + dx) with Keys cubic interpolation and
/// clamped borders. Same size as the input; fractional offsets supported.
ImageRGB translate_image(const ImageRGB& src, double dy, double dx);

/// Length-`frames` sequence of sub-pixel translated views of one synthetic
/// scene. Frame t is shifted by ((t - frames/2) * dy, (t - frames/2) * dx)
/// pixels, sampled from a padded master so borders stay valid.
std::vector<ImageRGB> synth_sequence(int64_t height, int64_t width,
                                     int64_t frames, double dy, double dx,
                                     uint64_t seed);

}  // namespace mdcn
