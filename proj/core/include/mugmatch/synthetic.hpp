#pragma once

#include <cstdint>

#include "mugmatch/image.hpp"

namespace mugmatch {

/* Deterministic procedural frontal face on a plain background: head and hair
 * ellipses, eyes with irises, brows, nose, mouth, plus a per identity
 * constellation of small skin blemishes so the texture is distinctive.  The
 * same index always produces the same image. */
GrayImage synthetic_face(int identity_index, int width = 300, int height = 300);

/* Blurred checkerboard with additive seeded noise; dense in corners and
 * gradients at every scale.  Used as a feature rich fixture. */
GrayImage textured_test_image(int width, int height, std::uint64_t seed);

}  // namespace mugmatch
