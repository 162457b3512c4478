#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include "mugmatch/image.hpp"

namespace mugmatch {

/* Decodes PNG (via libpng), PNM (P2/P3/P5/P6) and PFM (Pf/PF) from a memory
 * buffer.  Grayscale sources are replicated across the three channels.
 * Throws UnsupportedFormat when no known magic matches and CorruptFile when
 * the container is recognised but damaged or truncated. */
ColorImage decode_image(std::span<const std::uint8_t> bytes);

/* File wrappers around decode_image; missing or unreadable files raise
 * IoError. */
ColorImage load_color(const std::filesystem::path& path);
GrayImage load_gray(const std::filesystem::path& path);

/* Writers.  PNG and PGM quantise to 8 bits; PFM stores the float pixels
 * bit-exactly (little endian, bottom-up rows, scale -1.0).  All throw IoError
 * when the file cannot be written. */
void write_png_gray(const std::filesystem::path& path, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
void write_pfm(const std::filesystem::path& path, const GrayImage& img);

}  // namespace mugmatch
