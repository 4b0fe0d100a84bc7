#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "chfb/image.hpp"

namespace chfb {

/// Reads 8-bit PNG (any colour type) or binary/ASCII PGM. Colour inputs are
/// reduced with the Rec. 601 luma weights.
GrayImage read_image(const std::filesystem::path& path);
GrayImage decode_png(const std::vector<std::uint8_t>& bytes);
GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_png(const GrayImage& image);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Edge maps as PGM use 0 for background and 255 for edge pixels.
GrayImage edge_map_to_image(const EdgeMap& edges);
void write_edge_pgm(const std::filesystem::path& path, const EdgeMap& edges);

/// {"width", "height", "runs": [[y, x_start, length], ...]} with runs in
/// raster order.
nlohmann::json edge_map_to_rle(const EdgeMap& edges);
EdgeMap edge_map_from_rle(const nlohmann::json& doc);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace chfb
