#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace chfb {

/// 8-bit single-channel raster, row-major. A default-constructed image is
/// empty and is rejected by every pipeline stage.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Binary edge raster with the dimensions of its source image.
class EdgeMap {
 public:
  EdgeMap() = default;
  EdgeMap(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return bits_.empty(); }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool on) { bits_[index(x, y)] = on ? 1 : 0; }
  bool in_bounds(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::size_t count() const;

  bool operator==(const EdgeMap&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct EnhancementConfig {
  double gamma = 1.5;
  int denoise_window = 3;  ///< median window; 1 disables denoising
  double unsharp_amount = 1.0;
  int unsharp_radius = 2;
  int crop_threshold = 245;  ///< border rows/columns at or above this mean are cropped
  bool equalize = true;
  double canny_low = 50.0;
  double canny_high = 150.0;
  double canny_sigma = 1.4;  ///< Gaussian pre-smoothing inside the edge detector
};

/// Throws ErrorCode::Config when the configuration violates its invariants.
void validate(const EnhancementConfig& cfg);

/// Region of the source image kept by the white-border crop.
struct CropBox {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;
};

struct EnhancedImage {
  GrayImage image;
  CropBox crop;
};

/// Rounds half-up and clamps to [0, 255].
std::uint8_t round_clamp(double v);

CropBox white_border_crop(const GrayImage& image, int threshold);
GrayImage crop(const GrayImage& image, const CropBox& box);
GrayImage equalize_histogram(const GrayImage& image);
GrayImage gamma_correct(const GrayImage& image, double gamma);
GrayImage median_filter(const GrayImage& image, int window);
GrayImage unsharp_mask(const GrayImage& image, double amount, int radius);

/// Crop, equalize, gamma, denoise, sharpen, in that order.
EnhancedImage enhance_with_crop(const GrayImage& image, const EnhancementConfig& cfg);
GrayImage enhance(const GrayImage& image, const EnhancementConfig& cfg);

/// Gradient orientation folded to [0, 180) and quantized to 0, 45, 90 or 135.
int quantize_gradient_direction(double gx, double gy);

/// Canny: Gaussian smoothing, Sobel gradients, non-maximum suppression along
/// the quantized gradient direction, then double-threshold hysteresis.
EdgeMap detect_edges(const GrayImage& image, const EnhancementConfig& cfg);

}  // namespace chfb
