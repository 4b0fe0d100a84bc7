#include "chfb/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "chfb/error.hpp"

namespace chfb {

namespace {

using Plane = std::vector<double>;

int clamp_index(int v, int n) { return std::clamp(v, 0, n - 1); }

std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable convolution with replicated borders.
Plane convolve_separable(const Plane& src, int w, int h, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp(src.size()), out(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] * src[static_cast<std::size_t>(y * w + clamp_index(x + i, w))];
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(clamp_index(y + i, h) * w + x)];
      }
      out[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  return out;
}

Plane to_plane(const GrayImage& image) {
  Plane p(image.pixels().size());
  std::transform(image.pixels().begin(), image.pixels().end(), p.begin(),
                 [](std::uint8_t v) { return static_cast<double>(v); });
  return p;
}

void require_non_empty(const GrayImage& image) {
  if (image.empty()) throw Error(ErrorCode::InvalidInput, "empty image");
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidInput, "image dimensions must be positive");
  }
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidInput, "image dimensions must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::InvalidInput, "pixel buffer does not match width x height");
  }
}

EdgeMap::EdgeMap(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidInput, "edge map dimensions must be positive");
  }
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::size_t EdgeMap::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void validate(const EnhancementConfig& cfg) {
  if (!(cfg.gamma > 0.0)) throw Error(ErrorCode::Config, "gamma must be positive");
  if (cfg.denoise_window < 1 || cfg.denoise_window % 2 == 0) {
    throw Error(ErrorCode::Config, "denoise_window must be odd and >= 1");
  }
  if (cfg.unsharp_amount < 0.0) throw Error(ErrorCode::Config, "unsharp_amount must be >= 0");
  if (cfg.unsharp_radius < 0) throw Error(ErrorCode::Config, "unsharp_radius must be >= 0");
  if (cfg.crop_threshold < 0 || cfg.crop_threshold > 256) {
    throw Error(ErrorCode::Config, "crop_threshold must be an intensity (256 disables cropping)");
  }
  if (!(cfg.canny_low < cfg.canny_high)) {
    throw Error(ErrorCode::Config, "canny_low must be below canny_high");
  }
  if (cfg.canny_sigma < 0.0) throw Error(ErrorCode::Config, "canny_sigma must be >= 0");
}

std::uint8_t round_clamp(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

CropBox white_border_crop(const GrayImage& image, int threshold) {
  require_non_empty(image);
  const int w = image.width();
  const int h = image.height();
  auto row_white = [&](int y) {
    long sum = 0;
    for (int x = 0; x < w; ++x) sum += image.at(x, y);
    return static_cast<double>(sum) / w >= threshold;
  };
  int top = 0;
  while (top < h && row_white(top)) ++top;
  if (top == h) throw Error(ErrorCode::DegenerateImage, "white-border crop removed every row");
  int bottom = h - 1;
  while (bottom > top && row_white(bottom)) --bottom;

  const int rows = bottom - top + 1;
  auto col_white = [&](int x) {
    long sum = 0;
    for (int y = top; y <= bottom; ++y) sum += image.at(x, y);
    return static_cast<double>(sum) / rows >= threshold;
  };
  int left = 0;
  while (left < w && col_white(left)) ++left;
  if (left == w) throw Error(ErrorCode::DegenerateImage, "white-border crop removed every column");
  int right = w - 1;
  while (right > left && col_white(right)) --right;
  return {left, top, right - left + 1, rows};
}

GrayImage crop(const GrayImage& image, const CropBox& box) {
  GrayImage out(box.width, box.height);
  for (int y = 0; y < box.height; ++y) {
    for (int x = 0; x < box.width; ++x) out.at(x, y) = image.at(box.x0 + x, box.y0 + y);
  }
  return out;
}

GrayImage equalize_histogram(const GrayImage& image) {
  require_non_empty(image);
  std::array<std::size_t, 256> hist{};
  for (auto v : image.pixels()) ++hist[v];
  std::array<std::size_t, 256> cdf{};
  std::size_t running = 0;
  for (std::size_t i = 0; i < 256; ++i) cdf[i] = running += hist[i];
  const std::size_t total = image.pixels().size();
  std::size_t cdf_min = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    if (hist[i] != 0) {
      cdf_min = cdf[i];
      break;
    }
  }
  // A single-valued image has no spread to redistribute.
  if (total == cdf_min) return image;
  std::array<std::uint8_t, 256> lut{};
  for (std::size_t i = 0; i < 256; ++i) {
    const double num = static_cast<double>(cdf[i] >= cdf_min ? cdf[i] - cdf_min : 0);
    lut[i] = round_clamp(num * 255.0 / static_cast<double>(total - cdf_min));
  }
  GrayImage out = image;
  for (auto& v : out.pixels()) v = lut[v];
  return out;
}

GrayImage gamma_correct(const GrayImage& image, double gamma) {
  require_non_empty(image);
  std::array<std::uint8_t, 256> lut{};
  for (int i = 0; i < 256; ++i) lut[static_cast<std::size_t>(i)] = round_clamp(255.0 * std::pow(i / 255.0, gamma));
  GrayImage out = image;
  for (auto& v : out.pixels()) v = lut[v];
  return out;
}

GrayImage median_filter(const GrayImage& image, int window) {
  require_non_empty(image);
  if (window <= 1) return image;
  const int r = window / 2;
  const int w = image.width();
  const int h = image.height();
  GrayImage out(w, h);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(window * window));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          buf[n++] = image.at(clamp_index(x + dx, w), clamp_index(y + dy, h));
        }
      }
      auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(buf.begin(), mid, buf.begin() + static_cast<std::ptrdiff_t>(n));
      out.at(x, y) = *mid;
    }
  }
  return out;
}

GrayImage unsharp_mask(const GrayImage& image, double amount, int radius) {
  require_non_empty(image);
  if (amount == 0.0 || radius == 0) return image;
  const double sigma = std::max(0.5, radius / 2.0);
  const Plane src = to_plane(image);
  const Plane blurred = convolve_separable(src, image.width(), image.height(), gaussian_kernel(sigma, radius));
  GrayImage out(image.width(), image.height());
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = round_clamp(src[i] + amount * (src[i] - blurred[i]));
  return out;
}

EnhancedImage enhance_with_crop(const GrayImage& image, const EnhancementConfig& cfg) {
  require_non_empty(image);
  validate(cfg);
  const CropBox box = white_border_crop(image, cfg.crop_threshold);
  GrayImage out = crop(image, box);
  if (cfg.equalize) out = equalize_histogram(out);
  if (cfg.gamma != 1.0) out = gamma_correct(out, cfg.gamma);
  out = median_filter(out, cfg.denoise_window);
  out = unsharp_mask(out, cfg.unsharp_amount, cfg.unsharp_radius);
  return {std::move(out), box};
}

GrayImage enhance(const GrayImage& image, const EnhancementConfig& cfg) {
  return enhance_with_crop(image, cfg).image;
}

int quantize_gradient_direction(double gx, double gy) {
  double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
  if (angle < 0.0) angle += 180.0;
  if (angle >= 180.0) angle -= 180.0;
  if (angle < 22.5 || angle >= 157.5) return 0;
  if (angle < 67.5) return 45;
  if (angle < 112.5) return 90;
  return 135;
}

EdgeMap detect_edges(const GrayImage& image, const EnhancementConfig& cfg) {
  require_non_empty(image);
  if (!(cfg.canny_low < cfg.canny_high)) {
    throw Error(ErrorCode::Config, "canny_low must be below canny_high");
  }
  const int w = image.width();
  const int h = image.height();
  Plane smooth = to_plane(image);
  if (cfg.canny_sigma > 0.0) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * cfg.canny_sigma)));
    smooth = convolve_separable(smooth, w, h, gaussian_kernel(cfg.canny_sigma, radius));
  }
  auto px = [&](int x, int y) {
    return smooth[static_cast<std::size_t>(clamp_index(y, h) * w + clamp_index(x, w))];
  };

  Plane mag(smooth.size());
  std::vector<std::uint8_t> dir(smooth.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      const auto i = static_cast<std::size_t>(y * w + x);
      mag[i] = std::hypot(gx, gy);
      dir[i] = static_cast<std::uint8_t>(quantize_gradient_direction(gx, gy) / 45);
    }
  }

  auto m = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y * w + x)];
  };
  // Neighbour offsets along the gradient for 0, 45, 90, 135 degrees (y down).
  constexpr std::array<std::array<int, 2>, 4> kStep{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

  std::vector<std::uint8_t> candidate(smooth.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y * w + x);
      const double v = mag[i];
      if (v <= cfg.canny_low) continue;
      const auto& s = kStep[dir[i]];
      // Asymmetric comparison keeps exactly one pixel of a flat two-pixel ridge.
      if (v > m(x - s[0], y - s[1]) && v >= m(x + s[0], y + s[1])) candidate[i] = 1;
    }
  }

  EdgeMap edges(w, h);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::size_t>(y * w + x);
      if (!candidate[i] || edges.at(x, y) || mag[i] <= cfg.canny_high) continue;
      edges.set(x, y, true);
      stack.push_back(static_cast<int>(i));
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cx = cur % w;
        const int cy = cur / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!edges.in_bounds(nx, ny) || edges.at(nx, ny)) continue;
            if (!candidate[static_cast<std::size_t>(ny * w + nx)]) continue;
            edges.set(nx, ny, true);
            stack.push_back(ny * w + nx);
          }
        }
      }
    }
  }
  return edges;
}

}  // namespace chfb
