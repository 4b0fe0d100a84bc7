#include "chfb/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "chfb/error.hpp"

namespace chfb {

namespace {

struct PngReadState {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (state->offset + length > state->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, state->bytes->data() + state->offset, length);
  state->offset += length;
}

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_callback(png_structp) {}

[[noreturn]] void png_error_callback(png_structp, png_const_charp message) {
  throw Error(ErrorCode::Parse, std::string("PNG: ") + message);
}

void png_warning_callback(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

GrayImage decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::Parse, "not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_callback,
                                           png_warning_callback);
  png_infop info = png_create_info_struct(png);
  PngReadState state{&bytes, 0};
  try {
    png_set_read_fn(png, &state, png_read_callback);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_packing(png);
    png_set_expand(png);  // palette -> RGB, low-bit grey -> 8 bit, tRNS -> alpha
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const auto width = static_cast<int>(png_get_image_width(png, info));
    const auto height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    std::vector<std::uint8_t> raw(stride * static_cast<std::size_t>(height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = raw.data() + stride * static_cast<std::size_t>(y);
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    std::vector<std::uint8_t> gray(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      const std::uint8_t* row = rows[static_cast<std::size_t>(y)];
      for (int x = 0; x < width; ++x) {
        const std::uint8_t* p = row + static_cast<std::ptrdiff_t>(x * channels);
        const auto i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
        gray[i] = channels >= 3 ? round_clamp(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) : p[0];
      }
    }
    return GrayImage(width, height, std::move(gray));
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw Error(ErrorCode::Parse, "malformed PGM header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw Error(ErrorCode::Parse, "not a PGM stream");
  }
  const bool binary = bytes[1] == '5';
  pos = 2;
  const long width = read_int();
  const long height = read_int();
  const long maxval = read_int();
  if (width < 1 || height < 1 || maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::Parse, "unsupported PGM geometry or depth");
  }
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width * height));
  if (binary) {
    ++pos;  // single whitespace after maxval
    if (bytes.size() < pos + pixels.size()) throw Error(ErrorCode::Parse, "truncated PGM raster");
    std::memcpy(pixels.data(), bytes.data() + pos, pixels.size());
  } else {
    for (auto& p : pixels) p = static_cast<std::uint8_t>(read_int());
  }
  if (maxval != 255) {
    for (auto& p : pixels) p = round_clamp(p * 255.0 / static_cast<double>(maxval));
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

GrayImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(bytes);
  throw Error(ErrorCode::Parse, "unrecognised image format: " + path.string());
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  if (image.empty()) throw Error(ErrorCode::InvalidInput, "empty image");
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_callback,
                                            png_warning_callback);
  png_infop info = png_create_info_struct(png);
  try {
    png_set_write_fn(png, &out, png_write_callback, png_flush_callback);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    auto pixels = image.pixels();
    for (int y = 0; y < image.height(); ++y) {
      auto* row = const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width()));
      png_write_row(png, row);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  return out;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  if (image.empty()) throw Error(ErrorCode::InvalidInput, "empty image");
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels().begin(), image.pixels().end());
  return out;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  write_file_bytes(path, encode_png(image));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_file_bytes(path, encode_pgm(image));
}

GrayImage edge_map_to_image(const EdgeMap& edges) {
  GrayImage out(edges.width(), edges.height());
  for (int y = 0; y < edges.height(); ++y) {
    for (int x = 0; x < edges.width(); ++x) out.at(x, y) = edges.at(x, y) ? 255 : 0;
  }
  return out;
}

void write_edge_pgm(const std::filesystem::path& path, const EdgeMap& edges) {
  write_pgm(path, edge_map_to_image(edges));
}

nlohmann::json edge_map_to_rle(const EdgeMap& edges) {
  nlohmann::json runs = nlohmann::json::array();
  for (int y = 0; y < edges.height(); ++y) {
    int x = 0;
    while (x < edges.width()) {
      if (!edges.at(x, y)) {
        ++x;
        continue;
      }
      const int start = x;
      while (x < edges.width() && edges.at(x, y)) ++x;
      runs.push_back({y, start, x - start});
    }
  }
  return {{"width", edges.width()}, {"height", edges.height()}, {"runs", std::move(runs)}};
}

EdgeMap edge_map_from_rle(const nlohmann::json& doc) {
  try {
    EdgeMap edges(doc.at("width").get<int>(), doc.at("height").get<int>());
    for (const auto& run : doc.at("runs")) {
      const int y = run.at(0).get<int>();
      const int x0 = run.at(1).get<int>();
      const int len = run.at(2).get<int>();
      for (int x = x0; x < x0 + len; ++x) {
        if (!edges.in_bounds(x, y)) throw Error(ErrorCode::Parse, "edge run outside the map");
        edges.set(x, y, true);
      }
    }
    return edges;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("edge map JSON: ") + e.what());
  }
}

}  // namespace chfb
