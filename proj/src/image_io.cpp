#include "provisim/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace provisim {
namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kUnreadable, "cannot open " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorCode::kUnreadable, "read failed for " + path.string());
  }
  if (bytes.empty()) {
    throw Error(ErrorCode::kUnreadable, path.string() + " is empty");
  }
  return bytes;
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kUnwritable, "cannot open " + path.string() + " for writing");
  }
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) {
    throw Error(ErrorCode::kUnwritable, "write failed for " + path.string());
  }
}

void check_dimensions(std::uint64_t width, std::uint64_t height, const std::filesystem::path& path) {
  if (width == 0 || height == 0 || width * height > kMaxSamples) {
    throw Error(ErrorCode::kDimensionOverflow, path.string() + ": unsupported dimensions " +
                                                   std::to_string(width) + "x" +
                                                   std::to_string(height));
  }
}

ColorImage decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::kCorruptData, path.string() + ": " + image.message);
  }
  check_dimensions(image.width, image.height, path);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kCorruptData, path.string() + ": " + message);
  }

  const Index w = image.width;
  const Index h = image.height;
  Plane<double> r(h, w), g(h, w), b(h, w);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      const png_byte* px = &buffer[static_cast<std::size_t>((y * w + x) * 3)];
      r(y, x) = px[0] / 255.0;
      g(y, x) = px[1] / 255.0;
      b(y, x) = px[2] / 255.0;
    }
  }
  return ColorImage(r, g, b);
}

// Binary PGM: "P5" <ws> width <ws> height <ws> maxval <single ws> raster.
// '#' comments may appear between header tokens.
ColorImage decode_pgm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  std::size_t pos = 2;
  auto next_token = [&]() -> std::uint64_t {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw Error(ErrorCode::kCorruptData, path.string() + ": malformed PGM header");
    }
    std::uint64_t value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (std::uint64_t{1} << 40)) {
        throw Error(ErrorCode::kDimensionOverflow, path.string() + ": header value too large");
      }
      ++pos;
    }
    return value;
  };
  const std::uint64_t width = next_token();
  const std::uint64_t height = next_token();
  const std::uint64_t maxval = next_token();
  check_dimensions(width, height, path);
  if (maxval == 0 || maxval > 255) {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + ": only 8-bit PGM is supported (maxval " + std::to_string(maxval) + ")");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::kCorruptData, path.string() + ": malformed PGM header");
  }
  ++pos;
  const std::uint64_t count = width * height;
  if (bytes.size() - pos < count) {
    throw Error(ErrorCode::kCorruptData, path.string() + ": truncated PGM raster");
  }
  const Index w = static_cast<Index>(width);
  const Index h = static_cast<Index>(height);
  Plane<double> v(h, w);
  for (Index i = 0; i < w * h; ++i) {
    v.data()[i] = static_cast<double>(bytes[pos + static_cast<std::size_t>(i)]) / static_cast<double>(maxval);
  }
  return ColorImage(v, v, v);
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

void write_png(const std::filesystem::path& path, const std::vector<png_byte>& pixels, Index width,
               Index height, png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::kUnwritable, path.string() + ": " + image.message);
  }
  std::vector<png_byte> encoded(size);
  if (!png_image_write_to_memory(&image, encoded.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::kUnwritable, path.string() + ": " + image.message);
  }
  write_bytes(path, encoded.data(), size);
}

}  // namespace

ColorImage load_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_bytes(path);
  static constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    return decode_pgm(bytes, path);
  }
  throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": not a PNG or binary PGM file");
}

void save_image(const Image& img, const std::filesystem::path& path) {
  std::vector<png_byte> pixels(static_cast<std::size_t>(img.size()));
  std::transform(img.data().begin(), img.data().end(), pixels.begin(), to_byte);

  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, pixels, img.width(), img.height(), PNG_FORMAT_GRAY);
  } else if (ext == ".pgm") {
    std::string header = "P5\n" + std::to_string(img.width()) + " " +
                         std::to_string(img.height()) + "\n255\n";
    std::vector<png_byte> out(header.begin(), header.end());
    out.insert(out.end(), pixels.begin(), pixels.end());
    write_bytes(path, out.data(), out.size());
  } else {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + ": output extension must be .png or .pgm");
  }
}

void save_color_png(const ColorImage& img, const std::filesystem::path& path) {
  if (lower_extension(path) != ".png") {
    throw Error(ErrorCode::kUnsupportedFormat, path.string() + ": colour output must be .png");
  }
  const Index w = img.width();
  const Index h = img.height();
  std::vector<png_byte> pixels(static_cast<std::size_t>(w * h * 3));
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      png_byte* px = &pixels[static_cast<std::size_t>((y * w + x) * 3)];
      px[0] = to_byte(img.red()(y, x));
      px[1] = to_byte(img.green()(y, x));
      px[2] = to_byte(img.blue()(y, x));
    }
  }
  write_png(path, pixels, w, h, PNG_FORMAT_RGB);
}

}  // namespace provisim
