#include "rop/png_io.hpp"

#include <png.h>

#include <cstring>
#include <string>
#include <vector>

#include "rop/error.hpp"

// Uses libpng's simplified png_image API, which reports errors through the
// control struct instead of longjmp.

namespace rop::png {

namespace {

class Control {
 public:
  Control() {
    std::memset(&image_, 0, sizeof image_);
    image_.version = PNG_IMAGE_VERSION;
  }
  ~Control() { png_image_free(&image_); }
  Control(const Control&) = delete;
  Control& operator=(const Control&) = delete;

  png_image* get() noexcept { return &image_; }
  png_image* operator->() noexcept { return &image_; }

  [[noreturn]] void fail(const std::filesystem::path& path) {
    throw IoError("'" + path.string() + "': " + image_.message);
  }

 private:
  png_image image_;
};

void begin_read(Control& ctl, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("'" + path.string() + "': no such file");
  if (!png_image_begin_read_from_file(ctl.get(), path.c_str())) ctl.fail(path);
}

template <int Channels>
void write_impl(const std::filesystem::path& path, const Raster<Channels>& img) {
  Control ctl;
  ctl->width = static_cast<png_uint_32>(img.width());
  ctl->height = static_cast<png_uint_32>(img.height());
  ctl->format = Channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(ctl.get(), path.c_str(), 0, img.data().data(), 0, nullptr)) {
    ctl.fail(path);
  }
}

}  // namespace

Image read(const std::filesystem::path& path) {
  Control ctl;
  begin_read(ctl, path);
  const bool color = (ctl->format & PNG_FORMAT_FLAG_COLOR) != 0;
  ctl->format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int w = static_cast<int>(ctl->width);
  const int h = static_cast<int>(ctl->height);
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(*ctl.get()));
  if (!png_image_finish_read(ctl.get(), nullptr, data.data(), 0, nullptr)) ctl.fail(path);
  if (color) return RgbImage(w, h, std::move(data));
  return GrayImage(w, h, std::move(data));
}

GrayImage read_gray(const std::filesystem::path& path) {
  Image img = read(path);
  if (auto* gray = std::get_if<GrayImage>(&img)) return std::move(*gray);
  return to_grayscale(std::get<RgbImage>(img));
}

Size read_size(const std::filesystem::path& path) {
  Control ctl;
  begin_read(ctl, path);
  return {static_cast<int>(ctl->width), static_cast<int>(ctl->height)};
}

void write(const std::filesystem::path& path, const GrayImage& img) { write_impl(path, img); }
void write(const std::filesystem::path& path, const RgbImage& img) { write_impl(path, img); }

}  // namespace rop::png
