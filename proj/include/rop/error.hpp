#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace rop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Malformed text input (JSON). `offset` is the byte position reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Well-formed VIA JSON with content we cannot accept.
class AnnotationError : public Error {
 public:
  AnnotationError(std::string image, int region, const std::string& what)
      : Error("image '" + image + "' region " + std::to_string(region) + ": " + what),
        image_(std::move(image)),
        region_(region) {}
  const std::string& image() const noexcept { return image_; }
  int region() const noexcept { return region_; }

 private:
  std::string image_;
  int region_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Fused-sample binary file did not validate.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace rop
