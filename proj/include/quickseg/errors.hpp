#pragma once

#include <stdexcept>
#include <string>

namespace quickseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input: undecodable image, bad prompt, out-of-bounds point.
class InputError : public Error {
  public:
    using Error::Error;
};

/// Two masks or maps with incompatible dimensions were combined.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// RLE counts do not sum to width * height, or the compressed string is corrupt.
class MalformedRleError : public Error {
  public:
    using Error::Error;
};

/// Model file missing, output shapes wrong, mock scene incompatible with the image.
class BackendError : public Error {
  public:
    using Error::Error;
};

/// A required backend or option is not configured.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Mock scene has more shapes than available prototype channels.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// JSON document does not match the expected schema. `path` names the offending node.
class SchemaError : public Error {
  public:
    SchemaError(std::string path, const std::string& what)
        : Error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

  private:
    std::string path_;
};

}  // namespace quickseg
