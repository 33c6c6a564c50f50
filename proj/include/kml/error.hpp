#pragma once

#include <stdexcept>
#include <string>

namespace kml {

/// Root of every error the library throws. `kind()` is a short stable tag
/// the CLI prints in its one-line failure message.
class Error : public std::runtime_error {
 public:
  Error(const char* kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  const char* kind() const noexcept { return kind_; }

 private:
  const char* kind_;
};

#define KML_DEFINE_ERROR(Name, Base, tag) \
  class Name : public Base {              \
   public:                                \
    explicit Name(const std::string& what) : Base(tag, what) {} \
                                          \
   protected:                             \
    Name(const char* kind, const std::string& what) : Base(kind, what) {} \
  };

KML_DEFINE_ERROR(ShapeError, Error, "shape")
KML_DEFINE_ERROR(NumericError, Error, "numeric")
KML_DEFINE_ERROR(ArgumentError, Error, "argument")
KML_DEFINE_ERROR(StateError, Error, "state")
KML_DEFINE_ERROR(IngestError, Error, "ingest")
KML_DEFINE_ERROR(IoError, Error, "io")
KML_DEFINE_ERROR(ConfigError, Error, "config")
KML_DEFINE_ERROR(ReservationError, Error, "reservation")

// Model file errors share a base so callers can catch any load failure.
KML_DEFINE_ERROR(ModelFileError, Error, "model-file")
KML_DEFINE_ERROR(FormatError, ModelFileError, "format")
KML_DEFINE_ERROR(VersionError, ModelFileError, "version")
KML_DEFINE_ERROR(CorruptionError, ModelFileError, "corruption")
KML_DEFINE_ERROR(ModelKindError, ModelFileError, "model-kind")

#undef KML_DEFINE_ERROR

}  // namespace kml
