#ifndef FPAD_COMMON_HPP
#define FPAD_COMMON_HPP

#include <stdexcept>
#include <string>

namespace fpad {

// Error hierarchy. Every module throws subclasses of Error; the CLI maps
// them onto exit codes (2 config, 3 data, 4 numeric).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };

struct DataError : Error { using Error::Error; };
struct IoError : DataError { using DataError::DataError; };
struct LayoutError : DataError { using DataError::DataError; };
struct DecodeError : DataError { using DataError::DataError; };
struct EmptyImage : DataError { using DataError::DataError; };
struct TooSmall : DataError { using DataError::DataError; };
struct MissingClass : DataError { using DataError::DataError; };
struct EmptyValSet : DataError { using DataError::DataError; };
struct InsufficientData : DataError { using DataError::DataError; };
struct InvalidParams : ConfigError { using ConfigError::ConfigError; };

struct NumericError : Error { using Error::Error; };
struct NonFiniteLoss : NumericError { using NumericError::NumericError; };
struct DomainError : NumericError { using NumericError::NumericError; };

struct ShapeMismatch : Error { using Error::Error; };
struct ManifestMismatch : Error { using Error::Error; };
struct ModeError : Error { using Error::Error; };

}  // namespace fpad

#endif  // FPAD_COMMON_HPP
