#pragma once

#include <stdexcept>
#include <string>

namespace axisedit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Training data containing only one label.
class SingleClassError : public Error {
 public:
  using Error::Error;
};

class UnknownImageError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to an out-of-process model server.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Requested edit target lies outside the class bounds.
class EditNotPossible : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

}  // namespace axisedit
