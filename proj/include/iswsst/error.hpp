#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace iswsst {

// Violated precondition or inconsistent configuration.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Operand shapes do not agree. The message names both shapes.
class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Malformed container or checkpoint bytes.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values appeared where training cannot continue.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iswsst
