#pragma once

#include <stdexcept>
#include <string>

namespace covlda {

// Malformed or inconsistent input (files, label mismatches, bad counts).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown inside a sampler or density evaluation.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace covlda
