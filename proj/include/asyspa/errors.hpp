#pragma once

#include <stdexcept>
#include <string>

namespace asyspa {

// Bad user input (CLI config, malformed files).  The CLI maps this to exit
// code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A runtime invariant of the protocol or of an analysis check was violated
// (e.g. non-positive push-sum weight, broken mass conservation).  The CLI
// maps this to exit code 3.
class invariant_error : public std::runtime_error {
 public:
  explicit invariant_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace asyspa
