#pragma once

#include <stdexcept>
#include <string>

namespace gevreg {

// Every library failure carries the module that raised it and a short code,
// so the CLI can print "module.code: message" on a single line.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string code, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)), code_(std::move(code)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& code() const noexcept { return code_; }
  std::string qualified() const { return module_ + "." + code_ + ": " + what(); }

 private:
  std::string module_;
  std::string code_;
};

}  // namespace gevreg
