#pragma once

#include <functional>
#include <string>

namespace mondrian {

using WarningHandler = std::function<void(const std::string&)>;

/// Emits a non-fatal warning through the installed handler (stderr by default).
void warn(const std::string& message);

/// Installs a new handler and returns the previous one.
WarningHandler set_warning_handler(WarningHandler handler);

/// RAII helper that collects warnings for the lifetime of the object.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::string& text() const { return text_; }
  int count() const { return count_; }

 private:
  WarningHandler previous_;
  std::string text_;
  int count_ = 0;
};

}  // namespace mondrian
