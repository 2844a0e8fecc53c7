#pragma once

#include <stdexcept>
#include <string>

namespace monorec::io {

/// Read or write failure naming the file and, where known, the field.
class IoError : public std::runtime_error {
 public:
  IoError(std::string file, std::string field, const std::string& message)
      : std::runtime_error(message), file_(std::move(file)), field_(std::move(field)) {}

  const std::string& file() const { return file_; }
  const std::string& field() const { return field_; }

 private:
  std::string file_;
  std::string field_;
};

}  // namespace monorec::io
