#pragma once

#include <stdexcept>
#include <string>

namespace quizsim {

// Bad domain data: profiles, banks, cohort specs, designs.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable input: malformed files or model replies.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem trouble.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Response backend failure (transport, HTTP status, exhausted retries).
class BackendError : public std::runtime_error {
public:
  explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace quizsim
