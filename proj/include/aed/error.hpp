#pragma once

#include <stdexcept>
#include <string>

namespace aed {

enum class Errc {
  invalid_argument,
  config,
  missing_directory,
  no_frames,
  geometry_mismatch,
  count_mismatch,
  index_range,
  missing_name,
  shape_mismatch,
  corrupt_archive,
  io,
  missing_masks,
  single_class,
  empty_input,
  non_finite,
};

const char* to_string(Errc code);

/// Library error carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace aed
