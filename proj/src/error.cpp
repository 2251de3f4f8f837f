#include "aed/error.hpp"

namespace aed {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::config: return "config error";
    case Errc::missing_directory: return "missing directory";
    case Errc::no_frames: return "no decodable frames";
    case Errc::geometry_mismatch: return "geometry mismatch";
    case Errc::count_mismatch: return "count mismatch";
    case Errc::index_range: return "index out of range";
    case Errc::missing_name: return "missing tensor name";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::corrupt_archive: return "corrupt archive";
    case Errc::io: return "i/o error";
    case Errc::missing_masks: return "missing masks";
    case Errc::single_class: return "single-class labels";
    case Errc::empty_input: return "empty input";
    case Errc::non_finite: return "non-finite value";
  }
  return "unknown error";
}

}  // namespace aed
