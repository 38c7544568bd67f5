#pragma once

#include <stdexcept>
#include <string>

namespace wakearb {

// Bad values handed to an API (out-of-range config, empty inputs, ...).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Scene validation problems: duplicate ids, degenerate geometry, out-of-room
// placement and friends.
struct SceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Calibration cannot proceed or produced nothing usable.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wire-format violation while decoding a frame.
struct CodecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Transport-level and election failures (distinct from a round that merely
// times out, which is reported as a result, not thrown).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario / config file problems.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wakearb
