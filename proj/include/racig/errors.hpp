#pragma once

#include <stdexcept>
#include <string>

namespace racig {

// Error taxonomy shared by the library and the CLI exit-code mapping.

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RangeError : std::runtime_error {
    explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised by the pipeline driver; carries the name of the stage that failed.
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_name, const std::string& cause)
        : std::runtime_error("stage '" + stage_name + "' failed: " + cause),
          stage(std::move(stage_name)) {}
};

}  // namespace racig
