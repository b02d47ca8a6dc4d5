#pragma once

#include <stdexcept>
#include <string>

namespace bislab {

/// Bad argument to a pure operation (empty counts, mismatched lengths, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A dataset or training configuration that cannot be honored.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& what, int last_finite_epoch)
        : std::runtime_error(what), last_finite_epoch_(last_finite_epoch) {}

    int last_finite_epoch() const noexcept { return last_finite_epoch_; }

private:
    int last_finite_epoch_;
};

} // namespace bislab
