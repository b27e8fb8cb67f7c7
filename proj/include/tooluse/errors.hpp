#pragma once

#include <stdexcept>
#include <string>

namespace tooluse {

// Shape disagreement between tensors; message names both shapes.
class dimension_error : public std::invalid_argument {
public:
    explicit dimension_error(const std::string& what) : std::invalid_argument(what) {}
};

// File/stream failure; message names the offending path.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss or gradient during an optimization loop.
class training_error : public std::runtime_error {
public:
    training_error(const std::string& what, std::uint64_t iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    std::uint64_t iteration() const noexcept { return iteration_; }

private:
    std::uint64_t iteration_;
};

}  // namespace tooluse
