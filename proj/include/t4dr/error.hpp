#pragma once

#include <stdexcept>
#include <string>

namespace t4dr {

// Caller broke an operation contract (bad shapes, invalid config).
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Input is outside an op's documented numeric domain (log of <=0, exp overflow).
struct RejectedInput : std::runtime_error {
    explicit RejectedInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative estimator could not produce a usable result.
struct EstimationFailed : std::runtime_error {
    explicit EstimationFailed(const std::string& msg) : std::runtime_error(msg) {}
};

// Point configuration is rank deficient for the requested fit.
struct DegenerateConfiguration : std::runtime_error {
    explicit DegenerateConfiguration(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    IoError(const std::string& path, const std::string& msg)
        : std::runtime_error(msg + " [" + path + "]"), path(path) {}
    std::string path;
};

}  // namespace t4dr
