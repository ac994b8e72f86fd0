#pragma once

#include <stdexcept>
#include <string>

namespace stratppi {

// Bad numeric inputs to a statistical primitive (empty sample, p outside
// (0,1), mismatched lengths, negative sigma, ...).
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// A stratum (or the whole sample) is below the minimum size needed for
// estimation.
class insufficient_data_error : public std::runtime_error {
public:
    explicit insufficient_data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or out-of-contract data (non-finite values, unnormalized
// confidence rows, CSV parse failures).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested combination of loss/method/policy is not supported.
class capability_error : public std::runtime_error {
public:
    explicit capability_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run configuration (bad flag values, missing inputs).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A sampling budget that cannot satisfy the per-stratum minimums.
class infeasible_allocation_error : public std::runtime_error {
public:
    explicit infeasible_allocation_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace stratppi
