#pragma once

#include <stdexcept>
#include <string>

namespace gmvae {

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError -> 2, DataError -> 3, CheckpointError -> 4.

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct BoundsError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Violated API contract (non-scalar loss, non-binary x, simplex violations, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// File-level problems: missing datasets, malformed IDX/CSV payloads.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gmvae
