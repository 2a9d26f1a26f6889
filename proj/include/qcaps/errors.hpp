#pragma once

#include <stdexcept>
#include <string>

namespace qcaps {

// Exit-code mapping used by the CLI: 2 usage/config, 3 data, 4 numeric.
struct argument_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct size_error : std::length_error {
    using std::length_error::length_error;
};

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct contract_error : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace qcaps
