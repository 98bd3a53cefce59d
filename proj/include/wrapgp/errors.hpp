#pragma once

#include <stdexcept>
#include <string>

namespace wrapgp {

// Direction of a zero-length resultant (C = S = 0) does not exist.
class undefined_direction_error : public std::domain_error {
public:
    explicit undefined_direction_error(const std::string& what)
        : std::domain_error(what) {}
};

class insufficient_data_error : public std::invalid_argument {
public:
    explicit insufficient_data_error(const std::string& what)
        : std::invalid_argument(what) {}
};

class singular_covariance_error : public std::runtime_error {
public:
    explicit singular_covariance_error(const std::string& what)
        : std::runtime_error(what) {}
};

class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& what)
        : std::invalid_argument(what) {}
};

}  // namespace wrapgp
