#pragma once

#include <stdexcept>
#include <string>

namespace capstan {

// Base class for all errors thrown by this library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace capstan
