#pragma once

#include <stdexcept>
#include <string>

namespace cohortsift {

// All library failures surface as this exception type; the CLI maps it to a
// nonzero exit code and a message on stderr.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cohortsift
