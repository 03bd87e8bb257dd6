#pragma once

#include <stdexcept>
#include <string>

namespace qgl {

// Error carrying a stable machine-readable code such as "DegreeTwoVertex".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail);
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] void fail(const std::string& code, const std::string& detail);

}  // namespace qgl
