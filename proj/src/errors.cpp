#include "qgl/errors.hpp"

namespace qgl {

Error::Error(std::string code, const std::string& detail)
    : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

void fail(const std::string& code, const std::string& detail) { throw Error(code, detail); }

}  // namespace qgl
