// SPDX-License-Identifier: Apache-2.0
#include "lmimo/errors.hpp"

namespace lmimo {

namespace {

std::string join(const std::vector<std::string>& d) {
    std::string s = "invalid configuration:";
    for (const auto& line : d) s += "\n  " + line;
    return s;
}

} // namespace

ValidationError::ValidationError(std::vector<std::string> diagnostics)
    : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

} // namespace lmimo
