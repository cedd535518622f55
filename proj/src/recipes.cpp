// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmimo/config.hpp"
#include "lmimo/errors.hpp"

namespace lmimo {

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_recipes();
}

std::vector<std::string> recipe_names() {
    static const std::vector<std::string> order = {
        "recovery-qam",        "recovery-ofdm", "recovery-noisy",      "constellation", "eye",
        "sqnr-vs-b",           "sumrate-vs-antennas", "power-scaling", "sumrate-and-ee-vs-b", "replay",
    };
    std::vector<std::string> names;
    for (const auto& n : order) {
        const auto& table = detail::embedded_recipes();
        if (std::any_of(table.begin(), table.end(), [&](const auto& e) { return e.first == n; })) names.push_back(n);
    }
    return names;
}

nlohmann::json recipe_document(const std::string& name) {
    for (const auto& [n, text] : detail::embedded_recipes())
        if (n == name) return nlohmann::json::parse(text);
    throw InputError("unknown recipe '" + name + "'");
}

} // namespace lmimo
