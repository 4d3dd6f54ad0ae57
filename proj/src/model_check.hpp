#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "artready/asset_model.hpp"

namespace artready::detail {

/// Maps ("link" | "joint", name) to a human-readable location string.
using Locator = std::function<std::string(std::string_view, std::string_view)>;

std::string default_locator(std::string_view kind, std::string_view name);
void check_model(const AssetModel& model, const Locator& where);

}  // namespace artready::detail
