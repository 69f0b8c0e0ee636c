#pragma once

#include <filesystem>
#include <initializer_list>
#include <string_view>

#include <nlohmann/json.hpp>

namespace fan::json_util {

/// Throws ConfigError when `j` is not an object or carries a key outside `allowed`.
void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                std::string_view context);

nlohmann::json load_file(const std::filesystem::path& path);
void save_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace fan::json_util
