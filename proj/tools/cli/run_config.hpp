#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"
#include "aicatcher/evalkit.hpp"
#include "aicatcher/grammar.hpp"
#include "aicatcher/model.hpp"

namespace aicatcher::cli {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class ConfigSource { Default, File, Env, Flag };

std::string_view to_string(ConfigSource source);

// Flat key/value configuration. Layers are applied lowest first:
// defaults, config file, environment (AICATCHER_<KEY>, dots as
// underscores), command-line flags. Unknown keys and malformed values
// throw ConfigError.
class RunConfig {
public:
    RunConfig();

    void set(std::string_view key, std::string_view value, ConfigSource source);
    // "key=value"
    void set_assignment(std::string_view assignment, ConfigSource source);
    // Lines of key = value; '#' starts a comment.
    void load_file(const std::filesystem::path& path);
    void load_env(const std::function<const char*(const char*)>& getenv);

    const std::string& get(std::string_view key) const;
    ConfigSource source(std::string_view key) const;
    std::uint64_t get_uint(std::string_view key) const;
    double get_double(std::string_view key) const;
    bool get_bool(std::string_view key) const;

    ModelConfig model_config() const;
    LogRegConfig logreg_config() const;
    std::uint64_t seed() const { return get_uint("seed"); }

    // Typed values plus where each came from.
    nlohmann::json to_json() const;

    static std::vector<std::string> keys();
    // Environment variable consulted for `key`.
    static std::string env_name(std::string_view key);

private:
    struct Entry {
        std::string value;
        ConfigSource source = ConfigSource::Default;
    };
    std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace aicatcher::cli
