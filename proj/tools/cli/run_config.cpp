#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace aicatcher::cli {

namespace {

enum class Kind { Uint, Real, Bool, Text, UintList, Choice };

struct KeySpec {
    std::string_view key;
    std::string_view fallback;
    Kind kind;
    std::string_view choices = {};  // '|'-separated, for Choice
};

constexpr KeySpec kKeys[] = {
    {"seed", "0", Kind::Uint},
    {"vocab_size", "10000", Kind::Uint},
    {"embedding_dim", "64", Kind::Uint},
    {"conv_filters", "128", Kind::Uint},
    {"conv_kernel", "2", Kind::Uint},
    {"dropout_rate", "0.2", Kind::Real},
    {"mlp_hidden", "256,256,256,256,256", Kind::UintList},
    {"fusion_hidden", "128,64", Kind::UintList},
    {"max_seq_len", "512", Kind::Uint},
    {"learning_rate", "0.001", Kind::Real},
    {"batch_size", "32", Kind::Uint},
    {"epochs", "30", Kind::Uint},
    {"patience", "0", Kind::Uint},
    {"truncation", "head", Kind::Choice, "head|tail"},
    {"logreg.learning_rate", "0.1", Kind::Real},
    {"logreg.epochs", "2000", Kind::Uint},
    {"grammar.backend", "heuristic", Kind::Choice, "heuristic|remote"},
    {"grammar.endpoint", "", Kind::Text},
    {"grammar.language", "en-US", Kind::Text},
    {"grammar.timeout_ms", "10000", Kind::Uint},
    {"grammar.retries", "2", Kind::Uint},
    {"grammar.max_in_flight", "4", Kind::Uint},
    {"grammar.fallback", "true", Kind::Bool},
    {"lexicon_dir", "", Kind::Text},
    {"threads", "1", Kind::Uint},
    {"serve.max_body_bytes", "1048576", Kind::Uint},
    {"serve.threads", "8", Kind::Uint},
};

const KeySpec* find_spec(std::string_view key) {
    for (const auto& s : kKeys) {
        if (s.key == key) return &s;
    }
    return nullptr;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_uint(std::string_view s, std::uint64_t& out) {
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_real(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_bool(std::string s, bool& out) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        out = true;
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        out = false;
        return true;
    }
    return false;
}

std::vector<std::uint64_t> parse_list(std::string_view s, bool& ok) {
    std::vector<std::uint64_t> out;
    ok = true;
    std::size_t at = 0;
    while (at <= s.size()) {
        auto comma = s.find(',', at);
        if (comma == std::string_view::npos) comma = s.size();
        std::uint64_t v = 0;
        ok = ok && parse_uint(trim(s.substr(at, comma - at)), v);
        out.push_back(v);
        at = comma + 1;
    }
    return out;
}

void check_value(const KeySpec& spec, const std::string& value) {
    auto bad = [&](const char* what) {
        throw ConfigError("config key " + std::string(spec.key) + ": '" + value + "' is not " + what);
    };
    switch (spec.kind) {
        case Kind::Uint: {
            std::uint64_t v;
            if (!parse_uint(value, v)) bad("a non-negative integer");
            break;
        }
        case Kind::Real: {
            double v;
            if (!parse_real(value, v)) bad("a number");
            break;
        }
        case Kind::Bool: {
            bool v;
            if (!parse_bool(value, v)) bad("a boolean");
            break;
        }
        case Kind::UintList: {
            bool ok;
            parse_list(value, ok);
            if (!ok) bad("a comma-separated list of integers");
            break;
        }
        case Kind::Choice: {
            std::string_view rest = spec.choices;
            bool found = false;
            while (!rest.empty()) {
                const auto bar = rest.find('|');
                found = found || rest.substr(0, bar) == value;
                rest = bar == std::string_view::npos ? std::string_view{} : rest.substr(bar + 1);
            }
            if (!found) bad(("one of " + std::string(spec.choices)).c_str());
            break;
        }
        case Kind::Text: break;
    }
}

}  // namespace

std::string_view to_string(ConfigSource source) {
    switch (source) {
        case ConfigSource::Default: return "default";
        case ConfigSource::File: return "file";
        case ConfigSource::Env: return "env";
        case ConfigSource::Flag: return "flag";
    }
    return "?";
}

RunConfig::RunConfig() {
    for (const auto& s : kKeys) entries_[std::string(s.key)] = {std::string(s.fallback), ConfigSource::Default};
}

void RunConfig::set(std::string_view key, std::string_view value, ConfigSource source) {
    const auto* spec = find_spec(key);
    if (!spec) throw ConfigError("unknown config key '" + std::string(key) + "'");
    auto v = trim(value);
    check_value(*spec, v);
    entries_[std::string(key)] = {std::move(v), source};
}

void RunConfig::set_assignment(std::string_view assignment, ConfigSource source) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    }
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1), source);
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        try {
            set_assignment(line, ConfigSource::File);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

std::string RunConfig::env_name(std::string_view key) {
    if (key == "grammar.endpoint") return "AICATCHER_GRAMMAR_URL";
    std::string name = "AICATCHER_";
    for (char c : key) name.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return name;
}

void RunConfig::load_env(const std::function<const char*(const char*)>& getenv) {
    for (const auto& s : kKeys) {
        const auto name = env_name(s.key);
        if (const char* v = getenv(name.c_str())) {
            try {
                set(s.key, v, ConfigSource::Env);
            } catch (const ConfigError& e) {
                throw ConfigError(name + ": " + e.what());
            }
        }
    }
}

const std::string& RunConfig::get(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return it->second.value;
}

ConfigSource RunConfig::source(std::string_view key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return it->second.source;
}

std::uint64_t RunConfig::get_uint(std::string_view key) const {
    std::uint64_t v = 0;
    if (!parse_uint(get(key), v)) throw ConfigError(std::string(key) + " is not an integer");
    return v;
}

double RunConfig::get_double(std::string_view key) const {
    double v = 0;
    if (!parse_real(get(key), v)) throw ConfigError(std::string(key) + " is not a number");
    return v;
}

bool RunConfig::get_bool(std::string_view key) const {
    bool v = false;
    if (!parse_bool(get(key), v)) throw ConfigError(std::string(key) + " is not a boolean");
    return v;
}

ModelConfig RunConfig::model_config() const {
    ModelConfig c;
    c.seed = seed();
    c.vocab_size = get_uint("vocab_size");
    c.embedding_dim = get_uint("embedding_dim");
    c.conv_filters = get_uint("conv_filters");
    c.conv_kernel = get_uint("conv_kernel");
    c.dropout_rate = get_double("dropout_rate");
    bool ok = true;
    c.mlp_hidden.clear();
    for (auto v : parse_list(get("mlp_hidden"), ok)) c.mlp_hidden.push_back(v);
    c.fusion_hidden.clear();
    for (auto v : parse_list(get("fusion_hidden"), ok)) c.fusion_hidden.push_back(v);
    c.max_seq_len = get_uint("max_seq_len");
    c.learning_rate = get_double("learning_rate");
    c.batch_size = get_uint("batch_size");
    c.epochs = get_uint("epochs");
    c.patience = get_uint("patience");
    c.truncation = get("truncation") == "tail" ? Truncation::KeepTail : Truncation::KeepHead;
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

LogRegConfig RunConfig::logreg_config() const {
    return {get_double("logreg.learning_rate"), get_uint("logreg.epochs")};
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json values = nlohmann::json::object();
    nlohmann::json sources = nlohmann::json::object();
    for (const auto& s : kKeys) {
        const auto& e = entries_.at(std::string(s.key));
        const std::string key(s.key);
        switch (s.kind) {
            case Kind::Uint: values[key] = get_uint(key); break;
            case Kind::Real: values[key] = get_double(key); break;
            case Kind::Bool: values[key] = get_bool(key); break;
            case Kind::UintList: {
                bool ok;
                values[key] = parse_list(e.value, ok);
                break;
            }
            default: values[key] = e.value;
        }
        sources[key] = to_string(e.source);
    }
    return {{"values", values}, {"sources", sources}};
}

std::vector<std::string> RunConfig::keys() {
    std::vector<std::string> out;
    for (const auto& s : kKeys) out.emplace_back(s.key);
    return out;
}

}  // namespace aicatcher::cli
