#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_set>

#include "aicatcher/lexicons.hpp"

namespace aicatcher {

enum class GrammarSource { Heuristic, Remote };

std::string_view to_string(GrammarSource source);

class GrammarBackend {
public:
    virtual ~GrammarBackend() = default;
    // Number of grammar problems found in the original, cased text.
    virtual std::size_t count_errors(std::string_view text) const = 0;
    virtual GrammarSource source() const noexcept = 0;
};

// Offline rule counter. Rules: doubled words, lowercase sentence starts,
// subject-verb agreement on the shipped pattern list, unbalanced brackets
// and quotes.
class HeuristicGrammarBackend final : public GrammarBackend {
public:
    HeuristicGrammarBackend();
    explicit HeuristicGrammarBackend(std::unordered_set<std::string> agreement_patterns);

    std::size_t count_errors(std::string_view text) const override;
    GrammarSource source() const noexcept override { return GrammarSource::Heuristic; }

    std::size_t doubled_words(std::string_view text) const;
    std::size_t lowercase_sentence_starts(std::string_view text) const;
    std::size_t agreement_errors(std::string_view text) const;
    std::size_t unbalanced_delimiters(std::string_view text) const;

private:
    std::unordered_set<std::string> agreement_patterns_;
};

struct RemoteGrammarConfig {
    std::string endpoint;  // e.g. http://localhost:8081
    std::string language = "en-US";
    std::chrono::milliseconds timeout{10000};
    std::size_t retries = 2;
    std::chrono::milliseconds retry_backoff{200};
    std::size_t max_in_flight = 4;
};

// Client for a LanguageTool v2 server: POST {endpoint}/v2/check with a
// form-encoded body; the error count is the length of "matches".
class RemoteGrammarBackend final : public GrammarBackend {
public:
    explicit RemoteGrammarBackend(RemoteGrammarConfig config);

    // Throws GrammarServiceUnavailable after the configured retries.
    std::size_t count_errors(std::string_view text) const override;
    GrammarSource source() const noexcept override { return GrammarSource::Remote; }

    const RemoteGrammarConfig& config() const noexcept { return config_; }

private:
    std::size_t attempt(std::string_view text) const;

    RemoteGrammarConfig config_;
    std::string scheme_host_port_;
    std::string path_prefix_;
    mutable std::mutex mutex_;
    mutable std::condition_variable slot_free_;
    mutable std::size_t in_flight_ = 0;
};

struct GrammarResult {
    std::size_t errors = 0;
    GrammarSource source = GrammarSource::Heuristic;
};

// Primary backend with an optional fallback. The result records which
// backend produced the count.
class GrammarChecker {
public:
    using FallbackObserver = std::function<void(const std::string& reason)>;

    explicit GrammarChecker(std::shared_ptr<const GrammarBackend> primary,
                            std::shared_ptr<const GrammarBackend> fallback = nullptr,
                            FallbackObserver on_fallback = nullptr);

    static std::shared_ptr<GrammarChecker> heuristic();

    GrammarResult check(std::string_view text) const;
    GrammarSource primary_source() const noexcept { return primary_->source(); }
    bool has_fallback() const noexcept { return fallback_ != nullptr; }

private:
    std::shared_ptr<const GrammarBackend> primary_;
    std::shared_ptr<const GrammarBackend> fallback_;
    FallbackObserver on_fallback_;
};

}  // namespace aicatcher
