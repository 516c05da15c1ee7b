#include "aicatcher/grammar.hpp"

#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"
#include "aicatcher/textprep.hpp"
#include "unicode.hpp"

namespace aicatcher {

std::string_view to_string(GrammarSource source) {
    return source == GrammarSource::Remote ? "remote" : "heuristic";
}

// --- heuristic --------------------------------------------------------------

namespace {

// A subject preceded by one of these is part of a question, a modal or a
// causative construction ("does he go", "let it go"), not an agreement error.
const std::unordered_set<std::string>& agreement_exempt_predecessors() {
    static const std::unordered_set<std::string> words{
        "do", "does", "did", "will", "would", "can", "could", "shall", "should", "may", "might", "must",
        "let", "lets", "make", "makes", "made", "help", "helps", "helped", "to", "see", "saw", "watch",
        "hear", "heard", "have", "has", "had", "why", "how", "where", "when", "if", "whether"};
    return words;
}

bool starts_lowercase(std::string_view word) {
    const auto cps = unicode::decode(word);
    return !cps.empty() && unicode::is_lower(cps.front());
}

bool all_digits(std::string_view w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_word_token(std::string_view tok) {
    const auto cps = unicode::decode(tok);
    return !cps.empty() && unicode::is_alnum(cps.front());
}

}  // namespace

HeuristicGrammarBackend::HeuristicGrammarBackend()
    : HeuristicGrammarBackend(Lexicons::builtin().agreement_patterns) {}

HeuristicGrammarBackend::HeuristicGrammarBackend(std::unordered_set<std::string> agreement_patterns)
    : agreement_patterns_(std::move(agreement_patterns)) {}

std::size_t HeuristicGrammarBackend::doubled_words(std::string_view text) const {
    static const std::unordered_set<std::string> allowed{"had", "that"};
    const auto t = tokenize(text, CaseMode::Lower);
    std::size_t errors = 0;
    for (const auto& sentence : t.sentences) {
        for (std::size_t i = 1; i < sentence.size(); ++i) {
            const auto& prev = sentence[i - 1];
            const auto& cur = sentence[i];
            if (prev == cur && is_word_token(cur) && !all_digits(cur) && !allowed.count(cur)) ++errors;
        }
    }
    return errors;
}

std::size_t HeuristicGrammarBackend::lowercase_sentence_starts(std::string_view text) const {
    const auto t = tokenize(text, CaseMode::Preserve);
    std::size_t errors = 0;
    for (const auto& sentence : t.sentences) {
        for (const auto& tok : sentence) {
            if (!is_word_token(tok)) continue;
            if (starts_lowercase(tok)) ++errors;
            break;
        }
    }
    return errors;
}

std::size_t HeuristicGrammarBackend::agreement_errors(std::string_view text) const {
    const auto t = tokenize(text, CaseMode::Lower);
    const auto& exempt = agreement_exempt_predecessors();
    std::size_t errors = 0;
    for (const auto& sentence : t.sentences) {
        for (std::size_t i = 0; i + 1 < sentence.size(); ++i) {
            if (!agreement_patterns_.count(sentence[i] + " " + sentence[i + 1])) continue;
            if (i > 0 && exempt.count(sentence[i - 1])) continue;
            ++errors;
        }
    }
    return errors;
}

std::size_t HeuristicGrammarBackend::unbalanced_delimiters(std::string_view text) const {
    const auto t = tokenize(text, CaseMode::Preserve);
    std::vector<char32_t> stack;
    std::size_t errors = 0;
    std::size_t straight_quotes = 0;
    std::size_t open_curly = 0;
    std::size_t close_curly = 0;
    for (const auto& tok : t.punct) {
        const auto cps = unicode::decode(tok);
        const char32_t c = cps.empty() ? U'\0' : cps.front();
        switch (c) {
            case U'(': case U'[': case U'{':
                stack.push_back(c);
                break;
            case U')': case U']': case U'}': {
                const char32_t want = c == U')' ? U'(' : c == U']' ? U'[' : U'{';
                if (!stack.empty() && stack.back() == want) {
                    stack.pop_back();
                } else {
                    ++errors;
                }
                break;
            }
            case U'"': ++straight_quotes; break;
            case U'“': ++open_curly; break;
            case U'”': ++close_curly; break;
            default: break;
        }
    }
    errors += stack.size();
    errors += straight_quotes % 2;
    errors += open_curly > close_curly ? open_curly - close_curly : close_curly - open_curly;
    return errors;
}

std::size_t HeuristicGrammarBackend::count_errors(std::string_view text) const {
    return doubled_words(text) + lowercase_sentence_starts(text) + agreement_errors(text) +
           unbalanced_delimiters(text);
}

// --- remote -----------------------------------------------------------------

RemoteGrammarBackend::RemoteGrammarBackend(RemoteGrammarConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw std::invalid_argument("grammar endpoint is empty");
    if (config_.max_in_flight == 0) config_.max_in_flight = 1;
    auto url = config_.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        scheme_host_port_ = url;
    } else {
        scheme_host_port_ = url.substr(0, path_start);
        path_prefix_ = url.substr(path_start);
    }
}

std::size_t RemoteGrammarBackend::attempt(std::string_view text) const {
    httplib::Client client(scheme_host_port_);
    const auto ms = config_.timeout.count();
    client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
    client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
    client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);

    httplib::Params form{{"text", std::string(text)}, {"language", config_.language}};
    auto res = client.Post(path_prefix_ + "/v2/check", form);
    if (!res) throw GrammarServiceUnavailable("grammar service unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw GrammarServiceUnavailable("grammar service returned HTTP " + std::to_string(res->status));
    }
    try {
        const auto body = nlohmann::json::parse(res->body);
        const auto& matches = body.at("matches");
        if (!matches.is_array()) throw GrammarServiceUnavailable("grammar response 'matches' is not an array");
        return matches.size();
    } catch (const nlohmann::json::exception& e) {
        throw GrammarServiceUnavailable(std::string("malformed grammar response: ") + e.what());
    }
}

std::size_t RemoteGrammarBackend::count_errors(std::string_view text) const {
    {
        std::unique_lock lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        const RemoteGrammarBackend* self;
        ~Release() {
            {
                std::lock_guard lock(self->mutex_);
                --self->in_flight_;
            }
            self->slot_free_.notify_one();
        }
    } release{this};

    std::string last_error;
    for (std::size_t i = 0; i <= config_.retries; ++i) {
        if (i > 0) std::this_thread::sleep_for(config_.retry_backoff * static_cast<long>(i));
        try {
            return attempt(text);
        } catch (const GrammarServiceUnavailable& e) {
            last_error = e.what();
        }
    }
    throw GrammarServiceUnavailable(last_error + " (after " + std::to_string(config_.retries + 1) + " attempts)");
}

// --- checker ----------------------------------------------------------------

GrammarChecker::GrammarChecker(std::shared_ptr<const GrammarBackend> primary,
                               std::shared_ptr<const GrammarBackend> fallback, FallbackObserver on_fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)), on_fallback_(std::move(on_fallback)) {
    if (!primary_) throw std::invalid_argument("grammar checker needs a primary backend");
}

std::shared_ptr<GrammarChecker> GrammarChecker::heuristic() {
    return std::make_shared<GrammarChecker>(std::make_shared<HeuristicGrammarBackend>());
}

GrammarResult GrammarChecker::check(std::string_view text) const {
    const bool blank = std::all_of(text.begin(), text.end(),
                                   [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
    if (blank) return {0, primary_->source()};
    try {
        return {primary_->count_errors(text), primary_->source()};
    } catch (const GrammarServiceUnavailable& e) {
        if (!fallback_) throw;
        if (on_fallback_) on_fallback_(e.what());
        return {fallback_->count_errors(text), fallback_->source()};
    }
}

}  // namespace aicatcher
