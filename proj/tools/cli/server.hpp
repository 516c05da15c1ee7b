#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include <spdlog/logger.h>

#include "aicatcher/model.hpp"

namespace aicatcher::cli {

struct ServeOptions {
    std::size_t max_body_bytes = 1 << 20;
    std::size_t threads = 8;
};

// POST /v1/detect  {"text": ...} -> {label, p_chatgpt, features}
// GET  /v1/health  -> {status, model_version, format_version}
// 400 for malformed JSON or blank text, 413 above max_body_bytes, 503 when
// the grammar service is required and unreachable.
class DetectionServer {
public:
    DetectionServer(std::shared_ptr<const DetectorModel> model, std::shared_ptr<const Preprocessor> prep,
                    ServeOptions options, std::shared_ptr<spdlog::logger> log = nullptr);
    ~DetectionServer();
    DetectionServer(const DetectionServer&) = delete;
    DetectionServer& operator=(const DetectionServer&) = delete;

    bool bind(const std::string& host, int port);
    // Returns the chosen port, or -1.
    int bind_to_any_port(const std::string& host);
    // Blocks until stop().
    bool listen_after_bind();
    void stop();
    bool is_running() const;
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace aicatcher::cli
