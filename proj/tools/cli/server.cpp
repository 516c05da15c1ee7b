#include "server.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aicatcher/errors.hpp"

namespace aicatcher::cli {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

}  // namespace

struct DetectionServer::Impl {
    std::shared_ptr<const DetectorModel> model;
    std::shared_ptr<const Preprocessor> prep;
    ServeOptions options;
    std::shared_ptr<spdlog::logger> log;
    std::string fingerprint;
    httplib::Server server;

    void detect(const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception&) {
            return send_json(res, 400, {{"error", "request body is not valid JSON"}});
        }
        if (!body.is_object() || !body.contains("text") || !body["text"].is_string()) {
            return send_json(res, 400, {{"error", "expected a JSON object with a string field \"text\""}});
        }
        const auto text = body["text"].get<std::string>();
        if (blank(text)) return send_json(res, 400, {{"error", "text is empty"}});
        try {
            const auto p = predict(*model, *prep, text);
            send_json(res, 200,
                      {{"label", to_string(p.label)}, {"p_chatgpt", p.p_chatgpt}, {"features", p.features.to_json()}});
        } catch (const GrammarServiceUnavailable& e) {
            if (log) log->error("grammar service unavailable: {}", e.what());
            send_json(res, 503, {{"error", e.what()}});
        }
    }
};

DetectionServer::DetectionServer(std::shared_ptr<const DetectorModel> model, std::shared_ptr<const Preprocessor> prep,
                                 ServeOptions options, std::shared_ptr<spdlog::logger> log)
    : impl_(std::make_unique<Impl>()) {
    impl_->model = std::move(model);
    impl_->prep = std::move(prep);
    impl_->options = options;
    impl_->log = std::move(log);
    impl_->fingerprint = model_fingerprint(*impl_->model);

    auto& svr = impl_->server;
    const auto threads = std::max<std::size_t>(1, options.threads);
    svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    svr.set_payload_max_length(options.max_body_bytes);

    auto* impl = impl_.get();
    svr.Post("/v1/detect", [impl](const httplib::Request& req, httplib::Response& res) { impl->detect(req, res); });
    svr.Get("/v1/health", [impl](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200,
                  {{"status", "ok"}, {"model_version", impl->fingerprint}, {"format_version", kModelFormatVersion}});
    });
    svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        const std::string reason = res.status == 413 ? "request body too large" : httplib::status_message(res.status);
        send_json(res, res.status, {{"error", reason}});
    });
    svr.set_exception_handler([impl](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        if (impl->log) impl->log->error("request failed: {}", what);
        send_json(res, 500, {{"error", what}});
    });
    svr.set_logger([impl](const httplib::Request& req, const httplib::Response& res) {
        if (impl->log) impl->log->debug("{} {} -> {}", req.method, req.path, res.status);
    });
}

DetectionServer::~DetectionServer() { stop(); }

bool DetectionServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

int DetectionServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool DetectionServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void DetectionServer::stop() {
    if (impl_) impl_->server.stop();
}

bool DetectionServer::is_running() const { return impl_->server.is_running(); }

void DetectionServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace aicatcher::cli
