#include <algorithm>

#include "httplib.h"
#include "quickseg/service.hpp"

namespace quickseg {

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;

    explicit Impl(Service& s) : service(s) {}

    void dispatch(const httplib::Request& req, httplib::Response& res) {
        HttpRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.headers) {
            r.headers[k] = v;
        }
        if (req.is_multipart_form_data()) {
            if (req.has_file("image")) {
                r.body = req.get_file_value("image").content;
            }
        } else {
            r.body = req.body;
        }
        const HttpResponse out = service.handle(r);
        res.status = out.status;
        for (const auto& [k, v] : out.headers) {
            res.set_header(k, v);
        }
        if (!out.content_type.empty()) {
            res.set_content(out.body, out.content_type);
        }
    }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) { impl_->dispatch(req, res); };
    const std::string pattern = R"(/.*)";
    impl_->server.Get(pattern, handler);
    impl_->server.Post(pattern, handler);
    impl_->server.Delete(pattern, handler);
    impl_->server.Options(pattern, handler);
    // Multipart framing adds a little on top of the image itself; the handler enforces the
    // exact limit and httplib answers 413 for anything far beyond it.
    impl_->server.set_payload_max_length(service.config().service.max_upload_bytes + (64u << 10));
    const int threads = std::max(1, service.config().service.threads);
    impl_->server.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    const auto& cfg = impl_->service.config().service;
    if (cfg.port == 0) {
        return impl_->server.bind_to_any_port(cfg.host);
    }
    return impl_->server.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) {
        impl_->server.stop();
    }
}

}  // namespace quickseg
