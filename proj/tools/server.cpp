#include "server.hpp"

#include <httplib.h>

namespace chfb {

HttpServer::HttpServer(AnnotatorService& service, const std::filesystem::path& ui_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    ServiceRequest r{req.method, req.path, req.body, req.get_header_value("Authorization")};
    const auto out = service_.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server_->Get(R"(/images(/.*)?)", forward);
  server_->Post(R"(/images/.*)", forward);
  server_->Delete(R"(/images/.*)", forward);
  if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir)) {
    server_->set_mount_point("/ui", ui_dir.string());
    server_->Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace chfb
