#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "chfb/annotator.hpp"

namespace httplib {
class Server;
}

namespace chfb {

/// HTTP binding of AnnotatorService. The built UI bundle, when present, is
/// served under /ui.
class HttpServer {
 public:
  explicit HttpServer(AnnotatorService& service, const std::filesystem::path& ui_dir = {});
  ~HttpServer();

  /// Binds to host:port; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind.
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  AnnotatorService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace chfb
