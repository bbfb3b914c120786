#pragma once

#include <memory>
#include <string>
#include <thread>

#include "refweave/error.hpp"
#include "refweave/service.hpp"

namespace httplib {
class Server;
}

namespace refweave {

int http_status_for(Errc code);

/// JSON HTTP API over a Service. CORS is open so a browser editor served
/// from another local origin can call it.
class ApiServer {
 public:
  explicit ApiServer(Service& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  void install_routes();

  Service& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace refweave
