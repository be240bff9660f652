#include "micoach/api/http_server.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>

namespace micoach::api {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

void install(httplib::Server& server, Service& service) {
  auto forward = [&service](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query.emplace(k, v);
    for (const auto& [k, v] : in.headers) req.headers.emplace(lower(k), v);
    req.body = in.body;
    for (const auto& [name, file] : in.files) req.files.emplace(name, file.content);
    const Response res = service.handle(req);
    out.status = res.status;
    out.set_content(res.body, res.content_type);
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  server.Put(".*", forward);
  server.Delete(".*", forward);
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>()) { install(impl_->server, service); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) return -1;
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpServer::stop() {
  if (thread_.joinable()) {
    impl_->server.stop();
    thread_.join();
  }
}

bool serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  install(server, service);
  return server.listen(host, port);
}

}  // namespace micoach::api
