#include "sparqlgen/http.hpp"

#include <httplib.h>

#include <map>
#include <memory>
#include <mutex>

#include "sparqlgen/errors.hpp"

namespace sparqlgen {

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("not an absolute URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

// Idle keep-alive clients, keyed by origin.
class ClientPool {
 public:
  std::unique_ptr<httplib::Client> acquire(const std::string& origin) {
    {
      std::lock_guard lock(mu_);
      auto& idle = idle_[origin];
      if (!idle.empty()) {
        auto c = std::move(idle.back());
        idle.pop_back();
        return c;
      }
    }
    auto c = std::make_unique<httplib::Client>(origin);
    c->set_keep_alive(true);
    return c;
  }

  void release(const std::string& origin, std::unique_ptr<httplib::Client> c) {
    std::lock_guard lock(mu_);
    auto& idle = idle_[origin];
    if (idle.size() < kMaxIdlePerOrigin) idle.push_back(std::move(c));
  }

 private:
  static constexpr size_t kMaxIdlePerOrigin = 16;
  std::mutex mu_;
  std::map<std::string, std::vector<std::unique_ptr<httplib::Client>>> idle_;
};

ClientPool& pool() {
  static ClientPool p;
  return p;
}

}  // namespace

HttpResponse http_post(const HttpRequest& req) {
  const auto url = split_url(req.url);
  auto client = pool().acquire(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(req.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout - secs);
  client->set_connection_timeout(secs.count(), usecs.count());
  client->set_read_timeout(secs.count(), usecs.count());
  client->set_write_timeout(secs.count(), usecs.count());

  httplib::Request hreq;
  hreq.method = "POST";
  hreq.path = url.path;
  hreq.body = req.body;
  hreq.set_header("Content-Type", req.content_type);
  for (const auto& [k, v] : req.headers) hreq.set_header(k, v);

  std::string body;
  bool oversized = false;
  hreq.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    if (req.max_response_bytes && body.size() + len > req.max_response_bytes) {
      oversized = true;
      return false;
    }
    body.append(data, len);
    return true;
  };

  httplib::Response hres;
  httplib::Error err = httplib::Error::Success;
  const auto start = std::chrono::steady_clock::now();
  const bool sent = client->send(hreq, hres, err);
  const auto elapsed = std::chrono::steady_clock::now() - start;

  if (oversized) {
    throw TransportError("response from " + req.url + " exceeds the size cap of " +
                         std::to_string(req.max_response_bytes) + " bytes");
  }
  if (!sent) {
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= req.timeout)) {
      throw TimeoutError("request to " + req.url + " timed out");
    }
    throw TransportError("request to " + req.url + " failed: " + httplib::to_string(err));
  }
  pool().release(url.origin, std::move(client));

  HttpResponse out;
  out.status = hres.status;
  out.body = std::move(body);
  out.content_type = hres.get_header_value("Content-Type");
  return out;
}

}  // namespace sparqlgen
