// Copyright 2026 The streamtts Authors
// SPDX-License-Identifier: Apache-2.0

#include "httplib.h"
#include "streamtts/backend.hpp"

namespace streamtts {

RemoteBackend::RemoteBackend(std::string endpoint, int timeout_ms, std::uint32_t marker_id)
    : timeout_ms_(timeout_ms), marker_id_(marker_id) {
  std::string_view rest = endpoint;
  constexpr std::string_view scheme = "http://";
  if (rest.substr(0, scheme.size()) == scheme) rest.remove_prefix(scheme.size());
  else if (rest.find("://") != std::string_view::npos)
    throw Error(ErrorCode::InvalidConfig, "only http:// endpoints are supported: " + endpoint);

  auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) prefix_ = std::string(rest.substr(slash));
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();

  auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    host_ = std::string(authority);
  } else {
    host_ = std::string(authority.substr(0, colon));
    try {
      port_ = std::stoi(std::string(authority.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "bad port in endpoint " + endpoint);
    }
  }
  if (host_.empty()) throw Error(ErrorCode::InvalidConfig, "missing host in endpoint " + endpoint);
}

void RemoteBackend::generate(const SynthesisRequest& req, Clock& clock, const TokenSink& sink) {
  httplib::Client client(host_, port_);
  const auto secs = timeout_ms_ / 1000;
  const auto usecs = (timeout_ms_ % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Request http_req;
  http_req.method = "POST";
  http_req.path = prefix_ + "/v1/generate";
  http_req.body = request_to_wire_json(req, marker_id_);
  http_req.set_header("Content-Type", "application/json");
  http_req.set_header("Accept", "application/x-ndjson");
  http_req.set_header("X-Streamtts-Schema", std::string(kWireSchemaVersion));

  bool terminated = false;
  std::size_t tokens = 0;
  int status = 0;
  LineBuffer lines;

  auto on_line = [&](std::string_view line) -> bool {
    WireLine ev;
    try {
      ev = parse_wire_line(line);
    } catch (const Error& e) {
      sink(TokenEvent::make_error(std::string("ProtocolError: ") + e.what(), clock.now_ns()));
      terminated = true;
      return false;
    }
    switch (ev.kind) {
      case WireLine::Kind::Token:
        if (tokens == req.max_tokens) {
          sink(TokenEvent::make_stop(StopReason::CapTruncated, clock.now_ns()));
          terminated = true;
          return false;
        }
        ++tokens;
        sink(TokenEvent::make_token(SpeechToken{ev.token}, clock.now_ns()));
        return true;
      case WireLine::Kind::Stop:
        sink(TokenEvent::make_stop(ev.stop, clock.now_ns()));
        terminated = true;
        return false;
      case WireLine::Kind::Error:
        sink(TokenEvent::make_error("ServerError: " + ev.error, clock.now_ns()));
        terminated = true;
        return false;
    }
    return false;
  };

  http_req.response_handler = [&](const httplib::Response& res) {
    status = res.status;
    return true;
  };
  http_req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    if (status != 200) return true;  // collect nothing; handled after send()
    lines.feed(std::string_view(data, len), on_line);
    return !terminated;
  };

  auto result = client.send(http_req);
  if (terminated) return;

  if (status != 0 && status != 200) {
    sink(TokenEvent::make_error("HttpStatus: " + std::to_string(status), clock.now_ns()));
    return;
  }
  if (!result) {
    const auto err = result.error();
    std::string kind = err == httplib::Error::Connection     ? "ConnectFailed"
                       : err == httplib::Error::ConnectionTimeout ? "Timeout"
                       : err == httplib::Error::Read         ? "ConnectionLost"
                                                             : "TransportError";
    if (tokens > 0 && kind != "Timeout") kind = "ConnectionLost";
    sink(TokenEvent::make_error(kind + ": " + httplib::to_string(err), clock.now_ns()));
    return;
  }
  // Body ended without a terminal event; a final unterminated line counts.
  if (!lines.pending().empty()) {
    std::string last = lines.pending();
    last += '\n';
    LineBuffer tail;
    tail.feed(last, on_line);
    if (terminated) return;
  }
  sink(TokenEvent::make_error("ConnectionLost: stream ended without a stop event", clock.now_ns()));
}

}  // namespace streamtts
