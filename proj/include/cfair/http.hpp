#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <string>
#include <utility>

#include <json.hpp>

#include "cfair/error.hpp"

namespace cfair::http {

using json = nlohmann::json;

/// `scheme://host[:port]` plus the path part of a URL.
struct Endpoint {
    std::string origin;
    std::string path;
};

inline Endpoint parse_endpoint(const std::string &url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ValidationError("endpoint '" + url + "' lacks a scheme");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    auto path = url.substr(slash);
    while (path.size() > 1 && path.back() == '/') path.pop_back();
    if (path == "/") path.clear();
    return {url.substr(0, slash), path};
}

struct ClientOptions {
    std::chrono::seconds timeout{60};
    std::string bearer_token;  // empty: no Authorization header
};

/// Reads a secret from the environment; empty when unset.
inline std::string env_secret(const std::string &var) {
    if (var.empty()) return {};
    const char *v = std::getenv(var.c_str());
    return v == nullptr ? std::string{} : std::string(v);
}

/// POSTs a JSON body and parses a JSON reply. Connection failures, non-2xx
/// statuses and unparseable bodies become TransportError tagged with `request_id`.
inline json post_json(const Endpoint &ep, const std::string &path, const json &body, const ClientOptions &opts,
                      const std::string &request_id) {
    httplib::Client client(ep.origin);
    client.set_connection_timeout(opts.timeout);
    client.set_read_timeout(opts.timeout);
    client.set_write_timeout(opts.timeout);
    httplib::Headers headers;
    if (!opts.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + opts.bearer_token);
    const auto full_path = ep.path + path;
    auto res = client.Post(full_path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + ep.origin + full_path + " failed: " + httplib::to_string(res.error()),
                             request_id);
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("POST " + ep.origin + full_path + " returned HTTP " + std::to_string(res->status),
                             request_id);
    }
    try {
        return json::parse(res->body);
    } catch (const json::parse_error &) {
        throw TransportError("malformed JSON reply from " + ep.origin + full_path, request_id);
    }
}

}  // namespace cfair::http
