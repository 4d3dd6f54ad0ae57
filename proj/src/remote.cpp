// Remote proposers: a chat-completion client over a pluggable transport.
// Eigen comes in before httplib: resolv.h defines a _res macro that clashes
// with Eigen parameter names.

#include "artready/proposer.hpp"

#ifdef ARTREADY_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "artready/error.hpp"

namespace artready {

RateLimiter::RateLimiter(double rps) { set_rate(rps); }

void RateLimiter::set_rate(double rps) {
  std::lock_guard<std::mutex> lock(mutex_);
  min_interval_ = rps > 0.0 ? std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(1.0 / rps))
                            : std::chrono::steady_clock::duration::zero();
}

void RateLimiter::acquire() {
  std::unique_lock<std::mutex> lock(mutex_);
  if (min_interval_ == std::chrono::steady_clock::duration::zero()) return;
  const auto now = std::chrono::steady_clock::now();
  const auto slot = std::max(now, next_);
  next_ = slot + min_interval_;
  lock.unlock();
  std::this_thread::sleep_until(slot);
}

RateLimiter& RateLimiter::global() {
  static RateLimiter limiter;
  return limiter;
}

HttpTransport::HttpTransport(int timeout_seconds) : timeout_seconds_(timeout_seconds) {}

std::string HttpTransport::post(const std::string& url, const std::string& body,
                                const std::vector<std::pair<std::string, std::string>>& headers) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::Transport, "endpoint needs a scheme", url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) throw Error(ErrorKind::Transport, "unsupported endpoint", url);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  const auto res = client.Post(path, h, body, "application/json");
  if (!res) throw Error(ErrorKind::Transport, "request failed: " + httplib::to_string(res.error()), url);
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorKind::Transport, "HTTP status " + std::to_string(res->status), url);
  }
  return res->body;
}

StubTransport::StubTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}

std::string StubTransport::post(const std::string&, const std::string& body,
                                const std::vector<std::pair<std::string, std::string>>&) {
  requests_.push_back(body);
  if (replies_.empty()) throw Error(ErrorKind::Transport, "stub has no replies");
  return replies_[std::min(requests_.size(), replies_.size()) - 1];
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  return httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

std::optional<ordered_json> extract_first_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        auto doc = ordered_json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!doc.is_discarded()) return doc;
        break;
      }
    }
  }
  return std::nullopt;
}

std::string reply_text(const std::string& body) {
  const auto doc = ordered_json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return body;
  const auto join_parts = [](const ordered_json& parts) {
    std::string out;
    for (const auto& p : parts) {
      if (p.is_string()) out += p.get<std::string>();
      else if (p.is_object() && p.contains("text") && p["text"].is_string()) out += p["text"].get<std::string>();
    }
    return out;
  };
  if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const auto& msg = doc["choices"][0].value("message", ordered_json::object());
    if (msg.contains("content")) {
      const auto& content = msg["content"];
      if (content.is_string()) return content.get<std::string>();
      if (content.is_array()) return join_parts(content);
    }
  }
  if (doc.contains("content") && doc["content"].is_array()) return join_parts(doc["content"]);
  return body;
}

RemoteClient::RemoteClient(std::shared_ptr<Transport> transport, RemoteConfig config)
    : transport_(std::move(transport)), config_(std::move(config)) {
  if (!transport_) throw Error(ErrorKind::InvalidArgument, "remote client needs a transport");
  if (config_.api_key.empty()) {
    if (const char* key = std::getenv("ARTREADY_API_KEY")) config_.api_key = key;
  }
}

ordered_json RemoteClient::request_body(const std::string& system, const std::string& user,
                                        const std::vector<Image>& images) const {
  ordered_json content = ordered_json::array();
  content.push_back({{"type", "text"}, {"text", user}});
  for (const auto& img : images) {
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(encode_png(img))}}}});
  }
  ordered_json body;
  body["model"] = config_.model;
  body["temperature"] = 0;
  body["messages"] = ordered_json::array({{{"role", "system"}, {"content", system}},
                                          {{"role", "user"}, {"content", std::move(content)}}});
  return body;
}

void RemoteClient::exchange(const std::string& system, const std::string& user, const std::vector<Image>& images,
                            const std::function<void(const ordered_json&)>& parse) {
  ordered_json body = request_body(system, user, images);
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  RateLimiter& limiter = config_.limiter ? *config_.limiter : RateLimiter::global();

  std::optional<Error> last;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    limiter.acquire();
    ++queries_;
    const std::string text = reply_text(transport_->post(config_.endpoint, body.dump(), headers));
    std::string problem;
    if (const auto doc = extract_first_json_object(text)) {
      try {
        parse(*doc);
        return;
      } catch (const Error& e) {
        last = e;
        problem = e.what();
      }
    } else {
      last.reset();
      problem = "no JSON object found in the reply";
    }
    body["messages"].push_back({{"role", "assistant"}, {"content", text}});
    body["messages"].push_back(
        {{"role", "user"}, {"content", "The previous reply was rejected: " + problem + ". Return ONLY valid JSON."}});
  }
  if (last && last->kind() == ErrorKind::SchemaInvalid) throw *last;
  if (last) throw Error(ErrorKind::SchemaInvalid, last->what());
  throw Error(ErrorKind::RetriesExhausted, "no usable reply after " + std::to_string(config_.max_retries + 1) + " attempts");
}

Overlay propose_overlay_remote(const ExtractedInfo& info, RemoteClient& client) {
  std::vector<Image> images;
  if (info.views.empty()) {
    JointConfig q;
    if (info.model.documented_initial_state) q.values = *info.model.documented_initial_state;
    images = render_views(info.model, project_to_limits(q, info.model),
                          {View::Front, View::Back, View::Left, View::Right, View::Perspective});
  } else {
    for (const auto& [view, img] : info.views) images.push_back(img);
  }
  Overlay result;
  client.exchange(std::string(prompt_template(PromptId::UrdfExpertSystem)), overlay_prompt(info), images,
                  [&](const ordered_json& doc) {
                    Overlay o = overlay_from_json(doc);
                    validate_overlay(o, info.model);  // hard rejects are retried like schema errors
                    result = std::move(o);
                  });
  return result;
}

RemoteStateProposer::RemoteStateProposer(std::shared_ptr<RemoteClient> client, RenderOptions render)
    : client_(std::move(client)), render_(render) {
  if (!client_) throw Error(ErrorKind::InvalidArgument, "remote state proposer needs a client");
}

StateUpdate RemoteStateProposer::propose(const RefinementContext& ctx) {
  if (!ctx.model) throw Error(ErrorKind::InvalidArgument, "context lacks a model");
  const auto images =
      render_views(*ctx.model, ctx.q, {View::Perspective, View::Front, View::Left, View::Top}, render_);
  StateUpdate update;
  client_->exchange(std::string(prompt_template(PromptId::StateRefinerSystem)), state_prompt(ctx), images,
                    [&](const ordered_json& doc) { update = state_update_from_json(doc); });
  return update;
}

}  // namespace artready
