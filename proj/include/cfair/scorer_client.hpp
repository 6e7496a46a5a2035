#pragma once

// Clients for external sentence scorers. Both transports exchange the same
// messages: request {"id", "text"}, reply {"id", "logprob"} or {"id", "error"}.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cfair/concurrency.hpp"
#include "cfair/error.hpp"
#include "cfair/http.hpp"
#include "cfair/scorer.hpp"

extern char **environ;

namespace cfair {

/// Extracts the log-probability from a protocol reply addressed to `id`.
inline double read_score_reply(const nlohmann::json &reply, const std::string &id) {
    if (!reply.is_object()) throw TransportError("scorer reply is not an object", id);
    if (auto it = reply.find("error"); it != reply.end()) {
        throw TransportError("scorer error: " + (it->is_string() ? it->get<std::string>() : it->dump()), id);
    }
    const auto lp = reply.find("logprob");
    if (lp == reply.end() || !lp->is_number()) throw TransportError("scorer reply lacks numeric 'logprob'", id);
    return lp->get<double>();
}

/// Talks line-delimited JSON to a child process over its stdin/stdout.
/// Requests may be in flight concurrently; replies are matched by id and may
/// arrive in any order.
class StdioScorerClient final : public ScorerBackend {
public:
    explicit StdioScorerClient(std::vector<std::string> command,
                               std::chrono::milliseconds timeout = std::chrono::seconds(60))
        : command_(std::move(command)), timeout_(timeout) {
        if (command_.empty()) throw ValidationError("stdio scorer command is empty");
        spawn();
        reader_ = std::thread([this] { read_loop(); });
    }

    StdioScorerClient(const StdioScorerClient &) = delete;
    StdioScorerClient &operator=(const StdioScorerClient &) = delete;

    ~StdioScorerClient() override {
        {
            std::lock_guard lock(write_mu_);
            if (to_child_ >= 0) ::close(to_child_);
            to_child_ = -1;
        }
        if (reader_.joinable()) reader_.join();
        if (from_child_ >= 0) ::close(from_child_);
        int status = 0;
        if (pid_ > 0) ::waitpid(pid_, &status, 0);
    }

    [[nodiscard]] SentenceScore score(std::string_view text) const override {
        auto fut = submit(text);
        return {std::string(text), await(fut)};
    }

    [[nodiscard]] std::vector<double> score_batch(std::span<const std::string> texts) const override {
        std::vector<std::pair<std::string, std::future<double>>> pending;
        pending.reserve(texts.size());
        for (const auto &t : texts) pending.push_back(submit(t));
        std::vector<double> out;
        out.reserve(texts.size());
        for (auto &p : pending) out.push_back(await(p));
        return out;
    }

    [[nodiscard]] std::string name() const override { return "stdio:" + command_.front(); }

private:
    using Pending = std::pair<std::string, std::future<double>>;

    Pending submit(std::string_view text) const {
        const auto id = "s" + std::to_string(next_id_.fetch_add(1));
        std::promise<double> promise;
        auto fut = promise.get_future();
        {
            std::lock_guard lock(pending_mu_);
            if (closed_) throw TransportError("scorer process has exited", id);
            pending_.emplace(id, std::move(promise));
        }
        const auto line = nlohmann::json{{"id", id}, {"text", std::string(text)}}.dump() + "\n";
        std::lock_guard lock(write_mu_);
        if (!write_all(line)) {
            fail(id, "cannot write to scorer process");
        }
        return {id, std::move(fut)};
    }

    double await(Pending &p) const {
        if (p.second.wait_for(timeout_) != std::future_status::ready) {
            throw TransportError("scorer timed out", p.first);
        }
        return p.second.get();
    }

    bool write_all(const std::string &line) const {
        std::size_t off = 0;
        while (off < line.size()) {
            const auto n = ::write(to_child_, line.data() + off, line.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    void fail(const std::string &id, const std::string &msg) const {
        std::lock_guard lock(pending_mu_);
        auto it = pending_.find(id);
        if (it == pending_.end()) return;
        it->second.set_exception(std::make_exception_ptr(TransportError(msg, id)));
        pending_.erase(it);
    }

    void fail_all(const std::string &msg) {
        std::lock_guard lock(pending_mu_);
        closed_ = true;
        for (auto &[id, promise] : pending_) promise.set_exception(std::make_exception_ptr(TransportError(msg, id)));
        pending_.clear();
    }

    void dispatch(const std::string &line) {
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &) {
            fail_all("malformed scorer reply: " + line);
            return;
        }
        const auto id_it = reply.is_object() ? reply.find("id") : reply.end();
        if (id_it == reply.end() || !id_it->is_string()) {
            fail_all("scorer reply without id: " + line);
            return;
        }
        const auto id = id_it->get<std::string>();
        std::lock_guard lock(pending_mu_);
        auto it = pending_.find(id);
        if (it == pending_.end()) return;  // late reply for an abandoned request
        try {
            it->second.set_value(read_score_reply(reply, id));
        } catch (...) {
            it->second.set_exception(std::current_exception());
        }
        pending_.erase(it);
    }

    void read_loop() {
        std::string buf;
        char chunk[4096];
        for (;;) {
            const auto n = ::read(from_child_, chunk, sizeof chunk);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) break;
            buf.append(chunk, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = buf.find('\n')) != std::string::npos) {
                auto line = buf.substr(0, nl);
                buf.erase(0, nl + 1);
                if (line.find_first_not_of(" \t\r") != std::string::npos) dispatch(line);
            }
        }
        fail_all("scorer process closed its output");
    }

    void spawn() {
        int in_pipe[2];
        int out_pipe[2];
        if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw TransportError("pipe() failed");
        ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
        ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
        posix_spawn_file_actions_addclose(&actions, in_pipe[0]);
        posix_spawn_file_actions_addclose(&actions, out_pipe[1]);
        std::vector<char *> argv;
        for (auto &a : command_) argv.push_back(a.data());
        argv.push_back(nullptr);
        const int rc = ::posix_spawnp(&pid_, argv[0], &actions, nullptr, argv.data(), environ);
        posix_spawn_file_actions_destroy(&actions);
        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        if (rc != 0) {
            ::close(in_pipe[1]);
            ::close(out_pipe[0]);
            pid_ = -1;
            throw TransportError("cannot start scorer '" + command_.front() + "': " + std::strerror(rc));
        }
        // a dead child must surface as EPIPE, not kill us
        ::signal(SIGPIPE, SIG_IGN);
        to_child_ = in_pipe[1];
        from_child_ = out_pipe[0];
    }

    std::vector<std::string> command_;
    std::chrono::milliseconds timeout_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::thread reader_;
    mutable std::atomic<std::uint64_t> next_id_{0};
    mutable std::mutex write_mu_;
    mutable std::mutex pending_mu_;
    mutable std::unordered_map<std::string, std::promise<double>> pending_;
    bool closed_ = false;
};

/// Client for `POST /score` and `POST /score_batch`.
class HttpScorerClient final : public ScorerBackend {
public:
    explicit HttpScorerClient(const std::string &url, http::ClientOptions opts = {}, RetryPolicy retry = {})
        : endpoint_(http::parse_endpoint(url)), opts_(std::move(opts)), retry_(retry) {}

    [[nodiscard]] SentenceScore score(std::string_view text) const override {
        const auto id = "h" + std::to_string(next_id_.fetch_add(1));
        const nlohmann::json req{{"id", id}, {"text", std::string(text)}};
        const auto reply = with_retries(retry_, [&] { return http::post_json(endpoint_, "/score", req, opts_, id); });
        check_id(reply, id);
        return {std::string(text), read_score_reply(reply, id)};
    }

    [[nodiscard]] std::vector<double> score_batch(std::span<const std::string> texts) const override {
        if (texts.empty()) return {};
        const auto base = next_id_.fetch_add(texts.size());
        nlohmann::json items = nlohmann::json::array();
        std::unordered_map<std::string, std::size_t> slot;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const auto id = "h" + std::to_string(base + i);
            slot.emplace(id, i);
            items.push_back({{"id", id}, {"text", texts[i]}});
        }
        const auto batch_id = "h" + std::to_string(base) + "+" + std::to_string(texts.size());
        const nlohmann::json req{{"items", items}};
        const auto reply =
            with_retries(retry_, [&] { return http::post_json(endpoint_, "/score_batch", req, opts_, batch_id); });
        const auto it = reply.is_object() ? reply.find("items") : reply.end();
        if (it == reply.end() || !it->is_array()) throw TransportError("batch reply lacks 'items'", batch_id);
        std::vector<double> out(texts.size());
        std::vector<bool> seen(texts.size(), false);
        for (const auto &r : *it) {
            const auto id_it = r.is_object() ? r.find("id") : r.end();
            if (id_it == r.end() || !id_it->is_string()) throw TransportError("batch item without id", batch_id);
            const auto s = slot.find(id_it->get<std::string>());
            if (s == slot.end()) throw TransportError("batch reply has unknown id", id_it->get<std::string>());
            out[s->second] = read_score_reply(r, s->first);
            seen[s->second] = true;
        }
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (!seen[i]) throw TransportError("batch reply missing item", "h" + std::to_string(base + i));
        }
        return out;
    }

    [[nodiscard]] std::string name() const override { return "http:" + endpoint_.origin + endpoint_.path; }

private:
    static void check_id(const nlohmann::json &reply, const std::string &id) {
        if (reply.is_object() && reply.contains("id") && reply["id"] != id) {
            throw TransportError("reply id does not match request", id);
        }
    }

    http::Endpoint endpoint_;
    http::ClientOptions opts_;
    RetryPolicy retry_;
    mutable std::atomic<std::uint64_t> next_id_{0};
};

}  // namespace cfair
