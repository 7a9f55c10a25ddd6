#include "glanceseg/external_backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <limits>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "glanceseg/image_io.hpp"
#include "glanceseg/rle.hpp"

namespace glanceseg {
namespace {

constexpr std::uint32_t kMaxFrameBytes = 256u * 1024u * 1024u;

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return static_cast<int>(std::clamp<long long>(left, 0, std::numeric_limits<int>::max()));
}

void write_all(int fd, const std::uint8_t* data, std::size_t n, Clock::time_point deadline) {
    while (n > 0) {
        pollfd p{fd, POLLOUT, 0};
        const int r = ::poll(&p, 1, remaining_ms(deadline));
        if (r == 0) throw Error(ErrorCode::Timeout, "segmenter adapter did not accept the request in time");
        if (r < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::Backend, std::string("poll failed: ") + std::strerror(errno));
        }
        const ssize_t w = ::write(fd, data, n);
        if (w < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw Error(ErrorCode::Backend, std::string("segmenter adapter pipe closed: ") + std::strerror(errno));
        }
        data += w;
        n -= static_cast<std::size_t>(w);
    }
}

void read_exact(int fd, std::uint8_t* data, std::size_t n, Clock::time_point deadline) {
    while (n > 0) {
        pollfd p{fd, POLLIN, 0};
        const int r = ::poll(&p, 1, remaining_ms(deadline));
        if (r == 0) throw Error(ErrorCode::Timeout, "segmenter adapter did not reply in time");
        if (r < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::Backend, std::string("poll failed: ") + std::strerror(errno));
        }
        const ssize_t got = ::read(fd, data, n);
        if (got == 0) throw Error(ErrorCode::Backend, "segmenter adapter closed its output");
        if (got < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw Error(ErrorCode::Backend, std::string("read failed: ") + std::strerror(errno));
        }
        data += got;
        n -= static_cast<std::size_t>(got);
    }
}

json parse_reply(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Backend, std::string("malformed adapter reply: ") + e.what());
    }
}

std::optional<CandidateMask> decode_entry(const json& entry, Size dims, PixelPoint prompt) {
    if (entry.is_null()) return std::nullopt;
    const json* best = &entry;
    if (entry.is_array()) {
        // Several masks for one prompt: keep the top score, earliest on ties.
        best = nullptr;
        for (const auto& m : entry)
            if (!best || m.at("score").get<double>() > best->at("score").get<double>()) best = &m;
        if (!best) return std::nullopt;
    }
    const auto counts = best->at("rle_counts").get<std::vector<std::uint32_t>>();
    const double score = best->at("score").get<double>();
    if (!std::isfinite(score)) throw Error(ErrorCode::Backend, "adapter returned a non-finite score");
    BinaryMask mask = rle_decode(counts, dims);
    if (mask.empty()) return std::nullopt;
    if (best->contains("bbox")) {
        const auto b = best->at("bbox").get<std::vector<int>>();
        if (b.size() != 4 || BBox{b[0], b[1], b[2], b[3]} != mask.bbox())
            throw Error(ErrorCode::Backend, "adapter bbox does not match its rle_counts");
    }
    return CandidateMask{std::move(mask), std::clamp(score, 0.0, 1.0), prompt};
}

}  // namespace

std::vector<std::uint8_t> frame_message(const json& message) {
    const std::string body = message.dump();
    if (body.size() > kMaxFrameBytes) throw Error(ErrorCode::InvalidParameter, "message exceeds frame limit");
    const auto n = static_cast<std::uint32_t>(body.size());
    std::vector<std::uint8_t> out{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                                  static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::uint32_t frame_length(const std::uint8_t header[4]) {
    const std::uint32_t n = (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) |
                            (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
    if (n > kMaxFrameBytes) throw Error(ErrorCode::Parse, "frame length " + std::to_string(n) + " exceeds limit");
    return n;
}

HttpTransport::HttpTransport(std::string host, int port) : host_(std::move(host)), port_(port) {
    if (port <= 0 || port > 65535) throw Error(ErrorCode::InvalidParameter, "invalid adapter port");
}

json HttpTransport::call(const json& request, double timeout_s) {
    httplib::Client client(host_, port_);
    const auto usec = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);
    const auto start = Clock::now();
    auto res = client.Post("/rpc", request.dump(), "application/json");
    if (!res) {
        const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
        if (res.error() == httplib::Error::ConnectionTimeout || elapsed >= timeout_s * 0.95)
            throw Error(ErrorCode::Timeout, "segmenter adapter at " + host_ + ":" + std::to_string(port_) + " timed out");
        throw Error(ErrorCode::Backend, "segmenter adapter request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200)
        throw Error(ErrorCode::Backend, "segmenter adapter returned HTTP " + std::to_string(res->status));
    return parse_reply(res->body);
}

StdioTransport::StdioTransport(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0) throw Error(ErrorCode::Backend, "pipe() failed");
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw Error(ErrorCode::Backend, "pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw Error(ErrorCode::Backend, "fork() failed");
    if (pid_ == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::close(out_pipe[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

StdioTransport::~StdioTransport() { shutdown(); }

void StdioTransport::shutdown() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        // Give a well-behaved adapter a moment to exit on EOF before killing it.
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(2000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

json StdioTransport::call(const json& request, double timeout_s) {
    if (pid_ <= 0) throw Error(ErrorCode::Backend, "segmenter adapter process is not running");
    const auto deadline = Clock::now() + std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
    try {
        const auto bytes = frame_message(request);
        write_all(to_child_, bytes.data(), bytes.size(), deadline);
        std::uint8_t header[4];
        read_exact(from_child_, header, 4, deadline);
        std::string body(frame_length(header), '\0');
        read_exact(from_child_, reinterpret_cast<std::uint8_t*>(body.data()), body.size(), deadline);
        return parse_reply(body);
    } catch (const Error& e) {
        // The stream position is unknown after a failure; the adapter cannot be reused.
        shutdown();
        throw;
    }
}

ExternalBackend::ExternalBackend(std::unique_ptr<Transport> transport, double timeout_s)
    : transport_(std::move(transport)), timeout_s_(timeout_s) {
    if (!(timeout_s > 0)) throw Error(ErrorCode::InvalidParameter, "backend timeout must be positive");
}

json ExternalBackend::request(json message) {
    const std::uint64_t id = next_request_id_++;
    message["request_id"] = id;
    json reply = transport_->call(message, timeout_s_);
    if (!reply.is_object() || !reply.contains("type"))
        throw Error(ErrorCode::Backend, "adapter reply is not a message envelope");
    if (reply["type"] == "error")
        throw Error(ErrorCode::Backend, "segmenter adapter error " + reply.value("code", std::string("unknown")) + ": " +
                                            reply.value("message", std::string()));
    if (!reply.contains("request_id") || reply["request_id"] != id)
        throw Error(ErrorCode::Backend, "adapter reply carries the wrong request_id");
    return reply;
}

void ExternalBackend::ensure_hello() {
    if (have_info_) return;
    const json reply = request({{"type", "hello"}});
    try {
        info_ = {reply.at("name").get<std::string>(), reply.at("version").get<std::string>(),
                 reply.at("max_prompts").get<int>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Backend, std::string("malformed hello reply: ") + e.what());
    }
    have_info_ = true;
}

BackendInfo ExternalBackend::info() const {
    auto* self = const_cast<ExternalBackend*>(this);
    std::lock_guard lock(mutex_);
    self->ensure_hello();
    return info_;
}

std::vector<CandidateMask> ExternalBackend::segment(const Frame& roi, std::span<const PixelPoint> prompts) {
    std::vector<CandidateMask> out;
    if (prompts.empty()) return out;
    std::lock_guard lock(mutex_);
    ensure_hello();
    const std::string id = image_id(roi);
    if (id != current_image_) {
        request({{"type", "set_image"}, {"id", id}, {"png_base64", base64_encode(encode_png(roi))}});
        current_image_ = id;
    }
    const std::size_t batch = info_.max_prompts > 0 ? static_cast<std::size_t>(info_.max_prompts) : prompts.size();
    for (std::size_t start = 0; start < prompts.size(); start += batch) {
        const std::size_t end = std::min(prompts.size(), start + batch);
        json points = json::array();
        for (std::size_t i = start; i < end; ++i) points.push_back({{"x", prompts[i].x}, {"y", prompts[i].y}});
        const json reply = request({{"type", "segment"}, {"image_id", id}, {"points", std::move(points)}});
        try {
            const auto& masks = reply.at("masks");
            if (!masks.is_array() || masks.size() != end - start)
                throw Error(ErrorCode::Backend, "adapter must return one mask entry per point");
            for (std::size_t i = start; i < end; ++i)
                if (auto m = decode_entry(masks[i - start], roi.size(), prompts[i])) out.push_back(std::move(*m));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::Backend, std::string("malformed segment reply: ") + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Parse) throw Error(ErrorCode::Backend, e.what());
            throw;
        }
    }
    return out;
}

std::unique_ptr<SegmenterBackend> make_external_backend(const std::string& endpoint, double timeout_s) {
    if (endpoint.starts_with("stdio:")) {
        const std::string cmd = endpoint.substr(6);
        if (cmd.empty()) throw Error(ErrorCode::InvalidParameter, "stdio endpoint needs a command");
        return std::make_unique<ExternalBackend>(std::make_unique<StdioTransport>(cmd), timeout_s);
    }
    if (endpoint.starts_with("http://")) {
        std::string rest = endpoint.substr(7);
        if (!rest.empty() && rest.back() == '/') rest.pop_back();
        const auto colon = rest.rfind(':');
        if (colon == std::string::npos || colon == 0)
            throw Error(ErrorCode::InvalidParameter, "http endpoint must be http://host:port");
        int port = 0;
        try {
            std::size_t used = 0;
            port = std::stoi(rest.substr(colon + 1), &used);
            if (used != rest.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidParameter, "invalid port in endpoint '" + endpoint + "'");
        }
        return std::make_unique<ExternalBackend>(std::make_unique<HttpTransport>(rest.substr(0, colon), port), timeout_s);
    }
    throw Error(ErrorCode::InvalidParameter, "unknown external endpoint '" + endpoint + "'");
}

std::string image_id(const Frame& frame) {
    // FNV-1a over dimensions and pixels.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint8_t b) {
        h ^= b;
        h *= 1099511628211ull;
    };
    for (int v : {frame.width(), frame.height()})
        for (int s = 0; s < 32; s += 8) mix(static_cast<std::uint8_t>(v >> s));
    for (auto b : frame.pixels()) mix(b);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json mask_to_json(const BinaryMask& mask, double score) {
    const BBox& b = mask.bbox();
    return {{"rle_counts", rle_encode(mask)}, {"bbox", {b.x, b.y, b.width, b.height}}, {"score", score}};
}

json SegmenterAdapter::handle(const json& message) {
    const json id = message.is_object() && message.contains("request_id") ? message["request_id"] : json(nullptr);
    auto error = [&](const std::string& code, const std::string& text) {
        return json{{"type", "error"}, {"request_id", id}, {"code", code}, {"message", text}};
    };
    try {
        const std::string type = message.at("type").get<std::string>();
        if (type == "hello") {
            const BackendInfo info = backend_.info();
            return {{"type", "hello"}, {"request_id", id}, {"name", info.name}, {"version", info.version},
                    {"max_prompts", info.max_prompts}};
        }
        if (type == "set_image") {
            Frame frame = decode_image(base64_decode(message.at("png_base64").get<std::string>()));
            std::lock_guard lock(mutex_);
            const std::string key = message.at("id").get<std::string>();
            std::erase_if(images_, [&](const auto& e) { return e.first == key; });
            images_.emplace_back(key, std::move(frame));
            if (images_.size() > 8) images_.erase(images_.begin());
            return {{"type", "ack"}, {"request_id", id}};
        }
        if (type == "segment") {
            const std::string key = message.at("image_id").get<std::string>();
            Frame frame;
            {
                std::lock_guard lock(mutex_);
                auto it = std::find_if(images_.begin(), images_.end(), [&](const auto& e) { return e.first == key; });
                if (it == images_.end()) return error("unknown_image", "no image with id " + key);
                frame = it->second;
            }
            std::vector<PixelPoint> points;
            for (const auto& p : message.at("points")) {
                PixelPoint q{p.at("x").get<int>(), p.at("y").get<int>()};
                if (q.x < 0 || q.y < 0 || q.x >= frame.width() || q.y >= frame.height())
                    return error("bad_point", "point outside image");
                points.push_back(q);
            }
            json masks = json::array();
            // One backend call per point keeps the reply aligned with the request order.
            for (const auto& p : points) {
                const auto result = backend_.segment(frame, std::span<const PixelPoint>(&p, 1));
                if (result.empty())
                    masks.push_back(nullptr);
                else
                    masks.push_back(mask_to_json(result.front().mask, result.front().confidence));
            }
            return {{"type", "masks"}, {"request_id", id}, {"masks", std::move(masks)}};
        }
        return error("unknown_type", "unsupported message type " + type);
    } catch (const std::exception& e) {
        return error("bad_request", e.what());
    }
}

}  // namespace glanceseg
