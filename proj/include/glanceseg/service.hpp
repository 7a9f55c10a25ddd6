#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "glanceseg/config.hpp"

namespace httplib {
class Server;
}

namespace glanceseg {

struct ServiceOptions {
    PipelineConfig config;
    std::string backend = "baseline";
    double backend_timeout_s = 30.0;
    // Gaze inactivity before a processing pass starts.
    int debounce_ms = 300;
    // Session journal directory; empty keeps sessions in memory only.
    std::filesystem::path state_dir;
};

class Session;

/// HTTP session API:
///   POST   /session                       multipart field "image" -> {id, width, height}
///   POST   /session/{id}/gaze             {samples:[{t_ms,x,y,valid}]} -> {accepted_count, version}
///   GET    /session/{id}/result?since=v   {version, status, trace_length, masks, dkf_report, overlay_png_base64}
///   POST   /session/{id}/mask/{k}/verdict {verdict: accept|reject}
///   POST   /session/{id}/finalize         {mask_png_base64, record}; 409 while processing
///   DELETE /session/{id}
class SessionService {
public:
    explicit SessionService(ServiceOptions options);
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    /// Binds to `host`; port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void run();
    void stop();

    std::size_t session_count() const;

private:
    void install_routes();
    std::shared_ptr<Session> find(const std::string& id) const;
    void restore_sessions();

    ServiceOptions options_;
    std::unique_ptr<httplib::Server> server_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace glanceseg
