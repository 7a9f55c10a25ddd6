#include "glanceseg/service.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "glanceseg/external_backend.hpp"
#include "glanceseg/gaze.hpp"
#include "glanceseg/image_io.hpp"
#include "glanceseg/pipeline.hpp"
#include "glanceseg/rle.hpp"

namespace glanceseg {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string new_session_id() {
    static std::mutex m;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(m);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::string mask_key(const BinaryMask& mask) {
    std::string key;
    for (auto c : rle_encode(mask)) key += std::to_string(c) + ',';
    return key;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    reply(res, status, extra);
}

void write_file(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace

/// One annotation session: a single ordered gaze writer and a worker that runs debounced passes.
class Session {
public:
    struct Published {
        std::uint64_t version = 0;
        std::size_t trace_length = 0;
        std::vector<CandidateMask> accepted;
        std::vector<DkfRecord> report;
        std::string overlay_png_base64;
    };

    struct IngestResult {
        int status = 200;
        json body;
    };

    Session(std::string id, Frame frame, std::string name, const ServiceOptions& options, fs::path journal)
        : id_(std::move(id)),
          name_(std::move(name)),
          frame_(std::move(frame)),
          options_(options),
          journal_(std::move(journal)),
          accumulator_(frame_.size(), options.config.sigma_px),
          created_(std::chrono::system_clock::now()) {
        backend_ = make_backend(options_.backend, options_.backend_timeout_s);
        trace_.image_id = name_;
        if (!journal_.empty()) {
            fs::create_directories(journal_);
            write_png(journal_ / "image.png", frame_);
            write_file(journal_ / "meta.json", json{{"name", name_}}.dump());
        }
        worker_ = std::thread([this] { worker_loop(); });
    }

    ~Session() { stop(); }

    const std::string& id() const { return id_; }

    void stop() {
        {
            std::lock_guard lock(mutex_);
            if (stopping_) return;
            stopping_ = true;
        }
        cv_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    /// Restores a journaled trace and verdicts; processing resumes after the debounce.
    void restore(const GazeTrace& trace, const std::map<std::string, bool>& verdicts) {
        std::lock_guard lock(mutex_);
        trace_.samples = trace.samples;
        accumulator_.add(trace_.samples);
        verdicts_ = verdicts;
        if (!trace_.samples.empty()) {
            dirty_ = true;
            last_gaze_ = Clock::now();
        }
        cv_.notify_all();
    }

    IngestResult add_gaze(const json& body) {
        if (!body.is_object() || !body.contains("samples") || !body["samples"].is_array())
            return {400, {{"error", "body must be an object with a samples array"}}};
        std::vector<GazeSample> batch;
        std::lock_guard lock(mutex_);
        double last_t = trace_.samples.empty() ? -std::numeric_limits<double>::infinity() : trace_.samples.back().t_ms;
        const auto& arr = body["samples"];
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& s = arr[i];
            auto bad = [&](const std::string& why) {
                return IngestResult{422, {{"error", why}, {"index", i}}};
            };
            if (!s.is_object() || !s.contains("t_ms") || !s.contains("x") || !s.contains("y") ||
                !s["t_ms"].is_number() || !s["x"].is_number() || !s["y"].is_number())
                return bad("sample needs numeric t_ms, x and y");
            GazeSample g{s["t_ms"].get<double>(), s["x"].get<double>(), s["y"].get<double>(), true};
            if (s.contains("valid")) {
                if (!s["valid"].is_boolean()) return bad("valid must be a boolean");
                g.valid = s["valid"].get<bool>();
            }
            if (!std::isfinite(g.t_ms) || !std::isfinite(g.x) || !std::isfinite(g.y)) return bad("non-finite value");
            if (g.t_ms < last_t) return bad("t_ms decreases");
            if (g.valid && !inside_frame(g, frame_.size())) return bad("sample outside image bounds");
            last_t = g.t_ms;
            batch.push_back(g);
        }
        accumulator_.add(batch);
        trace_.samples.insert(trace_.samples.end(), batch.begin(), batch.end());
        if (!batch.empty()) {
            dirty_ = true;
            last_gaze_ = Clock::now();
            journal_trace();
        }
        cv_.notify_all();
        return {200, {{"accepted_count", batch.size()}, {"version", published_->version}, {"trace_length", trace_.samples.size()}}};
    }

    json result_json(std::optional<std::uint64_t> since) {
        std::unique_lock lock(mutex_);
        const auto pub = published_;
        const std::string status = status_locked();
        json out = {{"version", pub->version}, {"status", status}, {"trace_length", pub->trace_length},
                    {"received_length", trace_.samples.size()}};
        if (!last_error_.empty()) out["error"] = last_error_;
        if (since && *since >= pub->version) {
            out["changed"] = false;
            return out;
        }
        auto verdicts = verdicts_;
        lock.unlock();
        out["changed"] = true;
        out["size"] = {frame_.width(), frame_.height()};
        json masks = json::array();
        for (std::size_t k = 0; k < pub->accepted.size(); ++k) {
            json m = mask_to_json(pub->accepted[k].mask, pub->accepted[k].confidence);
            m["index"] = k;
            auto it = verdicts.find(mask_key(pub->accepted[k].mask));
            m["verdict"] = it == verdicts.end() ? json(nullptr) : json(it->second ? "accept" : "reject");
            masks.push_back(std::move(m));
        }
        out["masks"] = std::move(masks);
        json report = json::array();
        for (const auto& r : pub->report) report.push_back(json::parse(dkf_record_json(r)));
        out["dkf_report"] = std::move(report);
        out["overlay_png_base64"] = pub->overlay_png_base64;
        return out;
    }

    IngestResult verdict(std::size_t k, const json& body) {
        if (!body.is_object() || !body.contains("verdict") || !body["verdict"].is_string())
            return {400, {{"error", "body must carry verdict accept|reject"}}};
        const std::string v = body["verdict"].get<std::string>();
        if (v != "accept" && v != "reject") return {400, {{"error", "verdict must be accept or reject"}}};
        std::lock_guard lock(mutex_);
        if (body.contains("version") && body["version"] != published_->version)
            return {409, {{"error", "verdict refers to a stale result version"}, {"version", published_->version}}};
        if (k >= published_->accepted.size()) return {404, {{"error", "no mask with that index"}}};
        verdicts_[mask_key(published_->accepted[k].mask)] = v == "accept";
        journal_verdicts();
        return {200, {{"index", k}, {"verdict", v}, {"version", published_->version}}};
    }

    IngestResult finalize() {
        std::lock_guard lock(mutex_);
        if (running_ || dirty_) return {409, {{"error", "session is processing"}, {"status", "processing"}}};
        const auto pub = published_;
        std::vector<CandidateMask> kept;
        json masks = json::array();
        for (std::size_t k = 0; k < pub->accepted.size(); ++k) {
            const auto& m = pub->accepted[k];
            auto it = verdicts_.find(mask_key(m.mask));
            const std::string verdict = it == verdicts_.end() ? "pending" : (it->second ? "accept" : "reject");
            if (verdict != "reject") kept.push_back(m);
            const BBox& b = m.mask.bbox();
            masks.push_back({{"index", k}, {"bbox", {b.x, b.y, b.width, b.height}}, {"area", m.mask.area()},
                             {"score", m.confidence}, {"verdict", verdict}});
        }
        const BinaryMask final_mask = union_mask(kept, frame_.size());
        const double elapsed = std::chrono::duration<double>(std::chrono::system_clock::now() - created_).count();
        json record = {{"session", id_},
                       {"image", name_},
                       {"width", frame_.width()},
                       {"height", frame_.height()},
                       {"version", pub->version},
                       {"trace_length", pub->trace_length},
                       {"elapsed_s", elapsed},
                       {"mask_area", final_mask.area()},
                       {"masks", std::move(masks)}};
        const std::string png = base64_encode(encode_png_gray8(final_mask));
        if (!journal_.empty()) write_file(journal_ / "record.json", record.dump(2));
        return {200, {{"mask_png_base64", png}, {"record", std::move(record)}}};
    }

private:
    std::string status_locked() const {
        if (running_ || dirty_) return "processing";
        return published_->version > 0 ? "ready" : "idle";
    }

    void journal_trace() {
        if (journal_.empty()) return;
        std::ostringstream out;
        write_gaze_csv(out, trace_);
        write_file(journal_ / "trace.csv", out.str());
    }

    void journal_verdicts() {
        if (journal_.empty()) return;
        write_file(journal_ / "verdicts.json", json(verdicts_).dump());
    }

    void worker_loop() {
        const auto debounce = std::chrono::milliseconds(options_.debounce_ms);
        std::unique_lock lock(mutex_);
        while (true) {
            cv_.wait(lock, [&] { return stopping_ || dirty_; });
            if (stopping_) return;
            const auto due = last_gaze_ + debounce;
            if (Clock::now() < due) {
                cv_.wait_until(lock, due, [&] { return stopping_; });
                continue;
            }
            dirty_ = false;
            running_ = true;
            const GazeMap gaze = accumulator_.snapshot();
            const std::size_t length = trace_.samples.size();
            lock.unlock();

            auto next = std::make_shared<Published>();
            next->trace_length = length;
            std::string error;
            try {
                if (gaze.deposited() > 0) {
                    const PipelineResult r = run_pipeline(frame_, gaze, options_.config, *backend_);
                    next->accepted = r.accepted;
                    next->report = r.report;
                    next->overlay_png_base64 = base64_encode(encode_png(render_overlay(frame_, r)));
                } else {
                    next->overlay_png_base64 = base64_encode(encode_png(frame_));
                }
            } catch (const std::exception& e) {
                error = e.what();
            }

            lock.lock();
            running_ = false;
            if (error.empty()) {
                next->version = published_->version + 1;
                published_ = next;
                last_error_.clear();
                if (!journal_.empty()) {
                    json masks = json::array();
                    for (const auto& m : next->accepted) masks.push_back(mask_to_json(m.mask, m.confidence));
                    write_file(journal_ / "result.json",
                               json{{"version", next->version}, {"trace_length", length}, {"masks", masks}}.dump());
                }
            } else {
                last_error_ = error;
            }
            cv_.notify_all();
        }
    }

    std::string id_;
    std::string name_;
    Frame frame_;
    const ServiceOptions& options_;
    fs::path journal_;
    std::unique_ptr<SegmenterBackend> backend_;

    std::mutex mutex_;
    std::condition_variable cv_;
    GazeAccumulator accumulator_;
    GazeTrace trace_;
    std::map<std::string, bool> verdicts_;
    std::shared_ptr<const Published> published_ = std::make_shared<Published>();
    std::string last_error_;
    Clock::time_point last_gaze_{};
    bool dirty_ = false;
    bool running_ = false;
    bool stopping_ = false;
    std::chrono::system_clock::time_point created_;
    std::thread worker_;
};

SessionService::SessionService(ServiceOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    options_.config.validate();
    if (options_.debounce_ms < 0) throw Error(ErrorCode::InvalidParameter, "debounce must be non-negative");
    // Fail early on an unusable backend specification.
    make_backend(options_.backend, options_.backend_timeout_s);
    install_routes();
    if (!options_.state_dir.empty()) restore_sessions();
}

SessionService::~SessionService() {
    stop();
    std::map<std::string, std::shared_ptr<Session>> sessions;
    {
        std::lock_guard lock(mutex_);
        sessions.swap(sessions_);
    }
    for (auto& [id, s] : sessions) s->stop();
}

int SessionService::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

void SessionService::run() { server_->listen_after_bind(); }

void SessionService::stop() {
    if (server_) server_->stop();
}

std::size_t SessionService::session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

std::shared_ptr<Session> SessionService::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void SessionService::restore_sessions() {
    if (!fs::is_directory(options_.state_dir)) return;
    for (const auto& entry : fs::directory_iterator(options_.state_dir)) {
        const fs::path dir = entry.path();
        if (!entry.is_directory() || !fs::exists(dir / "image.png")) continue;
        try {
            std::string name = dir.filename().string();
            if (fs::exists(dir / "meta.json")) {
                std::ifstream in(dir / "meta.json");
                name = json::parse(in).value("name", name);
            }
            auto session = std::make_shared<Session>(dir.filename().string(), read_image(dir / "image.png"), name,
                                                     options_, dir);
            GazeTrace trace;
            if (fs::exists(dir / "trace.csv")) trace = read_gaze_csv(dir / "trace.csv");
            std::map<std::string, bool> verdicts;
            if (fs::exists(dir / "verdicts.json")) {
                std::ifstream in(dir / "verdicts.json");
                verdicts = json::parse(in).get<std::map<std::string, bool>>();
            }
            session->restore(trace, verdicts);
            std::lock_guard lock(mutex_);
            sessions_[session->id()] = session;
        } catch (const std::exception& e) {
            std::cerr << "glanceseg: cannot restore session " << dir << ": " << e.what() << '\n';
        }
    }
}

void SessionService::install_routes() {
    auto& srv = *server_;

    srv.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
        if (!req.has_file("image")) return reply_error(res, 400, "multipart field 'image' is required");
        const auto file = req.get_file_value("image");
        Frame frame;
        try {
            frame = decode_image(std::span(reinterpret_cast<const std::uint8_t*>(file.content.data()), file.content.size()));
        } catch (const Error& e) {
            return reply_error(res, 400, e.what());
        }
        const int width = frame.width(), height = frame.height();
        const std::string id = new_session_id();
        const std::string name = file.filename.empty() ? id : fs::path(file.filename).stem().string();
        const fs::path journal = options_.state_dir.empty() ? fs::path() : options_.state_dir / id;
        std::shared_ptr<Session> session;
        try {
            session = std::make_shared<Session>(id, std::move(frame), name, options_, journal);
        } catch (const std::exception& e) {
            return reply_error(res, 500, e.what());
        }
        {
            std::lock_guard lock(mutex_);
            sessions_[id] = session;
        }
        reply(res, 201, {{"id", id}, {"width", width}, {"height", height}});
    });

    srv.Post(R"(/session/([0-9a-f]+)/gaze)", [this](const httplib::Request& req, httplib::Response& res) {
        auto s = find(req.matches[1]);
        if (!s) return reply_error(res, 404, "unknown session");
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            return reply_error(res, 400, std::string("malformed JSON: ") + e.what());
        }
        auto r = s->add_gaze(body);
        reply(res, r.status, r.body);
    });

    srv.Get(R"(/session/([0-9a-f]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
        auto s = find(req.matches[1]);
        if (!s) return reply_error(res, 404, "unknown session");
        std::optional<std::uint64_t> since;
        if (req.has_param("since")) {
            try {
                since = std::stoull(req.get_param_value("since"));
            } catch (const std::exception&) {
                return reply_error(res, 400, "since must be a non-negative integer");
            }
        }
        reply(res, 200, s->result_json(since));
    });

    srv.Post(R"(/session/([0-9a-f]+)/mask/(\d+)/verdict)", [this](const httplib::Request& req, httplib::Response& res) {
        auto s = find(req.matches[1]);
        if (!s) return reply_error(res, 404, "unknown session");
        json body;
        try {
            body = json::parse(req.body);
        } catch (const json::exception& e) {
            return reply_error(res, 400, std::string("malformed JSON: ") + e.what());
        }
        std::size_t k = 0;
        try {
            k = std::stoull(req.matches[2]);
        } catch (const std::exception&) {
            return reply_error(res, 404, "no mask with that index");
        }
        auto r = s->verdict(k, body);
        reply(res, r.status, r.body);
    });

    srv.Post(R"(/session/([0-9a-f]+)/finalize)", [this](const httplib::Request& req, httplib::Response& res) {
        auto s = find(req.matches[1]);
        if (!s) return reply_error(res, 404, "unknown session");
        auto r = s->finalize();
        reply(res, r.status, r.body);
    });

    srv.Delete(R"(/session/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::shared_ptr<Session> s;
        {
            std::lock_guard lock(mutex_);
            auto it = sessions_.find(req.matches[1]);
            if (it != sessions_.end()) {
                s = it->second;
                sessions_.erase(it);
            }
        }
        if (!s) return reply_error(res, 404, "unknown session");
        s->stop();
        if (!options_.state_dir.empty()) {
            std::error_code ec;
            fs::remove_all(options_.state_dir / s->id(), ec);
        }
        reply(res, 200, {{"deleted", s->id()}});
    });
}

}  // namespace glanceseg
