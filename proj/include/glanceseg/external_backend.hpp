#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "glanceseg/segmenter.hpp"

namespace glanceseg {

using json = nlohmann::json;

/// Carries one request envelope to the adapter and returns its reply.
class Transport {
public:
    virtual ~Transport() = default;
    /// Throws Timeout when no reply arrives within `timeout_s`, Backend on transport failure.
    virtual json call(const json& request, double timeout_s) = 0;
};

/// POST /rpc with a JSON body on a localhost adapter.
class HttpTransport final : public Transport {
public:
    HttpTransport(std::string host, int port);
    json call(const json& request, double timeout_s) override;

private:
    std::string host_;
    int port_;
};

/// Child process speaking length-prefixed frames (4-byte big-endian length, then JSON) on stdin/stdout.
class StdioTransport final : public Transport {
public:
    explicit StdioTransport(const std::string& command);
    ~StdioTransport() override;
    StdioTransport(const StdioTransport&) = delete;
    StdioTransport& operator=(const StdioTransport&) = delete;

    json call(const json& request, double timeout_s) override;

private:
    void shutdown();

    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
};

/// Length-prefix framing shared by the stdio client and adapters.
std::vector<std::uint8_t> frame_message(const json& message);
/// Parses a big-endian length prefix; throws Parse on oversize frames.
std::uint32_t frame_length(const std::uint8_t header[4]);

/// Client for the external segmenter protocol. The ROI image is sent once (set_image) and prompts
/// are batched up to the adapter's max_prompts. Calls are serialized over one transport.
class ExternalBackend final : public SegmenterBackend {
public:
    ExternalBackend(std::unique_ptr<Transport> transport, double timeout_s);

    BackendInfo info() const override;
    std::vector<CandidateMask> segment(const Frame& roi, std::span<const PixelPoint> prompts) override;

private:
    json request(json message);
    void ensure_hello();

    std::unique_ptr<Transport> transport_;
    double timeout_s_;
    mutable std::mutex mutex_;
    std::uint64_t next_request_id_ = 1;
    bool have_info_ = false;
    BackendInfo info_;
    std::string current_image_;
};

/// `http://host:port` or `stdio:<shell command>`.
std::unique_ptr<SegmenterBackend> make_external_backend(const std::string& endpoint, double timeout_s);

/// Stable identifier of a ROI image for set_image/segment.
std::string image_id(const Frame& frame);

/// Adapter side: answers one protocol message using `backend`. Never throws; failures become
/// error messages. `images` caches decoded set_image payloads by id.
class SegmenterAdapter {
public:
    explicit SegmenterAdapter(SegmenterBackend& backend) : backend_(backend) {}
    json handle(const json& message);

private:
    SegmenterBackend& backend_;
    std::mutex mutex_;
    std::vector<std::pair<std::string, Frame>> images_;
};

/// Wire form of one mask: rle_counts, bbox [x,y,w,h] and score.
json mask_to_json(const BinaryMask& mask, double score);

}  // namespace glanceseg
