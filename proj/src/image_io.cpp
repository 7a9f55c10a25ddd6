#include "glanceseg/image_io.hpp"

#include <openssl/evp.h>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace glanceseg {
namespace {

Frame from_bgr(const cv::Mat& bgr) {
    Frame out(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) out.set(x, y, row[x][2], row[x][1], row[x][0]);
    }
    return out;
}

cv::Mat to_bgr(const Frame& frame) {
    cv::Mat m(frame.height(), frame.width(), CV_8UC3);
    for (int y = 0; y < frame.height(); ++y) {
        auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < frame.width(); ++x)
            row[x] = cv::Vec3b(frame.at(x, y, 2), frame.at(x, y, 1), frame.at(x, y, 0));
    }
    return m;
}

cv::Mat to_gray8(const BinaryMask& mask) {
    cv::Mat m(mask.dims().height, mask.dims().width, CV_8UC1, cv::Scalar(0));
    for (const auto& p : mask.pixels()) m.at<std::uint8_t>(p.y, p.x) = 255;
    return m;
}

std::vector<std::uint8_t> encode(const cv::Mat& m) {
    std::vector<std::uint8_t> buf;
    if (!cv::imencode(".png", m, buf)) throw Error(ErrorCode::Io, "png encoding failed");
    return buf;
}

void write_bytes(const std::filesystem::path& path, const cv::Mat& m) {
    if (!cv::imwrite(path.string(), m)) throw Error(ErrorCode::Io, "cannot write image " + path.string());
}

}  // namespace

Frame read_image(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw Error(ErrorCode::Io, "cannot read image " + path.string());
    return from_bgr(m);
}

void write_png(const std::filesystem::path& path, const Frame& frame) { write_bytes(path, to_bgr(frame)); }

std::vector<std::uint8_t> encode_png(const Frame& frame) { return encode(to_bgr(frame)); }

std::vector<std::uint8_t> encode_png_gray8(const BinaryMask& mask) { return encode(to_gray8(mask)); }

Frame decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) throw Error(ErrorCode::Io, "empty image payload");
    const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat m = cv::imdecode(raw, cv::IMREAD_COLOR);
    if (m.empty()) throw Error(ErrorCode::Io, "cannot decode image payload");
    return from_bgr(m);
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw Error(ErrorCode::Io, "cannot read mask " + path.string());
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols));
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(m.cols) + static_cast<std::size_t>(x)] =
                m.at<std::uint8_t>(y, x) != 0 ? 1 : 0;
    return BinaryMask({m.cols, m.rows}, {0, 0, m.cols, m.rows}, std::move(bits));
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) { write_bytes(path, to_gray8(mask)); }

void write_png16(const std::filesystem::path& path, const GrayMap& map) {
    const double lo = map.min(), hi = map.max();
    const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
    cv::Mat m(map.height(), map.width(), CV_16UC1);
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            m.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(std::lround((map.at(x, y) - lo) * scale));
    write_bytes(path, m);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) throw Error(ErrorCode::Parse, "base64 length is not a multiple of 4");
    std::vector<std::uint8_t> out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0) throw Error(ErrorCode::Parse, "invalid base64 payload");
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

}  // namespace glanceseg
