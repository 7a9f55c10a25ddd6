#include "glanceseg/rle.hpp"

#include <string>

namespace glanceseg {

std::vector<std::uint32_t> rle_encode(const BinaryMask& mask) {
    const Size d = mask.dims();
    std::vector<std::uint32_t> counts;
    bool current = false;
    std::uint32_t run = 0;
    for (int x = 0; x < d.width; ++x)
        for (int y = 0; y < d.height; ++y) {
            const bool v = mask.at(x, y);
            if (v != current) {
                counts.push_back(run);
                run = 0;
                current = v;
            }
            ++run;
        }
    counts.push_back(run);
    return counts;
}

BinaryMask rle_decode(std::span<const std::uint32_t> counts, Size dims) {
    if (dims.width <= 0 || dims.height <= 0) throw Error(ErrorCode::Parse, "RLE target dimensions must be positive");
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total != dims.area())
        throw Error(ErrorCode::Parse, "RLE counts sum to " + std::to_string(total) + ", expected " +
                                          std::to_string(dims.area()));
    std::vector<std::uint8_t> bits(dims.area(), 0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i % 2 == 1)
            for (std::size_t k = pos; k < pos + counts[i]; ++k) {
                const std::size_t x = k / static_cast<std::size_t>(dims.height);
                const std::size_t y = k % static_cast<std::size_t>(dims.height);
                bits[y * static_cast<std::size_t>(dims.width) + x] = 1;
            }
        pos += counts[i];
    }
    return BinaryMask(dims, {0, 0, dims.width, dims.height}, std::move(bits));
}

}  // namespace glanceseg
