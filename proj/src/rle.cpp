#include "quickseg/rle.hpp"

#include "quickseg/errors.hpp"

namespace quickseg {

RleMask rle_encode(const BinaryMask& m) {
    RleMask r{m.width(), m.height(), {}};
    bool current = false;
    std::uint32_t run = 0;
    for (int x = 0; x < m.width(); ++x) {
        for (int y = 0; y < m.height(); ++y) {
            const bool v = m.get(x, y);
            if (v != current) {
                r.counts.push_back(run);
                run = 0;
                current = v;
            }
            ++run;
        }
    }
    r.counts.push_back(run);
    return r;
}

BinaryMask rle_decode(const RleMask& r) {
    std::uint64_t total = 0;
    for (auto c : r.counts) {
        total += c;
    }
    const std::uint64_t expected = static_cast<std::uint64_t>(r.width) * r.height;
    if (total != expected) {
        throw MalformedRleError("RLE counts sum to " + std::to_string(total) + ", expected " +
                                std::to_string(expected));
    }
    BinaryMask m(r.width, r.height);
    std::uint64_t pos = 0;
    bool value = false;
    const auto height = static_cast<std::uint64_t>(r.height);
    for (auto c : r.counts) {
        if (value) {
            for (std::uint64_t i = pos; i < pos + c; ++i) {
                m.set(static_cast<int>(i / height), static_cast<int>(i % height));
            }
        }
        pos += c;
        value = !value;
    }
    return m;
}

std::uint64_t rle_area(const RleMask& r) {
    std::uint64_t n = 0;
    for (std::size_t i = 1; i < r.counts.size(); i += 2) {
        n += r.counts[i];
    }
    return n;
}

// Same byte layout as pycocotools' rleToString: deltas against the run two back (for i > 2),
// 5 bits per character, continuation flag 0x20, sign bit 0x10, offset by '0'.
std::string rle_counts_to_string(const std::vector<std::uint32_t>& counts) {
    std::string s;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        long long x = counts[i];
        if (i > 2) {
            x -= static_cast<long long>(counts[i - 2]);
        }
        bool more = true;
        while (more) {
            char c = static_cast<char>(x & 0x1f);
            x >>= 5;
            more = (c & 0x10) ? x != -1 : x != 0;
            if (more) {
                c |= 0x20;
            }
            s.push_back(static_cast<char>(c + 48));
        }
    }
    return s;
}

std::vector<std::uint32_t> rle_counts_from_string(std::string_view s) {
    std::vector<long long> counts;
    std::size_t p = 0;
    while (p < s.size()) {
        long long x = 0;
        int k = 0;
        bool more = true;
        while (more) {
            if (p >= s.size()) {
                throw MalformedRleError("truncated compressed RLE string");
            }
            const int c = static_cast<int>(static_cast<unsigned char>(s[p])) - 48;
            if (c < 0 || c > 63) {
                throw MalformedRleError("invalid character in compressed RLE string");
            }
            x |= static_cast<long long>(c & 0x1f) << (5 * k);
            more = (c & 0x20) != 0;
            ++p;
            ++k;
            if (!more && (c & 0x10)) {
                x |= -1LL << (5 * k);
            }
            if (k > 12) {
                throw MalformedRleError("RLE run length overflow");
            }
        }
        if (counts.size() > 2) {
            x += counts[counts.size() - 2];
        }
        if (x < 0 || x > 0xffffffffLL) {
            throw MalformedRleError("negative or oversized run in compressed RLE string");
        }
        counts.push_back(x);
    }
    return {counts.begin(), counts.end()};
}

}  // namespace quickseg
