#include <capstan/zip.hpp>

#include <capstan/digest.hpp>

#include <algorithm>
#include <cstring>
#include <limits>
#include <set>

namespace capstan {

namespace {

constexpr std::uint32_t local_header_sig = 0x04034b50;
constexpr std::uint32_t central_header_sig = 0x02014b50;
constexpr std::uint32_t end_of_directory_sig = 0x06054b50;

// DOS date for 1980-01-01, time 00:00:00.
constexpr std::uint16_t fixed_dos_date = (1 << 5) | 1;
constexpr std::uint16_t fixed_dos_time = 0;

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(std::uint8_t(v));
    out.push_back(std::uint8_t(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 24));
}

class reader {
public:
    explicit reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint16_t get16(std::size_t off) const {
        check(off, 2);
        return std::uint16_t(bytes_[off]) | std::uint16_t(bytes_[off + 1]) << 8;
    }

    std::uint32_t get32(std::size_t off) const {
        check(off, 4);
        return std::uint32_t(bytes_[off]) | std::uint32_t(bytes_[off + 1]) << 8 |
               std::uint32_t(bytes_[off + 2]) << 16 |
               std::uint32_t(bytes_[off + 3]) << 24;
    }

    std::span<const std::uint8_t> slice(std::size_t off, std::size_t len) const {
        check(off, len);
        return bytes_.subspan(off, len);
    }

    std::size_t size() const noexcept { return bytes_.size(); }

private:
    void check(std::size_t off, std::size_t len) const {
        if (off > bytes_.size() || bytes_.size() - off < len)
            throw zip_error("archive truncated");
    }

    std::span<const std::uint8_t> bytes_;
};

} // namespace

std::vector<std::uint8_t> write_zip(const std::vector<zip_entry>& entries) {
    std::set<std::string> seen;
    for (const zip_entry& entry : entries) {
        if (entry.name.empty() || entry.name.size() > 0xffff)
            throw zip_error("entry name empty or too long");
        if (entry.data.size() > std::numeric_limits<std::uint32_t>::max())
            throw zip_error("entry too large for a 32-bit archive");
        if (!seen.insert(entry.name).second)
            throw zip_error("duplicate entry name: " + entry.name);
    }

    std::vector<std::uint8_t> out;
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> crcs;
    offsets.reserve(entries.size());
    crcs.reserve(entries.size());

    for (const zip_entry& entry : entries) {
        offsets.push_back(std::uint32_t(out.size()));
        crcs.push_back(crc32(entry.data));
        put32(out, local_header_sig);
        put16(out, 10); // version needed: store only
        put16(out, 0);  // flags
        put16(out, 0);  // method: store
        put16(out, fixed_dos_time);
        put16(out, fixed_dos_date);
        put32(out, crcs.back());
        put32(out, std::uint32_t(entry.data.size())); // compressed
        put32(out, std::uint32_t(entry.data.size())); // uncompressed
        put16(out, std::uint16_t(entry.name.size()));
        put16(out, 0); // extra length
        out.insert(out.end(), entry.name.begin(), entry.name.end());
        out.insert(out.end(), entry.data.begin(), entry.data.end());
    }

    std::size_t directory_start = out.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const zip_entry& entry = entries[i];
        put32(out, central_header_sig);
        put16(out, 10); // version made by
        put16(out, 10); // version needed
        put16(out, 0);  // flags
        put16(out, 0);  // method
        put16(out, fixed_dos_time);
        put16(out, fixed_dos_date);
        put32(out, crcs[i]);
        put32(out, std::uint32_t(entry.data.size()));
        put32(out, std::uint32_t(entry.data.size()));
        put16(out, std::uint16_t(entry.name.size()));
        put16(out, 0); // extra length
        put16(out, 0); // comment length
        put16(out, 0); // disk number
        put16(out, 0); // internal attributes
        put32(out, 0); // external attributes
        put32(out, offsets[i]);
        out.insert(out.end(), entry.name.begin(), entry.name.end());
    }
    std::size_t directory_size = out.size() - directory_start;

    put32(out, end_of_directory_sig);
    put16(out, 0); // this disk
    put16(out, 0); // directory start disk
    put16(out, std::uint16_t(entries.size()));
    put16(out, std::uint16_t(entries.size()));
    put32(out, std::uint32_t(directory_size));
    put32(out, std::uint32_t(directory_start));
    put16(out, 0); // comment length
    return out;
}

std::vector<zip_entry> read_zip(std::span<const std::uint8_t> bytes) {
    reader in(bytes);
    if (in.size() < 22)
        throw zip_error("not a zip archive: too small");

    // The end-of-directory record is the last structure; scan backwards to
    // skip a possible archive comment.
    std::size_t scan_floor = in.size() >= 22 + 0xffff ? in.size() - 22 - 0xffff : 0;
    std::size_t end_off = in.size() - 22;
    while (true) {
        if (in.get32(end_off) == end_of_directory_sig)
            break;
        if (end_off == scan_floor)
            throw zip_error("not a zip archive: end of directory not found");
        --end_off;
    }

    std::size_t entry_count = in.get16(end_off + 10);
    if (entry_count != in.get16(end_off + 8))
        throw zip_error("multi-disk archives not supported");
    std::size_t directory_off = in.get32(end_off + 16);

    std::vector<zip_entry> entries;
    entries.reserve(entry_count);
    std::size_t pos = directory_off;
    for (std::size_t i = 0; i < entry_count; ++i) {
        if (in.get32(pos) != central_header_sig)
            throw zip_error("corrupt central directory");
        std::uint16_t method = in.get16(pos + 10);
        if (method != 0)
            throw zip_error("unsupported compression method (store only)");
        std::uint32_t compressed = in.get32(pos + 20);
        std::uint32_t uncompressed = in.get32(pos + 24);
        if (compressed != uncompressed)
            throw zip_error("stored entry with mismatched sizes");
        std::uint16_t name_len = in.get16(pos + 28);
        std::uint16_t extra_len = in.get16(pos + 30);
        std::uint16_t comment_len = in.get16(pos + 32);
        std::uint32_t local_off = in.get32(pos + 42);
        auto name_bytes = in.slice(pos + 46, name_len);
        std::string name(name_bytes.begin(), name_bytes.end());

        if (in.get32(local_off) != local_header_sig)
            throw zip_error("corrupt local header for entry: " + name);
        std::uint16_t local_name_len = in.get16(local_off + 26);
        std::uint16_t local_extra_len = in.get16(local_off + 28);
        auto data = in.slice(local_off + 30 + local_name_len + local_extra_len,
                             compressed);

        entries.push_back({std::move(name),
                           std::vector<std::uint8_t>(data.begin(), data.end())});
        pos += 46 + name_len + extra_len + comment_len;
    }
    return entries;
}

} // namespace capstan
