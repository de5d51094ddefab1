#include "sitqc/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "sitqc/errors.hpp"

namespace sitqc {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t rd_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t rd_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& detail) {
    throw IoError("wav: malformed file " + path.string() + " (" + detail + ")");
}

struct FmtInfo {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t block_align = 0;
    std::uint16_t bits = 0;
};

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("wav: missing file " + path.string());

    in.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(file_size);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(file_size));
    if (static_cast<std::size_t>(in.gcount()) != file_size)
        malformed(path, "short read");
    if (bytes.size() < 12) malformed(path, "shorter than a RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        malformed(path, "missing RIFF/WAVE magic");

    FmtInfo fmt;
    bool have_fmt = false;
    std::size_t data_off = 0, data_len = 0;
    bool have_data = false;

    // Chunk walk; unknown chunks are skipped, sizes are padded to even.
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = rd_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (body + 16 > bytes.size() || size < 16) malformed(path, "truncated fmt chunk");
            const unsigned char* f = bytes.data() + body;
            fmt.format = rd_u16(f);
            fmt.channels = rd_u16(f + 2);
            fmt.sample_rate = rd_u32(f + 4);
            fmt.block_align = rd_u16(f + 12);
            fmt.bits = rd_u16(f + 14);
            if (fmt.format == kFormatExtensible) {
                // Actual format is the first word of the SubFormat GUID.
                if (size < 40 || body + 40 > bytes.size())
                    malformed(path, "truncated extensible fmt chunk");
                fmt.format = rd_u16(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_off = body;
            data_len = size;
            have_data = true;
        }
        pos = body + size + (size & 1u);
    }

    if (!have_fmt) malformed(path, "no fmt chunk");
    if (!have_data) malformed(path, "no data chunk");
    if (data_off + data_len > bytes.size()) malformed(path, "truncated data chunk");

    if (fmt.format != kFormatPcm && fmt.format != kFormatFloat)
        throw IoError("wav: unsupported codec in " + path.string() + " (format tag " +
                      std::to_string(fmt.format) + ")");
    const bool is_float = fmt.format == kFormatFloat;
    if (is_float && fmt.bits != 32)
        throw IoError("wav: unsupported codec in " + path.string() + " (" +
                      std::to_string(fmt.bits) + "-bit float)");
    if (!is_float && fmt.bits != 8 && fmt.bits != 16 && fmt.bits != 24 && fmt.bits != 32)
        throw IoError("wav: unsupported codec in " + path.string() + " (" +
                      std::to_string(fmt.bits) + "-bit PCM)");
    if (fmt.channels < 1 || fmt.channels > 8)
        throw IoError("wav: unsupported codec in " + path.string() + " (" +
                      std::to_string(fmt.channels) + " channels)");
    if (fmt.sample_rate == 0) malformed(path, "zero sample rate");

    const std::size_t bytes_per_sample = fmt.bits / 8u;
    const std::size_t frame_bytes =
        fmt.block_align ? fmt.block_align : bytes_per_sample * fmt.channels;
    if (frame_bytes < bytes_per_sample * fmt.channels) malformed(path, "bad block align");
    if (data_len % frame_bytes != 0) malformed(path, "data size not a whole number of frames");
    const std::size_t n_frames = data_len / frame_bytes;

    AudioClip clip;
    clip.sample_rate = static_cast<int>(fmt.sample_rate);
    clip.source_path = path.string();
    clip.channels.assign(fmt.channels, std::vector<double>(n_frames));

    const unsigned char* d = bytes.data() + data_off;
    for (std::size_t i = 0; i < n_frames; ++i) {
        const unsigned char* frame = d + i * frame_bytes;
        for (std::uint16_t c = 0; c < fmt.channels; ++c) {
            const unsigned char* s = frame + c * bytes_per_sample;
            double v = 0.0;
            if (is_float) {
                float f;
                std::memcpy(&f, s, 4);
                if (!std::isfinite(f)) malformed(path, "non-finite float sample");
                v = f;
                if (v > 1.0) v = 1.0;
                if (v < -1.0) v = -1.0;
            } else if (fmt.bits == 8) {
                v = (static_cast<int>(s[0]) - 128) / 128.0;  // 8-bit WAV is unsigned
            } else if (fmt.bits == 16) {
                v = static_cast<std::int16_t>(s[0] | (s[1] << 8)) / 32768.0;
            } else if (fmt.bits == 24) {
                std::int32_t x = s[0] | (s[1] << 8) | (s[2] << 16);
                if (x & 0x800000) x |= ~0xFFFFFF;  // sign extend
                v = x / 8388608.0;
            } else {
                auto x = static_cast<std::int32_t>(rd_u32(s));
                v = x / 2147483648.0;
            }
            clip.channels[c][i] = v;
        }
    }
    return clip;
}

namespace {

void wr_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void wr_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

void write_wav16(const AudioClip& clip, const std::filesystem::path& path) {
    if (clip.channels.empty()) throw DataError("wav: cannot write clip with no channels");
    if (clip.sample_rate <= 0) throw DataError("wav: cannot write clip with non-positive rate");
    const std::size_t n_frames = clip.frames();
    for (const auto& ch : clip.channels)
        if (ch.size() != n_frames) throw DataError("wav: ragged channels");

    const auto n_ch = static_cast<std::uint16_t>(clip.channels.size());
    const std::uint32_t data_len = static_cast<std::uint32_t>(n_frames * n_ch * 2);

    std::vector<unsigned char> out;
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    wr_u32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    wr_u32(out, 16);
    wr_u16(out, kFormatPcm);
    wr_u16(out, n_ch);
    wr_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    wr_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * n_ch * 2);
    wr_u16(out, static_cast<std::uint16_t>(n_ch * 2));
    wr_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    wr_u32(out, data_len);

    for (std::size_t i = 0; i < n_frames; ++i) {
        for (std::uint16_t c = 0; c < n_ch; ++c) {
            double v = clip.channels[c][i];
            if (v > 1.0) v = 1.0;
            if (v < -1.0) v = -1.0;
            auto q = static_cast<long>(std::lround(v * 32767.0));
            wr_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("wav: cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("wav: write failed: " + path.string());
}

}  // namespace sitqc
