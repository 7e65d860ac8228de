#include "siren/wav_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace siren {

namespace {

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

uint32_t get_u32(const uint8_t* p) {
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

uint16_t get_u16(const uint8_t* p) { return uint16_t(p[0]) | (uint16_t(p[1]) << 8); }

int16_t sample_to_pcm16(double v, bool* clipped) {
    if (v > 1.0) {
        v = 1.0;
        *clipped = true;
    } else if (v < -1.0) {
        v = -1.0;
        *clipped = true;
    }
    return static_cast<int16_t>(std::lrint(v * 32767.0));
}

}  // namespace

std::vector<double> quantize_pcm16(const std::vector<double>& samples) {
    std::vector<double> out;
    out.reserve(samples.size());
    bool clipped = false;
    for (double v : samples) out.push_back(sample_to_pcm16(v, &clipped) / 32767.0);
    return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
    check_audio(clip, "write_wav");

    std::string body;
    body.reserve(44 + clip.samples.size() * 2);
    uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
    uint32_t rate = static_cast<uint32_t>(clip.sample_rate);

    body += "RIFF";
    put_u32(body, 36 + data_bytes);
    body += "WAVE";
    body += "fmt ";
    put_u32(body, 16);
    put_u16(body, 1);  // PCM
    put_u16(body, 1);  // mono
    put_u32(body, rate);
    put_u32(body, rate * 2);  // byte rate
    put_u16(body, 2);         // block align
    put_u16(body, 16);        // bits per sample
    body += "data";
    put_u32(body, data_bytes);

    bool clipped = false;
    for (double v : clip.samples) {
        int16_t s = sample_to_pcm16(v, &clipped);
        body.push_back(static_cast<char>(s & 0xFF));
        body.push_back(static_cast<char>((s >> 8) & 0xFF));
    }
    if (clipped) {
        std::fprintf(stderr, "warning: %s: samples outside [-1, 1] clipped on write\n",
                     path.string().c_str());
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot open for writing: " + path.string());
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f) fail(ErrorCode::IoError, "short write: " + path.string());
}

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::IoError, "cannot open: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        fail(ErrorCode::IoError, "not a RIFF WAV file: " + path.string());

    uint32_t rate = 0;
    uint16_t channels = 0, bits = 0, format = 0;
    const uint8_t* data = nullptr;
    uint32_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const uint8_t* hdr = bytes.data() + pos;
        uint32_t chunk_len = get_u32(hdr + 4);
        const uint8_t* payload = hdr + 8;
        if (pos + 8 + chunk_len > bytes.size()) break;
        if (std::memcmp(hdr, "fmt ", 4) == 0 && chunk_len >= 16) {
            format = get_u16(payload);
            channels = get_u16(payload + 2);
            rate = get_u32(payload + 4);
            bits = get_u16(payload + 14);
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = payload;
            data_len = chunk_len;
        }
        pos += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }

    if (format != 1 || bits != 16)
        fail(ErrorCode::IoError, "unsupported WAV encoding (need PCM 16-bit): " + path.string());
    if (channels != 1) fail(ErrorCode::IoError, "unsupported channel count (need mono): " + path.string());
    if (data == nullptr || data_len < 2) fail(ErrorCode::IoError, "missing data chunk: " + path.string());

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    size_t n = data_len / 2;
    clip.samples.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        int16_t s = static_cast<int16_t>(get_u16(data + 2 * i));
        clip.samples.push_back(s / 32767.0);
    }
    return clip;
}

}  // namespace siren
