#include "beamosd/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace beamosd {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

// Same 32768 scale as the reader so a round trip stays within half an LSB.
std::int16_t quantize(double x) {
  double scaled = std::round(x * 32768.0);
  if (scaled > 32767.0) scaled = 32767.0;
  if (scaled < -32768.0) scaled = -32768.0;
  return static_cast<std::int16_t>(scaled);
}

}  // namespace

void write_wav(const std::string& path, const Audio& audio) {
  require(audio.num_channels() >= 1, "write_wav: no channels");
  const int chans = audio.num_channels();
  const int samples = audio.num_samples();
  for (const auto& ch : audio.channels)
    require(static_cast<int>(ch.size()) == samples,
            "write_wav: channel length mismatch");

  const std::uint32_t sr = static_cast<std::uint32_t>(audio.sample_rate);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples) * chans * 2;

  std::string buf;
  buf.reserve(44 + data_bytes);
  buf += "RIFF";
  put_u32(buf, 36 + data_bytes);
  buf += "WAVEfmt ";
  put_u32(buf, 16);
  put_u16(buf, 1);  // PCM
  put_u16(buf, static_cast<std::uint16_t>(chans));
  put_u32(buf, sr);
  put_u32(buf, sr * chans * 2);
  put_u16(buf, static_cast<std::uint16_t>(chans * 2));
  put_u16(buf, 16);
  buf += "data";
  put_u32(buf, data_bytes);
  for (int t = 0; t < samples; ++t) {
    for (int c = 0; c < chans; ++c) {
      std::int16_t v = quantize(audio.channels[c][t]);
      buf.push_back(static_cast<char>(v & 0xff));
      buf.push_back(static_cast<char>((v >> 8) & 0xff));
    }
  }

  std::ofstream fp(path, std::ios::binary | std::ios::trunc);
  if (!fp) throw DataError("write_wav: cannot open " + path);
  fp.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!fp) throw DataError("write_wav: short write to " + path);
}

Audio read_wav(const std::string& path) {
  std::ifstream fp(path, std::ios::binary);
  if (!fp) throw DataError("read_wav: cannot open " + path);
  std::string raw((std::istreambuf_iterator<char>(fp)),
                  std::istreambuf_iterator<char>());
  const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data());
  const size_t n = raw.size();
  if (n < 44 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw DataError("read_wav: " + path + " is not a RIFF/WAVE file");

  int chans = 0, bits = 0;
  double sr = 0.0;
  size_t data_off = 0, data_len = 0;
  size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = get_u32(p + off + 4);
    if (std::memcmp(p + off, "fmt ", 4) == 0 && off + 8 + 16 <= n) {
      const unsigned char* f = p + off + 8;
      if (get_u16(f) != 1)
        throw DataError("read_wav: only PCM wav supported: " + path);
      chans = get_u16(f + 2);
      sr = get_u32(f + 4);
      bits = get_u16(f + 14);
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data_off = off + 8;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);
  }
  if (chans <= 0 || bits != 16 || data_off == 0)
    throw DataError("read_wav: unsupported or truncated wav: " + path);
  if (data_off + data_len > n) data_len = n - data_off;

  const size_t frames = data_len / (static_cast<size_t>(chans) * 2);
  Audio audio;
  audio.sample_rate = sr;
  audio.channels.assign(chans, std::vector<double>(frames));
  const unsigned char* d = p + data_off;
  for (size_t t = 0; t < frames; ++t) {
    for (int c = 0; c < chans; ++c) {
      std::int16_t v = static_cast<std::int16_t>(get_u16(d + (t * chans + c) * 2));
      audio.channels[c][t] = v / 32768.0;
    }
  }
  return audio;
}

}  // namespace beamosd
