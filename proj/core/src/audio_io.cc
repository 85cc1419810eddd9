// scd/audio_io.cc

#include "scd/audio_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "scd/error.h"

namespace scd {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t ReadU32(const uint8_t *p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

uint16_t ReadU16(const uint8_t *p) { return uint16_t(p[0] | p[1] << 8); }

void PutU32(std::vector<uint8_t> *out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(uint8_t(v >> (8 * i)));
}

void PutU16(std::vector<uint8_t> *out, uint16_t v) {
  out->push_back(uint8_t(v));
  out->push_back(uint8_t(v >> 8));
}

void PutTag(std::vector<uint8_t> *out, const char *tag) {
  out->insert(out->end(), tag, tag + 4);
}

double DecodeSample(const uint8_t *p, uint16_t format, uint16_t bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      return static_cast<double>(std::bit_cast<float>(ReadU32(p)));
    }
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<int16_t>(ReadU16(p)) / 32768.0;
    case 24: {
      int32_t v = int32_t(p[0]) | int32_t(p[1]) << 8 | int32_t(p[2]) << 16;
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32:
      return static_cast<int32_t>(ReadU32(p)) / 2147483648.0;
  }
  return 0.0;
}

std::vector<uint8_t> ReadFile(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

AudioClip DecodeWav(std::span<const uint8_t> bytes, WavEncoding *encoding) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kCorruptHeader, "missing RIFF/WAVE signature");
  }
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t *data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t *chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) {
        throw Error(ErrorCode::kCorruptHeader, "truncated fmt chunk");
      }
      const uint8_t *f = bytes.data() + body;
      format = ReadU16(f);
      channels = ReadU16(f + 2);
      rate = ReadU32(f + 4);
      bits = ReadU16(f + 14);
      if (format == kFormatExtensible && size >= 40 && avail >= 40) {
        format = ReadU16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streaming writers leave 0 or 0xFFFFFFFF; take what is present.
      data_size = std::min<std::size_t>(size == 0 ? avail : size, avail);
    }
    pos = body + size + (size & 1u);
    if (data != nullptr && have_fmt) break;
  }

  if (!have_fmt) throw Error(ErrorCode::kCorruptHeader, "no fmt chunk");
  if (data == nullptr) throw Error(ErrorCode::kCorruptHeader, "no data chunk");
  if (channels == 0 || rate == 0) {
    throw Error(ErrorCode::kCorruptHeader, "zero channels or sample rate");
  }
  WavEncoding enc;
  if (format == kFormatPcm && bits == 8) {
    enc = WavEncoding::kPcm8;
  } else if (format == kFormatPcm && bits == 16) {
    enc = WavEncoding::kPcm16;
  } else if (format == kFormatPcm && bits == 24) {
    enc = WavEncoding::kPcm24;
  } else if (format == kFormatPcm && bits == 32) {
    enc = WavEncoding::kFloat32;  // nearest writable encoding
  } else if (format == kFormatFloat && (bits == 32 || bits == 64)) {
    enc = WavEncoding::kFloat32;
  } else {
    throw Error(ErrorCode::kUnsupportedFormat,
                "format tag " + std::to_string(format) + " with " +
                    std::to_string(bits) + " bits");
  }
  if (encoding != nullptr) *encoding = enc;

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n = data_size / frame_bytes;
  if (n == 0) throw Error(ErrorCode::kEmptyAudio, "data chunk holds no frames");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const uint8_t *frame = data + i * frame_bytes;
    double acc = 0.0;
    for (uint16_t c = 0; c < channels; ++c) {
      acc += DecodeSample(frame + c * bytes_per_sample, format, bits);
    }
    clip.samples[i] = channels == 1 ? acc : acc / channels;
  }
  return clip;
}

std::vector<uint8_t> EncodeWav(const AudioClip &clip, WavEncoding encoding) {
  uint16_t bits = 16, format = kFormatPcm;
  switch (encoding) {
    case WavEncoding::kPcm8: bits = 8; break;
    case WavEncoding::kPcm16: bits = 16; break;
    case WavEncoding::kPcm24: bits = 24; break;
    case WavEncoding::kFloat32: bits = 32; format = kFormatFloat; break;
  }
  const uint32_t bytes_per_sample = bits / 8;
  const uint32_t data_size =
      static_cast<uint32_t>(clip.samples.size() * bytes_per_sample);

  std::vector<uint8_t> out;
  out.reserve(44 + data_size + 1);
  PutTag(&out, "RIFF");
  PutU32(&out, 36 + data_size + (data_size & 1u));
  PutTag(&out, "WAVE");
  PutTag(&out, "fmt ");
  PutU32(&out, 16);
  PutU16(&out, format);
  PutU16(&out, 1);
  PutU32(&out, static_cast<uint32_t>(clip.sample_rate));
  PutU32(&out, static_cast<uint32_t>(clip.sample_rate) * bytes_per_sample);
  PutU16(&out, static_cast<uint16_t>(bytes_per_sample));
  PutU16(&out, bits);
  PutTag(&out, "data");
  PutU32(&out, data_size);

  for (double s : clip.samples) {
    switch (encoding) {
      case WavEncoding::kPcm8: {
        const long v = std::clamp(std::lround(s * 128.0), -128L, 127L);
        out.push_back(static_cast<uint8_t>(v + 128));
        break;
      }
      case WavEncoding::kPcm16: {
        const long v = std::clamp(std::lround(s * 32768.0), -32768L, 32767L);
        PutU16(&out, static_cast<uint16_t>(static_cast<int16_t>(v)));
        break;
      }
      case WavEncoding::kPcm24: {
        const long v =
            std::clamp(std::lround(s * 8388608.0), -8388608L, 8388607L);
        const uint32_t u = static_cast<uint32_t>(v);
        out.push_back(uint8_t(u));
        out.push_back(uint8_t(u >> 8));
        out.push_back(uint8_t(u >> 16));
        break;
      }
      case WavEncoding::kFloat32:
        PutU32(&out, std::bit_cast<uint32_t>(static_cast<float>(s)));
        break;
    }
  }
  if (data_size & 1u) out.push_back(0);
  return out;
}

AudioClip LoadWav(const std::filesystem::path &path, WavEncoding *encoding) {
  const std::vector<uint8_t> bytes = ReadFile(path);
  try {
    return DecodeWav(bytes, encoding);
  } catch (const Error &e) {
    throw e.WithContext(path.string());
  }
}

AudioClip LoadWav(const std::filesystem::path &path, int expected_rate) {
  AudioClip clip = LoadWav(path);
  if (clip.sample_rate != expected_rate) {
    throw Error(ErrorCode::kSampleRateMismatch,
                path.string() + " is " + std::to_string(clip.sample_rate) +
                    " Hz, expected " + std::to_string(expected_rate) + " Hz");
  }
  return clip;
}

void WriteWav(const std::filesystem::path &path, const AudioClip &clip,
              WavEncoding encoding) {
  const std::vector<uint8_t> bytes = EncodeWav(clip, encoding);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

AudioClip LoadSphere(const std::filesystem::path &path) {
  const std::vector<uint8_t> bytes = ReadFile(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "RIFF", 4) == 0) {
    return DecodeWav(bytes);
  }
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "NIST_1A", 7) != 0) {
    throw Error(ErrorCode::kCorruptHeader,
                path.string() + ": not a NIST SPHERE file");
  }
  const std::string head(bytes.begin(), bytes.begin() + 16);
  const std::size_t header_size = std::stoul(head.substr(8));
  if (header_size > bytes.size()) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": truncated");
  }
  const std::string header(bytes.begin(), bytes.begin() + header_size);
  auto field = [&](const std::string &key) -> std::string {
    const auto at = header.find("\n" + key + " ");
    if (at == std::string::npos) return {};
    const auto line_end = header.find('\n', at + 1);
    const std::string line = header.substr(at + 1, line_end - at - 1);
    const auto last = line.rfind(' ');
    return line.substr(last + 1);
  };
  const std::string coding = field("sample_coding");
  if (!coding.empty() && coding != "pcm") {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + ": SPHERE coding " + coding);
  }
  const std::string rate = field("sample_rate");
  const std::string width = field("sample_n_bytes");
  const std::string order = field("sample_byte_format");
  if (!width.empty() && width != "2") {
    throw Error(ErrorCode::kUnsupportedFormat,
                path.string() + ": SPHERE sample width " + width);
  }
  const bool big_endian = order == "10";
  AudioClip clip;
  clip.sample_rate = rate.empty() ? kDefaultSampleRate : std::stoi(rate);
  const std::size_t n = (bytes.size() - header_size) / 2;
  if (n == 0) throw Error(ErrorCode::kEmptyAudio, path.string());
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const uint8_t *p = bytes.data() + header_size + 2 * i;
    const uint16_t u = big_endian ? uint16_t(p[0] << 8 | p[1]) : ReadU16(p);
    clip.samples[i] = static_cast<int16_t>(u) / 32768.0;
  }
  return clip;
}

AudioClip NormalizePeak(AudioClip clip) {
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) {
    clip.silent = true;
    return clip;
  }
  const double scale = 1.0 / peak;
  for (double &s : clip.samples) s *= scale;
  clip.silent = false;
  return clip;
}

std::size_t MsToSamples(double ms, int sample_rate) {
  // The epsilon absorbs binary representation error in products such as
  // 25 * 16000 / 1000.
  return static_cast<std::size_t>(std::floor(ms * sample_rate / 1000.0 + 1e-9));
}

std::size_t FrameCount(std::size_t len, std::size_t win, std::size_t hop) {
  if (win == 0 || hop == 0 || len < win) return 0;
  return (len - win) / hop + 1;
}

FrameGrid::FrameGrid(const AudioClip &clip, double win_ms, double hop_ms)
    : win_(MsToSamples(win_ms, clip.sample_rate)),
      hop_(MsToSamples(hop_ms, clip.sample_rate)),
      win_ms_(win_ms),
      hop_ms_(hop_ms),
      sample_rate_(clip.sample_rate) {
  count_ = FrameCount(clip.samples.size(), win_, hop_);
  data_.resize(count_ * win_);
  for (std::size_t i = 0; i < count_; ++i) {
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(i * hop_),
                win_, data_.begin() + static_cast<std::ptrdiff_t>(i * win_));
  }
}

FrameGrid FrameSignal(const AudioClip &clip, double win_ms, double hop_ms) {
  if (!(hop_ms > 0.0) || win_ms < hop_ms) {
    throw Error(ErrorCode::kInvalidArgument,
                "framing requires win_ms >= hop_ms > 0");
  }
  const std::size_t win = MsToSamples(win_ms, clip.sample_rate);
  if (win == 0 || MsToSamples(hop_ms, clip.sample_rate) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "window or hop under one sample");
  }
  if (clip.samples.size() < win) {
    throw Error(ErrorCode::kClipTooShort,
                std::to_string(clip.samples.size()) + " samples < window of " +
                    std::to_string(win));
  }
  return FrameGrid(clip, win_ms, hop_ms);
}

}  // namespace scd
