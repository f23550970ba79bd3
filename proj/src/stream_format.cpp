// Copyright 2026 The eswmv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eswmv/stream_format.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>
#include <vector>

namespace eswmv {

namespace {

void put_u32_le(unsigned char* dst, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) dst[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32_le(const unsigned char* src) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(src[i]) << (8 * i);
  return value;
}

}  // namespace

void write_stream_header(std::ostream& out, std::uint32_t frame_length) {
  if (frame_length == 0) throw InvalidArgument("stream frame length must be positive");
  std::array<unsigned char, kStreamHeaderSize> header{};
  std::memcpy(header.data(), kStreamMagic.data(), kStreamMagic.size());
  header[4] = kStreamVersion;
  put_u32_le(header.data() + 5, frame_length);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
}

void write_stream_frame(std::ostream& out, const Image& frame) {
  std::vector<unsigned char> bytes(frame.size() * 4);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    put_u32_le(bytes.data() + 4 * i, std::bit_cast<std::uint32_t>(static_cast<float>(frame[i])));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Image quantize_to_float(const Image& frame) {
  Image out = frame;
  for (double& v : out.samples()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

StreamReader::StreamReader(std::istream& in) : in_(in) {
  std::array<unsigned char, kStreamHeaderSize> header{};
  in_.read(reinterpret_cast<char*>(header.data()), header.size());
  if (static_cast<std::size_t>(in_.gcount()) != header.size()) {
    throw FormatError("stream: truncated header");
  }
  if (!std::equal(kStreamMagic.begin(), kStreamMagic.end(), header.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw FormatError("stream: bad magic (expected \"ESWM\")");
  }
  if (header[4] != kStreamVersion) {
    throw FormatError("stream: unsupported version " + std::to_string(header[4]));
  }
  frame_length_ = get_u32_le(header.data() + 5);
  if (frame_length_ == 0) throw FormatError("stream: zero frame length");
  if (header[9] != 0 || header[10] != 0 || header[11] != 0) {
    throw FormatError("stream: reserved header bytes must be zero");
  }
}

std::optional<Image> StreamReader::next() {
  std::vector<unsigned char> bytes(static_cast<std::size_t>(frame_length_) * 4);
  in_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got == 0) return std::nullopt;
  if (got != bytes.size()) {
    throw FormatError("stream: truncated frame " + std::to_string(frames_read_ + 1) + " (" +
                      std::to_string(got) + " of " + std::to_string(bytes.size()) + " bytes)");
  }
  std::vector<double> samples(frame_length_);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = static_cast<double>(std::bit_cast<float>(get_u32_le(bytes.data() + 4 * i)));
  }
  ++frames_read_;
  return Image::signal(std::move(samples));
}

}  // namespace eswmv
