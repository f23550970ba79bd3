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

#ifndef ESWMV_STREAM_FORMAT_HPP_
#define ESWMV_STREAM_FORMAT_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>

#include "eswmv/signals.hpp"

namespace eswmv {

// Iterate stream: a 12-byte header
//   "ESWM" | version 0x01 | frame length (uint32 LE) | 3 zero bytes
// followed by back-to-back frames of frame-length float32 LE samples until
// EOF. Frames carry no shape, so they are decoded as 1-D signals.
inline constexpr std::array<char, 4> kStreamMagic = {'E', 'S', 'W', 'M'};
inline constexpr std::uint8_t kStreamVersion = 1;
inline constexpr std::size_t kStreamHeaderSize = 12;

void write_stream_header(std::ostream& out, std::uint32_t frame_length);
void write_stream_frame(std::ostream& out, const Image& frame);

// Rounds every sample to the nearest float32, i.e. the value a reader of the
// stream sees.
Image quantize_to_float(const Image& frame);

class StreamReader {
 public:
  // Reads and validates the header; throws FormatError on a bad header.
  explicit StreamReader(std::istream& in);

  std::uint32_t frame_length() const { return frame_length_; }
  std::size_t frames_read() const { return frames_read_; }

  // Next frame, nullopt at a clean EOF. A partial frame throws FormatError.
  std::optional<Image> next();

 private:
  std::istream& in_;
  std::uint32_t frame_length_ = 0;
  std::size_t frames_read_ = 0;
};

}  // namespace eswmv

#endif  // ESWMV_STREAM_FORMAT_HPP_
