// Copyright 2026 The embinvert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EMBINVERT_BINARY_IO_H_
#define EMBINVERT_BINARY_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace embinvert {

// Little-endian writer used by the corpus, training-set and checkpoint
// containers. Output is byte-identical across hosts.
class BinaryWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> vs);
  void bytes(std::string_view s) { buf_.append(s); }
  // u32 length prefix, then raw bytes.
  void str(std::string_view s);

  const std::string& buffer() const { return buf_; }
  void write_file(const std::filesystem::path& path) const;

 private:
  std::string buf_;
};

// Reader over an in-memory buffer. Any out-of-range read throws
// Error(kCorruptFile).
class BinaryReader {
 public:
  explicit BinaryReader(std::string data) : data_(std::move(data)) {}
  static BinaryReader from_file(const std::filesystem::path& path);

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out);
  std::string bytes(std::size_t n);
  std::string str();

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  // Checks a magic tag and format version; throws kCorruptFile on mismatch.
  void expect_header(std::string_view magic, std::uint32_t version);

 private:
  void need(std::size_t n) const;

  std::string data_;
  std::size_t pos_ = 0;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace embinvert

#endif  // EMBINVERT_BINARY_IO_H_
