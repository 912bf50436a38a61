// Copyright 2026-present the kkengine project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kk/error.hpp"

namespace kk {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian and written by memcpy");

// Append-only little-endian encoder.
class ByteWriter {
public:
    void put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    void put_u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void put_u32(std::uint32_t v) { put_raw(&v, sizeof v); }
    void put_u64(std::uint64_t v) { put_raw(&v, sizeof v); }
    void put_f32(float v) { put_raw(&v, sizeof v); }
    void put_f32s(std::span<const float> v) { put_raw(v.data(), v.size_bytes()); }
    void put_u32s(std::span<const std::uint32_t> v) { put_raw(v.data(), v.size_bytes()); }

    const std::string& bytes() const& noexcept { return buf_; }
    std::string bytes() && noexcept { return std::move(buf_); }

private:
    void put_raw(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.append(c, n);
    }

    std::string buf_;
};

// Bounds-checked decoder; every read past the end throws kTruncatedInput.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) noexcept : data_(data) {}

    std::string_view get_bytes(std::size_t n) {
        require(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::uint8_t get_u8() { return static_cast<std::uint8_t>(get_bytes(1)[0]); }
    std::uint32_t get_u32() { return get_pod<std::uint32_t>(); }
    std::uint64_t get_u64() { return get_pod<std::uint64_t>(); }
    float get_f32() { return get_pod<float>(); }

    void get_f32s(std::span<float> out) { get_array(out); }
    void get_u32s(std::span<std::uint32_t> out) { get_array(out); }

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    void require(std::size_t n) const {
        if (n > remaining()) {
            throw Error(ErrorCode::kTruncatedInput,
                        "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                            ", have " + std::to_string(remaining()));
        }
    }
    template <typename T>
    T get_pod() {
        T v;
        std::memcpy(&v, get_bytes(sizeof(T)).data(), sizeof(T));
        return v;
    }
    template <typename T>
    void get_array(std::span<T> out) {
        auto raw = get_bytes(out.size_bytes());
        if (!out.empty()) std::memcpy(out.data(), raw.data(), raw.size());
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace kk
