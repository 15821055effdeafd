// Copyright 2026 The handfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "handfit/error.hpp"

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <system_error>

namespace handfit {

/// Shortest representation that parses back to the identical double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Fixed-point with `digits` decimals (report output).
inline std::string format_fixed(double v, int digits)
{
    char buf[128];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out)
{
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, std::int64_t& out)
{
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

/// Whitespace tokenizer that reports failures with a fixed error code and the source name.
class TokenReader {
public:
    TokenReader(std::istream& in, Errc code, std::string source)
        : in_(in)
        , code_(code)
        , source_(std::move(source))
    {
    }

    [[noreturn]] void fail(const std::string& what) const { throw Error(code_, source_ + ": " + what); }

    std::string word()
    {
        std::string tok;
        if (!(in_ >> tok)) {
            fail("unexpected end of file");
        }
        return tok;
    }

    void expect(std::string_view keyword)
    {
        const auto tok = word();
        if (tok != keyword) {
            fail("expected '" + std::string(keyword) + "', found '" + tok + "'");
        }
    }

    std::int64_t integer()
    {
        const auto tok = word();
        std::int64_t v = 0;
        if (!parse_int(tok, v)) {
            fail("expected an integer, found '" + tok + "'");
        }
        return v;
    }

    double real()
    {
        const auto tok = word();
        double v = 0.0;
        if (!parse_double(tok, v)) {
            fail("expected a number, found '" + tok + "'");
        }
        return v;
    }

private:
    std::istream& in_;
    Errc code_;
    std::string source_;
};

} // namespace handfit
