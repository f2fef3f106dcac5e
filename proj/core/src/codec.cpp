#include "relaykit/codec.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <vector>

namespace relaykit {

std::string format_number(double v) {
    if (v == 0.0) return "0";  // covers -0.0 as well
    char buf[64];
    const double mag = v < 0 ? -v : v;
    std::to_chars_result r{};
    if (mag >= 1e-6 && mag < 1e15) {
        r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    } else {
        r = std::to_chars(buf, buf + sizeof(buf), v);  // shortest, exponent allowed
    }
    return std::string(buf, r.ptr);
}

std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string_view to_string(DecodeError e) {
    switch (e) {
        case DecodeError::EmptyInput: return "EmptyInput";
        case DecodeError::WrongFieldCount: return "WrongFieldCount";
        case DecodeError::NotNumeric: return "NotNumeric";
    }
    return "?";
}

std::string_view to_string(QueryError e) {
    switch (e) {
        case QueryError::MissingSubmitMarker: return "MissingSubmitMarker";
        case QueryError::MissingField: return "MissingField";
        case QueryError::NotNumeric: return "NotNumeric";
    }
    return "?";
}

std::string encode_record(const Triple& t) {
    std::string out = format_number(t.x);
    out += kRecordDelimiter;
    out += format_number(t.y);
    out += kRecordDelimiter;
    out += format_number(t.z);
    return out;
}

std::string encode_record(const AccelSample& s) {
    return encode_record(Triple{s.x, s.y, s.z});
}

DecodeResult decode_record(std::string_view raw) {
    DecodeResult res;
    if (raw.empty()) {
        res.error = DecodeError::EmptyInput;
        return res;
    }
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t d = raw.find(kRecordDelimiter, pos);
        if (d == std::string_view::npos) {
            fields.push_back(raw.substr(pos));
            break;
        }
        fields.push_back(raw.substr(pos, d - pos));
        pos = d + kRecordDelimiter.size();
    }
    if (fields.size() != 3) {
        res.error = DecodeError::WrongFieldCount;
        return res;
    }
    std::array<double, 3> vals{};
    for (int i = 0; i < 3; ++i) {
        const auto v = parse_number(fields[static_cast<std::size_t>(i)]);
        if (!v) {
            res.error = DecodeError::NotNumeric;
            res.field = i;
            return res;
        }
        vals[static_cast<std::size_t>(i)] = *v;
    }
    res.ok = true;
    res.value = Triple{vals[0], vals[1], vals[2]};
    return res;
}

namespace {

bool is_unreserved(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' || c == '~';
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string percent_encode(std::string_view s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size());
    for (const char ch : s) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_unreserved(c)) {
            out += ch;
        } else {
            out += '%';
            out += kHex[c >> 4];
            out += kHex[c & 0xF];
        }
    }
    return out;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c == '+') {
            out += ' ';
        } else if (c == '%' && i + 2 < s.size()) {
            const int hi = hex_digit(s[i + 1]);
            const int lo = hex_digit(s[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out += static_cast<char>((hi << 4) | lo);
                i += 2;
            } else {
                out += c;
            }
        } else {
            out += c;
        }
    }
    return out;
}

std::string build_query(const Triple& t, std::string_view ingest_path) {
    std::string out(ingest_path);
    out += '?';
    out += kParamX;
    out += '=';
    out += percent_encode(format_number(t.x));
    out += '&';
    out += kParamY;
    out += '=';
    out += percent_encode(format_number(t.y));
    out += '&';
    out += kParamZ;
    out += '=';
    out += percent_encode(format_number(t.z));
    out += '&';
    out += kParamSubmit;
    out += '=';
    out += kSubmitValue;
    return out;
}

std::string build_query(const AccelSample& s, std::string_view ingest_path) {
    return build_query(Triple{s.x, s.y, s.z}, ingest_path);
}

QueryResult parse_query(std::string_view query) {
    QueryResult res;

    // name -> last value; presence tracked separately for Button1 semantics
    bool have_submit = false;
    std::array<bool, 3> have{false, false, false};
    std::array<std::string, 3> text;
    const std::array<std::string_view, 3> names{kParamX, kParamY, kParamZ};

    std::size_t pos = 0;
    while (pos <= query.size()) {
        std::size_t amp = query.find('&', pos);
        if (amp == std::string_view::npos) amp = query.size();
        const std::string_view pair = query.substr(pos, amp - pos);
        if (!pair.empty()) {
            const std::size_t eq = pair.find('=');
            const std::string name =
                percent_decode(eq == std::string_view::npos ? pair : pair.substr(0, eq));
            const std::string value =
                eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1));
            if (name == kParamSubmit) {
                have_submit = true;  // presence only; value ignored
            } else {
                for (std::size_t i = 0; i < 3; ++i) {
                    if (name == names[i]) {
                        have[i] = true;
                        text[i] = value;
                    }
                }
            }
        }
        if (amp == query.size()) break;
        pos = amp + 1;
    }

    if (!have_submit) {
        res.error = QueryError::MissingSubmitMarker;
        return res;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (!have[i]) {
            res.error = QueryError::MissingField;
            res.field = std::string(names[i]);
            return res;
        }
    }
    std::array<double, 3> vals{};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto v = parse_number(text[i]);
        if (!v) {
            res.error = QueryError::NotNumeric;
            res.field = std::string(names[i]);
            return res;
        }
        vals[i] = *v;
    }
    res.ok = true;
    res.value = Triple{vals[0], vals[1], vals[2]};
    return res;
}

}  // namespace relaykit
