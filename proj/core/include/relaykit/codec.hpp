#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace relaykit {

/// One timestamped accelerometer reading, the unit of relay.
/// x/y/z are accelerations in m/s^2 (gravity included). seq and t_ms are
/// source-local bookkeeping and are never put on the wire.
struct AccelSample {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::uint64_t seq = 0;
    std::uint64_t t_ms = 0;
};

/// A bare (x, y, z) triple, the payload the wire actually carries.
struct Triple {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Triple&) const = default;
};

/// Default clamp bound on each axis, m/s^2 (~16 g).
inline constexpr double kDefaultClampBound = 160.0;

/// Record delimiter, exactly the bytes 0x3C 0x62 0x72 0x3E.
inline constexpr std::string_view kRecordDelimiter = "<br>";

/// Query parameter names, case-sensitive.
inline constexpr std::string_view kParamX = "Editbox1";
inline constexpr std::string_view kParamY = "Editbox2";
inline constexpr std::string_view kParamZ = "Editbox3";
inline constexpr std::string_view kParamSubmit = "Button1";
inline constexpr std::string_view kSubmitValue = "Submit";

/// Canonical decimal text for a finite value: the shortest string that
/// re-parses to exactly the same double. Plain notation (no exponent) for
/// magnitudes in [1e-6, 1e15); "0" for zero of either sign.
std::string format_number(double v);

/// Strict inverse of format_number. Accepts optional '-', digits, '.',
/// optional exponent; rejects anything non-finite, empty, or trailing junk.
std::optional<double> parse_number(std::string_view text);

// --- stored record ---------------------------------------------------------

enum class DecodeError {
    EmptyInput,       // zero-length body: store never written
    WrongFieldCount,  // splitting on the delimiter did not yield 3 fields
    NotNumeric,       // a field is not a finite decimal
};

std::string_view to_string(DecodeError e);

struct DecodeResult {
    bool ok = false;
    Triple value{};
    DecodeError error = DecodeError::EmptyInput;
    int field = -1;  // offending field index for NotNumeric, else -1
};

/// format(x) ++ "<br>" ++ format(y) ++ "<br>" ++ format(z); no terminator.
std::string encode_record(const Triple& t);
std::string encode_record(const AccelSample& s);

/// Split raw bytes on the literal delimiter and parse the three fields.
/// Accepts arbitrary bytes; this is the torn-read detection surface.
DecodeResult decode_record(std::string_view raw);

// --- GET query -------------------------------------------------------------

enum class QueryError {
    MissingSubmitMarker,  // no Button1 parameter: request must be ignored
    MissingField,         // an Editbox parameter is absent
    NotNumeric,           // an Editbox value is not a finite decimal
};

std::string_view to_string(QueryError e);

struct QueryResult {
    bool ok = false;
    Triple value{};
    QueryError error = QueryError::MissingSubmitMarker;
    std::string field;  // offending parameter name for MissingField/NotNumeric
};

/// ingest_path ++ "?Editbox1=..&Editbox2=..&Editbox3=..&Button1=Submit".
/// Values are percent-encoded, a byte-level no-op for decimal texts.
std::string build_query(const Triple& t, std::string_view ingest_path);
std::string build_query(const AccelSample& s, std::string_view ingest_path);

/// Parse the query part (no leading '?'). Button1 is a presence-only check:
/// any value, or none at all, passes; its value is ignored.
/// Duplicate parameters resolve to the last occurrence.
QueryResult parse_query(std::string_view query);

/// Percent-encode everything outside the URI unreserved set.
std::string percent_encode(std::string_view s);

/// Decode %XX escapes and '+' as space; malformed escapes pass through.
std::string percent_decode(std::string_view s);

}  // namespace relaykit
