#include "demandcast/text_format.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "demandcast/error.hpp"

namespace demandcast::text {

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

double parse_real(std::string_view token) {
    double value = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(fmt::format("not a number: '{}'", token));
    }
    return value;
}

long long parse_integer(std::string_view token) {
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(fmt::format("not an integer: '{}'", token));
    }
    return value;
}

void Writer::header(std::string_view kind, int version) {
    out_ << kind << ' ' << version << '\n';
}

void Writer::line(std::string_view key, std::string_view value) {
    out_ << key << ' ' << value << '\n';
}

void Writer::line(std::string_view key, long long value) {
    out_ << key << ' ' << value << '\n';
}

void Writer::line_real(std::string_view key, double value) {
    out_ << key << ' ' << format_real(value) << '\n';
}

void Writer::line_reals(std::string_view key, std::span<const double> values) {
    out_ << key;
    for (double v : values) out_ << ' ' << format_real(v);
    out_ << '\n';
}

std::vector<std::string> Reader::next_tokens() {
    std::string raw;
    while (std::getline(in_, raw)) {
        ++line_no_;
        if (raw.empty() || raw.front() == '#') continue;
        std::istringstream ss(raw);
        std::vector<std::string> tokens;
        for (std::string t; ss >> t;) tokens.push_back(std::move(t));
        if (!tokens.empty()) return tokens;
    }
    throw ParseError(fmt::format("unexpected end of snapshot after line {}", line_no_));
}

int Reader::header(std::string_view kind) {
    auto tokens = next_tokens();
    if (tokens.size() != 2 || tokens[0] != kind) {
        throw ParseError(fmt::format("expected '{} <version>' header", kind));
    }
    return static_cast<int>(parse_integer(tokens[1]));
}

std::vector<std::string> Reader::expect(std::string_view key) {
    auto tokens = next_tokens();
    if (tokens.front() != key) {
        throw ParseError(fmt::format("line {}: expected '{}', found '{}'", line_no_, key, tokens.front()));
    }
    tokens.erase(tokens.begin());
    return tokens;
}

std::string Reader::expect_word(std::string_view key) {
    auto tokens = expect(key);
    if (tokens.size() != 1) throw ParseError(fmt::format("line {}: '{}' takes one value", line_no_, key));
    return tokens.front();
}

std::string Reader::expect_text(std::string_view key) {
    auto tokens = expect(key);
    std::string joined;
    for (const auto& t : tokens) {
        if (!joined.empty()) joined += ' ';
        joined += t;
    }
    return joined;
}

long long Reader::expect_integer(std::string_view key) { return parse_integer(expect_word(key)); }

double Reader::expect_real(std::string_view key) { return parse_real(expect_word(key)); }

std::vector<double> Reader::expect_reals(std::string_view key, std::size_t count) {
    auto tokens = expect(key);
    if (tokens.size() != count) {
        throw ParseError(fmt::format("line {}: '{}' expects {} values, found {}", line_no_, key, count,
                                     tokens.size()));
    }
    std::vector<double> values;
    values.reserve(count);
    for (const auto& t : tokens) values.push_back(parse_real(t));
    return values;
}

}  // namespace demandcast::text
