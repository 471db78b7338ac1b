#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace demandcast::text {

/// Shortest-safe decimal rendering: 17 significant digits, so every finite
/// double survives a write/read cycle bit-exactly.
std::string format_real(double value);

double parse_real(std::string_view token);
long long parse_integer(std::string_view token);

/// Line-oriented writer for the snapshot family: `key v1 v2 ...` per line.
class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void header(std::string_view kind, int version);
    void line(std::string_view key, std::string_view value);
    void line(std::string_view key, long long value);
    void line_real(std::string_view key, double value);
    void line_reals(std::string_view key, std::span<const double> values);

private:
    std::ostream& out_;
};

/// Reader matching Writer. Blank lines and lines starting with '#' are skipped.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    /// Checks `kind version` and returns the version.
    int header(std::string_view kind);

    /// Reads the next line, requires its first token to be `key` and returns
    /// the remaining tokens.
    std::vector<std::string> expect(std::string_view key);

    std::string expect_word(std::string_view key);
    /// Remaining tokens of the line joined by single spaces.
    std::string expect_text(std::string_view key);
    long long expect_integer(std::string_view key);
    double expect_real(std::string_view key);
    std::vector<double> expect_reals(std::string_view key, std::size_t count);

    [[nodiscard]] std::size_t line_number() const noexcept { return line_no_; }

private:
    std::vector<std::string> next_tokens();

    std::istream& in_;
    std::size_t line_no_ = 0;
};

}  // namespace demandcast::text
