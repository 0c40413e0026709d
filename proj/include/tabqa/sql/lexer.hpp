#pragma once

#include <string>
#include <vector>

#include "../util.hpp"

namespace tabqa {

struct SyntaxError : Error {
    size_t pos;
    SyntaxError(size_t p, const std::string& msg)
        : Error(msg + " (at byte " + std::to_string(p) + ")"), pos(p) {}
};

struct Token {
    enum Type {
        word,          // bare identifier or keyword, any script
        quoted_ident,  // `...`, text holds the unescaped name
        string_lit,    // "...", text holds the unescaped value
        number,        // digits of one script, optional sign and fraction
        symbol,        // ( ) , * = != <> < <= > >=
        end
    };

    Type type = end;
    std::string text;
    size_t pos = 0;
    double value = 0.0;     // number tokens
    bool integral = true;   // number tokens
};

// Keywords are plain words; classification happens in the parser so the
// lexer stays script-agnostic. Quoted regions never leak into word tokens.
inline std::vector<Token> lex_sql(std::string_view src) {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = src.size();
    auto is_symbol_start = [](char c) {
        return c == '(' || c == ')' || c == ',' || c == '*' || c == '=' || c == '!' ||
               c == '<' || c == '>';
    };
    while (i < n) {
        const char c = src[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (c == '`') {
            ++i;
            std::string name;
            bool closed = false;
            while (i < n) {
                if (src[i] == '`') {
                    if (i + 1 < n && src[i + 1] == '`') {
                        name.push_back('`');
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                name.push_back(src[i++]);
            }
            if (!closed) throw SyntaxError(t.pos, "unterminated `identifier`");
            if (trim(name).empty()) throw SyntaxError(t.pos, "empty `identifier`");
            t.type = Token::quoted_ident;
            t.text = std::move(name);
        } else if (c == '"') {
            ++i;
            std::string val;
            bool closed = false;
            while (i < n) {
                if (src[i] == '"') {
                    if (i + 1 < n && src[i + 1] == '"') {
                        val.push_back('"');
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                val.push_back(src[i++]);
            }
            if (!closed) throw SyntaxError(t.pos, "unterminated string literal");
            t.type = Token::string_lit;
            t.text = std::move(val);
        } else if (is_symbol_start(c)) {
            t.type = Token::symbol;
            if (c == '!' ) {
                if (i + 1 < n && src[i + 1] == '=') {
                    t.text = "!=";
                    i += 2;
                } else {
                    throw SyntaxError(i, "stray '!'");
                }
            } else if (c == '<') {
                if (i + 1 < n && src[i + 1] == '=') {
                    t.text = "<=";
                    i += 2;
                } else if (i + 1 < n && src[i + 1] == '>') {
                    t.text = "<>";
                    i += 2;
                } else {
                    t.text = "<";
                    ++i;
                }
            } else if (c == '>') {
                if (i + 1 < n && src[i + 1] == '=') {
                    t.text = ">=";
                    i += 2;
                } else {
                    t.text = ">";
                    ++i;
                }
            } else {
                t.text = std::string(1, c);
                ++i;
            }
        } else {
            // Bare run up to whitespace, symbol or quote. A leading sign
            // only sticks to a token that parses as a number.
            size_t j = i;
            if ((c == '-' || c == '+') && j + 1 < n) ++j;
            while (j < n && !is_space(src[j]) && !is_symbol_start(src[j]) && src[j] != '`' &&
                   src[j] != '"')
                ++j;
            if (j == i) throw SyntaxError(i, "unexpected byte");
            std::string run(src.substr(i, j - i));
            if (const auto num = parse_number(run)) {
                t.type = Token::number;
                t.text = std::move(run);
                t.value = num->value;
                t.integral = num->integral;
            } else if (c == '-' || c == '+') {
                throw SyntaxError(i, "stray sign '" + std::string(1, c) + "'");
            } else {
                t.type = Token::word;
                t.text = std::move(run);
            }
            i = j;
        }
        out.push_back(std::move(t));
    }
    Token e;
    e.type = Token::end;
    e.pos = n;
    out.push_back(std::move(e));
    return out;
}

}  // namespace tabqa
